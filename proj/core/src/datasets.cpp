#include "spectral/datasets.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "spectral/error.hpp"
#include "spectral/linalg.hpp"

namespace spectral {

Mat gen_synthetic_pca(std::size_t d, std::size_t n, Rng& rng, const Mat* mixing) {
    if (d < 1 || n < 1) throw Error(ErrorKind::DimMismatch, "gen_synthetic_pca needs d, N >= 1");
    Mat l;
    if (mixing) {
        if (mixing->rows() != d || mixing->cols() != d) throw Error(ErrorKind::DimMismatch, "mixing must be d x d");
        l = *mixing;
    } else {
        l = Mat(d, d);
        for (double& v : l.data()) v = rng.normal();
    }
    Mat z(d, n);
    for (double& v : z.data()) v = rng.normal();
    return matmul(l, z);
}

std::vector<std::size_t> shuffled_indices(std::size_t n, Rng& rng) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.below(i));
        std::swap(idx[i - 1], idx[j]);
    }
    return idx;
}

GmmInstance gen_gmm(std::size_t d, std::size_t n, double sep, double sigma2, Rng& rng) {
    if (d < 1) throw Error(ErrorKind::DimMismatch, "gen_gmm needs d >= 1");
    if (n < 2) throw Error(ErrorKind::NTooSmall, "gen_gmm needs N >= 2");
    if (!(sep >= 0.0) || !std::isfinite(sep)) throw Error(ErrorKind::ConfigError, "separation must be >= 0");
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw Error(ErrorKind::ConfigError, "sigma2 must be > 0");
    GmmInstance g;
    g.sigma2 = sigma2;
    Vec c(d);
    for (double& v : c) v = rng.normal();
    const Vec u = sample_unit_sphere(d, rng);
    g.mu0.resize(d);
    g.mu1.resize(d);
    for (std::size_t r = 0; r < d; ++r) {
        g.mu0[r] = c[r] - 0.5 * sep * u[r];
        g.mu1[r] = c[r] + 0.5 * sep * u[r];
    }
    const std::size_t zeros = (n + 1) / 2;
    std::vector<int> ordered(n);
    for (std::size_t i = 0; i < n; ++i) ordered[i] = i < zeros ? 0 : 1;
    const auto perm = shuffled_indices(n, rng);
    g.z.resize(n);
    for (std::size_t i = 0; i < n; ++i) g.z[i] = ordered[perm[i]];
    const double s = std::sqrt(sigma2);
    g.x = Mat(d, n);
    for (std::size_t j = 0; j < n; ++j) {
        const Vec& mu = g.z[j] == 0 ? g.mu0 : g.mu1;
        for (std::size_t r = 0; r < d; ++r) g.x(r, j) = mu[r] + s * rng.normal();
    }
    return g;
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

bool parse_number(std::string_view s, double& out) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    if (s.empty()) return false;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc() && res.ptr == s.data() + s.size() && std::isfinite(out);
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> f;
    std::size_t start = 0;
    for (;;) {
        const std::size_t p = line.find(',', start);
        if (p == std::string_view::npos) {
            f.push_back(line.substr(start));
            return f;
        }
        f.push_back(line.substr(start, p - start));
        start = p + 1;
    }
}

}  // namespace

Mat parse_csv_matrix(std::string_view text, const CsvOptions& opts) {
    std::vector<std::vector<double>> rows;
    std::size_t width = 0;
    std::size_t line_no = 0;
    bool first = true;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        const std::string_view line = trim(text.substr(pos, end - pos));
        pos = end + 1;
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split_fields(line);
        std::vector<double> vals(fields.size());
        std::size_t bad = fields.size();
        for (std::size_t c = 0; c < fields.size() && bad == fields.size(); ++c) {
            if (!parse_number(fields[c], vals[c])) bad = c;
        }
        if (bad != fields.size()) {
            if (first) {
                first = false;
                continue;  // header row
            }
            throw Error(ErrorKind::ParseError, "line " + std::to_string(line_no) + ", column " +
                                                   std::to_string(bad + 1) + ": not a finite number: '" +
                                                   std::string(trim(fields[bad])) + "'");
        }
        first = false;
        if (rows.empty()) {
            width = vals.size();
        } else if (vals.size() != width) {
            throw Error(ErrorKind::RaggedRows, "line " + std::to_string(line_no) + " has " +
                                                   std::to_string(vals.size()) + " fields, expected " +
                                                   std::to_string(width));
        }
        rows.push_back(std::move(vals));
    }
    if (rows.empty()) throw Error(ErrorKind::ParseError, "no numeric rows");
    Mat m(rows.size(), width);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < width; ++c) m(r, c) = rows[r][c];
    }
    return opts.transpose ? m.transpose() : m;
}

Mat load_csv_matrix(const std::string& path, const CsvOptions& opts) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoError, "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_csv_matrix(ss.str(), opts);
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string to_csv(const Mat& m) {
    std::string out;
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < m.cols(); ++c) {
            if (c) out += ',';
            out += format_double(m(r, c));
        }
        out += '\n';
    }
    return out;
}

void write_csv_matrix(const std::string& path, const Mat& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + path);
    out << to_csv(m);
    if (!out) throw Error(ErrorKind::IoError, "write failed for " + path);
}

}  // namespace spectral
