#include "spectral/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

#include "spectral/error.hpp"

namespace spectral {

namespace {

constexpr double kEps = 1e-8;

void same_shape(const Mat& a, const Mat& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols() || a.cols() == 0) {
        throw Error(ErrorKind::ShapeMismatch, "expected matching non-empty shapes, got " + std::to_string(a.rows()) +
                                                  "x" + std::to_string(a.cols()) + " and " +
                                                  std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
    }
}

void check_orthonormal(const Mat& v, const char* name) {
    const Mat g = matmul_tn(v, v);
    for (std::size_t i = 0; i < g.rows(); ++i) {
        for (std::size_t j = 0; j < g.cols(); ++j) {
            if (std::abs(g(i, j) - (i == j ? 1.0 : 0.0)) > kEps) {
                throw Error(ErrorKind::NotOrthonormal, std::string(name) + " columns are not orthonormal");
            }
        }
    }
}

void same_length(std::size_t a, std::size_t b) {
    if (a != b) throw Error(ErrorKind::LengthMismatch, std::to_string(a) + " vs " + std::to_string(b));
}

double choose2(long long n) { return 0.5 * static_cast<double>(n) * static_cast<double>(n - 1); }

}  // namespace

double rmse_eigvals(const Vec& truth, const Vec& pred, bool squared) {
    same_length(truth.size(), pred.size());
    if (truth.empty()) throw Error(ErrorKind::LengthMismatch, "need at least one eigenvalue");
    double s = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double r = (truth[i] - pred[i]) / (truth[i] + kEps);
        s += squared ? r * r : r;
    }
    return s / static_cast<double>(truth.size());
}

double cos_loss(const Mat& v, const Mat& vhat) {
    same_shape(v, vhat);
    double s = 0.0;
    for (std::size_t c = 0; c < v.cols(); ++c) {
        double vv = 0.0, hh = 0.0, vh = 0.0;
        for (std::size_t r = 0; r < v.rows(); ++r) {
            vv += v(r, c) * v(r, c);
            hh += vhat(r, c) * vhat(r, c);
            vh += v(r, c) * vhat(r, c);
        }
        s += 1.0 - vh / std::max(std::sqrt(vv) * std::sqrt(hh), kEps);
    }
    return s / static_cast<double>(v.cols());
}

double eigenspace_loss_unchecked(const Mat& v, const Mat& vhat) {
    if (v.rows() != vhat.rows()) throw Error(ErrorKind::ShapeMismatch, "row counts differ");
    const Mat diff = matmul_nt(v, v) - matmul_nt(vhat, vhat);
    const double f = frobenius_norm(diff);
    return 0.5 * f * f;
}

double eigenspace_loss(const Mat& v, const Mat& vhat) {
    same_shape(v, vhat);
    check_orthonormal(v, "V");
    check_orthonormal(vhat, "V_hat");
    return eigenspace_loss_unchecked(v, vhat);
}

double gmm_loss_k(const std::vector<int>& zhat, const std::vector<int>& z, std::size_t k) {
    same_length(zhat.size(), z.size());
    if (z.empty()) throw Error(ErrorKind::LengthMismatch, "label sequences must be non-empty");
    if (k > 8) throw Error(ErrorKind::KTooLarge, "permutation search supports k <= 8");
    if (k < 1) throw Error(ErrorKind::KTooLarge, "k must be >= 1");
    for (std::size_t i = 0; i < z.size(); ++i) {
        if (z[i] < 0 || zhat[i] < 0 || static_cast<std::size_t>(z[i]) >= k || static_cast<std::size_t>(zhat[i]) >= k) {
            throw Error(ErrorKind::ConfigError, "labels must lie in [0, k)");
        }
    }
    // Confusion counts make each permutation O(k).
    std::vector<std::size_t> conf(k * k, 0);
    for (std::size_t i = 0; i < z.size(); ++i) ++conf[static_cast<std::size_t>(z[i]) * k + zhat[i]];
    std::vector<std::size_t> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    std::size_t best = 0;
    do {
        std::size_t hit = 0;
        for (std::size_t a = 0; a < k; ++a) hit += conf[a * k + perm[a]];
        best = std::max(best, hit);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return static_cast<double>(z.size() - best) / static_cast<double>(z.size());
}

ContingencyTable ContingencyTable::from_labels(const std::vector<int>& a, const std::vector<int>& b) {
    same_length(a.size(), b.size());
    std::map<int, std::size_t> ia, ib;
    for (int v : a) ia.emplace(v, 0);
    for (int v : b) ib.emplace(v, 0);
    std::size_t n = 0;
    for (auto& [_, i] : ia) i = n++;
    n = 0;
    for (auto& [_, i] : ib) i = n++;
    ContingencyTable t;
    t.counts.assign(ia.size(), std::vector<long long>(ib.size(), 0));
    t.row_sums.assign(ia.size(), 0);
    t.col_sums.assign(ib.size(), 0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        const std::size_t r = ia[a[i]];
        const std::size_t c = ib[b[i]];
        ++t.counts[r][c];
        ++t.row_sums[r];
        ++t.col_sums[c];
    }
    t.total = static_cast<long long>(a.size());
    return t;
}

double ari(const std::vector<int>& a, const std::vector<int>& b) {
    const ContingencyTable t = ContingencyTable::from_labels(a, b);
    if (t.total == 0) throw Error(ErrorKind::LengthMismatch, "label sequences must be non-empty");
    double index = 0.0, sa = 0.0, sb = 0.0;
    for (const auto& row : t.counts) {
        for (long long c : row) index += choose2(c);
    }
    for (long long c : t.row_sums) sa += choose2(c);
    for (long long c : t.col_sums) sb += choose2(c);
    const double pairs = choose2(t.total);
    const double expected = pairs > 0.0 ? sa * sb / pairs : 0.0;
    const double max_index = 0.5 * (sa + sb);
    const double denom = max_index - expected;
    // Both partitions trivial in the same way (all singletons or one cluster each).
    if (denom == 0.0) return 1.0;
    return (index - expected) / denom;
}

double nmi(const std::vector<int>& a, const std::vector<int>& b, NmiNorm norm) {
    const ContingencyTable t = ContingencyTable::from_labels(a, b);
    if (t.total == 0) throw Error(ErrorKind::LengthMismatch, "label sequences must be non-empty");
    const double n = static_cast<double>(t.total);
    auto entropy = [n](const std::vector<long long>& sums) {
        double h = 0.0;
        for (long long c : sums) {
            if (c > 0) {
                const double p = static_cast<double>(c) / n;
                h -= p * std::log(p);
            }
        }
        return h;
    };
    const double ha = entropy(t.row_sums);
    const double hb = entropy(t.col_sums);
    double mi = 0.0;
    for (std::size_t i = 0; i < t.counts.size(); ++i) {
        for (std::size_t j = 0; j < t.counts[i].size(); ++j) {
            const long long c = t.counts[i][j];
            if (c == 0) continue;
            const double pij = static_cast<double>(c) / n;
            mi += pij * std::log(pij * n * n / (static_cast<double>(t.row_sums[i]) * static_cast<double>(t.col_sums[j])));
        }
    }
    const double denom = norm == NmiNorm::Geometric ? std::sqrt(ha * hb) : 0.5 * (ha + hb);
    if (denom <= 0.0) return 0.0;
    return std::clamp(mi / denom, 0.0, 1.0);
}

}  // namespace spectral
