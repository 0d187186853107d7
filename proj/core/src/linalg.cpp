#include "spectral/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "spectral/error.hpp"

namespace spectral {

namespace {

constexpr double kZeroImageTol = 1e-14;
constexpr double kUnitTol = 1e-10;

void require_unit(std::span<const double> v, const char* where) {
    const double n = norm2(v);
    if (std::abs(n - 1.0) > kUnitTol) {
        throw Error(ErrorKind::DimMismatch,
                    std::string(where) + ": vector is not unit norm (norm " + std::to_string(n) + ")");
    }
}

void require_square(const Mat& a, const char* where) {
    if (a.rows() != a.cols()) {
        throw Error(ErrorKind::DimMismatch, std::string(where) + ": matrix must be square");
    }
}

}  // namespace

double SpectralResult::gap() const {
    double g = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < eigvals.size(); ++i)
        for (std::size_t j = i + 1; j < eigvals.size(); ++j)
            g = std::min(g, std::abs(eigvals[i] - eigvals[j]));
    return g;
}

SpectralResult SpectralResult::sorted() const {
    std::vector<std::size_t> order(eigvals.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return eigvals[a] > eigvals[b]; });
    SpectralResult out{Vec(eigvals.size()), Mat(eigvecs.rows(), eigvecs.cols())};
    for (std::size_t i = 0; i < order.size(); ++i) {
        out.eigvals[i] = eigvals[order[i]];
        out.eigvecs.set_col(i, eigvecs.col(order[i]));
    }
    return out;
}

void apply_sign_convention(std::span<double> v) {
    if (v.empty()) return;
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (std::abs(v[i]) > std::abs(v[best])) best = i;
    if (v[best] < 0.0)
        for (double& x : v) x = -x;
}

void apply_sign_convention(Mat& columns) {
    for (std::size_t j = 0; j < columns.cols(); ++j) {
        Vec c = columns.col(j);
        apply_sign_convention(c);
        columns.set_col(j, c);
    }
}

Mat symmetrize(const Mat& x) {
    const std::size_t d = x.rows();
    Mat a(d, d);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i; j < d; ++j) {
            const double s = dot(x.row(i), x.row(j));
            a(i, j) = s;
            a(j, i) = s;
        }
    }
    return a;
}

SpectralResult eigh_full(const Mat& a_in, const JacobiOptions& opts) {
    require_square(a_in, "eigh_oracle");
    if (asymmetry(a_in) > opts.symmetry_tol) {
        throw Error(ErrorKind::NonSymmetric,
                    "max|A - A^T| = " + std::to_string(asymmetry(a_in)));
    }
    const std::size_t n = a_in.rows();
    Mat a = a_in;
    Mat v = Mat::identity(n);
    const double scale = frobenius_norm(a_in);

    auto off_norm = [&] {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (i != j) s += a(i, j) * a(i, j);
        return std::sqrt(s);
    };

    for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
        if (off_norm() <= opts.rel_tol * scale) break;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                // Classic symmetric Schur rotation (Golub & Van Loan 8.5.2).
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = std::copysign(1.0, theta) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t r = 0; r < n; ++r) {
                    const double arp = a(r, p);
                    const double arq = a(r, q);
                    a(r, p) = c * arp - s * arq;
                    a(r, q) = s * arp + c * arq;
                }
                for (std::size_t r = 0; r < n; ++r) {
                    const double apr = a(p, r);
                    const double aqr = a(q, r);
                    a(p, r) = c * apr - s * aqr;
                    a(q, r) = s * apr + c * aqr;
                }
                for (std::size_t r = 0; r < n; ++r) {
                    const double vrp = v(r, p);
                    const double vrq = v(r, q);
                    v(r, p) = c * vrp - s * vrq;
                    v(r, q) = s * vrp + c * vrq;
                }
            }
        }
    }

    SpectralResult out{Vec(n), Mat(n, n)};
    for (std::size_t i = 0; i < n; ++i) out.eigvals[i] = a(i, i);
    out.eigvecs = v;
    out = out.sorted();
    apply_sign_convention(out.eigvecs);
    return out;
}

SpectralResult eigh_oracle(const Mat& a, std::size_t k, const JacobiOptions& opts) {
    require_square(a, "eigh_oracle");
    if (k < 1 || k > a.rows()) {
        throw Error(ErrorKind::KTooLarge,
                    "k = " + std::to_string(k) + " with d = " + std::to_string(a.rows()));
    }
    SpectralResult full = eigh_full(a, opts);
    SpectralResult out{Vec(full.eigvals.begin(), full.eigvals.begin() + static_cast<long>(k)),
                       full.eigvecs.block(0, 0, a.rows(), k)};
    return out;
}

Vec power_iterate(const Mat& a, std::span<const double> v) {
    require_unit(v, "power_iterate");
    Vec w = matvec(a, v);
    const double n = norm2(w);
    if (n < kZeroImageTol) {
        throw Error(ErrorKind::ZeroImage, "||Av|| = " + std::to_string(n));
    }
    for (double& x : w) x /= n;
    return w;
}

Mat deflate(const Mat& a, double lambda, std::span<const double> v) {
    require_square(a, "deflate");
    require_unit(v, "deflate");
    if (v.size() != a.rows()) throw Error(ErrorKind::DimMismatch, "deflate: vector length");
    const std::size_t d = a.rows();
    Mat b = a;
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) b(i, j) -= lambda * v[i] * v[j];
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i + 1; j < d; ++j) {
            const double m = 0.5 * (b(i, j) + b(j, i));
            b(i, j) = m;
            b(j, i) = m;
        }
    }
    return b;
}

SpectralResult power_method_sym(const Mat& a, std::size_t tau, std::size_t k,
                                const std::vector<Vec>& init) {
    require_square(a, "power_method");
    const std::size_t d = a.rows();
    if (k < 1 || k > d) {
        throw Error(ErrorKind::KTooLarge, "k = " + std::to_string(k) + " with d = " + std::to_string(d));
    }
    if (tau < 1) throw Error(ErrorKind::ConfigError, "power_method: tau must be >= 1");
    if (init.size() < k) throw Error(ErrorKind::DimMismatch, "power_method: need k init vectors");

    SpectralResult out{Vec(k), Mat(d, k)};
    Mat a_l = a;
    for (std::size_t l = 0; l < k; ++l) {
        if (init[l].size() != d) throw Error(ErrorKind::DimMismatch, "power_method: init length");
        Vec v = init[l];
        for (std::size_t t = 0; t < tau; ++t) v = power_iterate(a_l, v);
        // Eigenvalue estimate as ||A_l v||, not the Rayleigh quotient.
        const double lambda = norm2(matvec(a_l, v));
        out.eigvals[l] = lambda;
        out.eigvecs.set_col(l, v);
        a_l = deflate(a_l, lambda, v);
    }
    apply_sign_convention(out.eigvecs);
    return out;
}

SpectralResult power_method(const Mat& x, std::size_t tau, std::size_t k,
                            const std::vector<Vec>& init) {
    if (k < 1 || k > x.rows()) {
        throw Error(ErrorKind::KTooLarge,
                    "k = " + std::to_string(k) + " with d = " + std::to_string(x.rows()));
    }
    return power_method_sym(symmetrize(x), tau, k, init);
}

Vec sample_unit_sphere(std::size_t d, Rng& rng) {
    if (d < 1) throw Error(ErrorKind::ConfigError, "sample_unit_sphere: d must be >= 1");
    Vec v(d);
    for (;;) {
        for (double& x : v) x = rng.normal();
        const double n = norm2(v);
        if (n >= 1e-12) {
            for (double& x : v) x /= n;
            return v;
        }
    }
}

double spectral_norm(const Mat& w, int max_iter, double rel_tol) {
    if (w.empty()) return 0.0;
    const double fro = frobenius_norm(w);
    if (fro == 0.0) return 0.0;
    // Deterministic start with nonzero overlap on every singular direction generically.
    const std::size_t n = w.cols();
    Vec v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 + 0.1 * static_cast<double>(i % 7) - 0.013 * static_cast<double>(i);
    double vn = norm2(v);
    for (double& x : v) x /= vn;
    const Mat wt = w.transpose();
    double sigma = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        Vec u = matvec(w, v);
        Vec z = matvec(wt, u);
        const double zn = norm2(z);
        if (zn == 0.0) {
            // Start happened to lie in the kernel; fall back to the largest column.
            std::size_t best = 0;
            double bn = -1.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double cn = norm2(w.col(j));
                if (cn > bn) { bn = cn; best = j; }
            }
            std::fill(v.begin(), v.end(), 0.0);
            v[best] = 1.0;
            continue;
        }
        const double next = std::sqrt(zn);
        for (std::size_t i = 0; i < n; ++i) v[i] = z[i] / zn;
        if (std::abs(next - sigma) <= rel_tol * next) {
            sigma = next;
            break;
        }
        sigma = next;
    }
    return sigma;
}

}  // namespace spectral
