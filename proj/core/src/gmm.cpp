#include "spectral/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "spectral/error.hpp"
#include "spectral/linalg.hpp"

namespace spectral {

CovEstimate empirical_cov(const Mat& x, std::size_t n1) {
    if (n1 < 1 || n1 > x.cols()) {
        throw Error(ErrorKind::BadSplit, "N1 = " + std::to_string(n1) + " outside [1, " + std::to_string(x.cols()) + "]");
    }
    const std::size_t d = x.rows();
    CovEstimate e;
    e.mean.assign(d, 0.0);
    for (std::size_t i = 0; i < n1; ++i) {
        for (std::size_t r = 0; r < d; ++r) e.mean[r] += x(r, i);
    }
    for (double& m : e.mean) m /= static_cast<double>(n1);
    Mat y(d, n1);
    for (std::size_t i = 0; i < n1; ++i) {
        for (std::size_t r = 0; r < d; ++r) y(r, i) = x(r, i) - e.mean[r];
    }
    e.cov = symmetrize(y);
    e.cov *= 1.0 / static_cast<double>(n1);
    return e;
}

namespace {

ClusterAssignment project(const Mat& x, const Vec& dir, const Vec& center) {
    ClusterAssignment a;
    a.direction = dir;
    a.labels.resize(x.cols());
    a.projections.resize(x.cols());
    for (std::size_t j = 0; j < x.cols(); ++j) {
        double p = 0.0;
        for (std::size_t r = 0; r < x.rows(); ++r) p += dir[r] * (x(r, j) - center[r]);
        a.projections[j] = p;
        a.labels[j] = p > 0.0 ? 1 : 0;
    }
    return a;
}

void check_split(const Mat& x, std::size_t n1) {
    const std::size_t d = x.rows();
    const std::size_t n = x.cols();
    if (n1 < d + 2 || n1 + 1 > n) {
        throw Error(ErrorKind::BadSplit, "N1 = " + std::to_string(n1) + " must satisfy d + 2 <= N1 <= N - 1");
    }
}

}  // namespace

ClusterAssignment spectral_cluster(const Mat& x, std::size_t n1, std::size_t tau, Rng& rng) {
    check_split(x, n1);
    return spectral_cluster(x, n1, tau, sample_unit_sphere(x.rows(), rng));
}

ClusterAssignment spectral_cluster(const Mat& x, std::size_t n1, std::size_t tau, const Vec& init) {
    check_split(x, n1);
    if (tau < 1) throw Error(ErrorKind::ConfigError, "tau must be >= 1");
    const CovEstimate e = empirical_cov(x, n1);
    SpectralResult r;
    try {
        r = power_method_sym(e.cov, tau, 1, {init});
    } catch (const Error& err) {
        if (err.kind() == ErrorKind::ZeroImage) {
            throw Error(ErrorKind::DegenerateData, "covariance of the first N1 columns is zero");
        }
        throw;
    }
    return project(x, r.vector(0), e.mean);
}

ClusterAssignment bayes_cluster(const Mat& x, const Vec& mu0, const Vec& mu1) {
    if (mu0.size() != x.rows() || mu1.size() != x.rows()) {
        throw Error(ErrorKind::DimMismatch, "means must have length d");
    }
    if (mu0 == mu1) throw Error(ErrorKind::IdenticalMeans, "mu0 == mu1, no decision boundary");
    Vec dir(mu0.size());
    Vec mid(mu0.size());
    for (std::size_t r = 0; r < mu0.size(); ++r) {
        dir[r] = mu1[r] - mu0[r];
        mid[r] = 0.5 * (mu0[r] + mu1[r]);
    }
    return project(x, dir, mid);
}

double gmm_loss(const Labels& zhat, const Labels& z) {
    if (zhat.size() != z.size() || z.empty()) {
        throw Error(ErrorKind::LengthMismatch, "label sequences must be non-empty and of equal length");
    }
    double same = 0.0;
    double flip = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        same += std::abs(zhat[i] - z[i]);
        flip += std::abs(zhat[i] - (1 - z[i]));
    }
    return std::min(same, flip) / static_cast<double>(z.size());
}

std::size_t choose_n1(std::size_t d, std::size_t n, double sep_est) {
    if (n < d + 4) throw Error(ErrorKind::NTooSmall, "choose_n1 needs N >= d + 4");
    if (!(sep_est >= 0.0)) throw Error(ErrorKind::ConfigError, "separation estimate must be >= 0");
    const double dn = static_cast<double>(d);
    const double nn = static_cast<double>(n);
    const double raw = std::cbrt(dn) * std::pow(nn, 2.0 / 3.0) * std::pow(sep_est + std::log(nn), 2.0 / 3.0);
    const double lo = static_cast<double>(d + 2);
    const double hi = static_cast<double>(n / 2);
    return static_cast<std::size_t>(std::clamp(std::round(raw), lo, std::max(lo, hi)));
}

}  // namespace spectral
