#pragma once

#include <cstddef>
#include <vector>

#include "spectral/mat.hpp"
#include "spectral/rng.hpp"

namespace spectral {

using Labels = std::vector<int>;

struct ClusterAssignment {
    Labels labels;
    Vec direction;    // unit vector used for the projection
    Vec projections;  // direction^T (X_i - center)

    std::size_t size() const noexcept { return labels.size(); }
};

struct CovEstimate {
    Mat cov;   // d x d
    Vec mean;  // d
};

/// Mean and covariance of the first n1 columns.
CovEstimate empirical_cov(const Mat& x, std::size_t n1);

/// Spectral bi-class clustering: top eigenvector of the first-n1 covariance by tau
/// power iterations, then the sign of v^T (X_i - X-bar). Exact zero goes to cluster 0.
ClusterAssignment spectral_cluster(const Mat& x, std::size_t n1, std::size_t tau, Rng& rng);
ClusterAssignment spectral_cluster(const Mat& x, std::size_t n1, std::size_t tau, const Vec& init);

/// Hyperplane through (mu0 + mu1) / 2 orthogonal to mu1 - mu0.
ClusterAssignment bayes_cluster(const Mat& x, const Vec& mu0, const Vec& mu1);

/// min over {z, 1 - z} of the mean absolute label difference.
double gmm_loss(const Labels& zhat, const Labels& z);

/// round(d^(1/3) N^(2/3) (sep + ln N)^(2/3)) clamped to [d + 2, floor(N / 2)].
std::size_t choose_n1(std::size_t d, std::size_t n, double sep_est = 0.0);

}  // namespace spectral
