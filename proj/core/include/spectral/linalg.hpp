#pragma once

#include <cstddef>
#include <vector>

#include "spectral/mat.hpp"
#include "spectral/rng.hpp"

namespace spectral {

/// Top-k eigenpairs. eigvecs is d x k with unit columns.
struct SpectralResult {
    Vec eigvals;
    Mat eigvecs;

    std::size_t k() const noexcept { return eigvals.size(); }
    Vec vector(std::size_t i) const { return eigvecs.col(i); }
    /// Smallest pairwise eigenvalue separation; +inf when k < 2.
    double gap() const;
    /// Copy with eigenpairs reordered by descending eigenvalue.
    SpectralResult sorted() const;
};

/// Flip v so that its largest-magnitude entry (lowest index on ties) is >= 0.
void apply_sign_convention(std::span<double> v);
void apply_sign_convention(Mat& columns);

/// A = X X^T. Output is exactly symmetric.
Mat symmetrize(const Mat& x);

struct JacobiOptions {
    double rel_tol = 1e-12;
    int max_sweeps = 100;
    double symmetry_tol = 1e-9;
};

/// Reference top-k eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
SpectralResult eigh_oracle(const Mat& a, std::size_t k, const JacobiOptions& opts = {});
/// Full eigendecomposition (descending), same solver.
SpectralResult eigh_full(const Mat& a, const JacobiOptions& opts = {});

/// Av / ||Av||; throws ZeroImage when ||Av|| < 1e-14.
Vec power_iterate(const Mat& a, std::span<const double> v);

/// A - lambda v v^T, re-symmetrized.
Mat deflate(const Mat& a, double lambda, std::span<const double> v);

/// Power method with deflation on A = X X^T. Results are in recovery order.
SpectralResult power_method(const Mat& x, std::size_t tau, std::size_t k,
                            const std::vector<Vec>& init);
/// Same iteration on an already-symmetric matrix.
SpectralResult power_method_sym(const Mat& a, std::size_t tau, std::size_t k,
                                const std::vector<Vec>& init);

Vec sample_unit_sphere(std::size_t d, Rng& rng);

/// Largest singular value via power iteration on W^T W.
double spectral_norm(const Mat& w, int max_iter = 300, double rel_tol = 1e-10);

}  // namespace spectral
