#pragma once

#include <cstddef>
#include <vector>

#include "spectral/mat.hpp"

namespace spectral {

/// Squared: mean of ((l - l_hat) / (l + 1e-8))^2. Otherwise the signed mean of the ratios.
double rmse_eigvals(const Vec& truth, const Vec& pred, bool squared = true);

/// (1/k) sum_i 1 - <v_i, v_hat_i> / max(|v_i| |v_hat_i|, 1e-8).
double cos_loss(const Mat& v, const Mat& vhat);

/// 0.5 ||V V^T - V_hat V_hat^T||_F^2; both arguments must have orthonormal columns (1e-8).
double eigenspace_loss(const Mat& v, const Mat& vhat);
/// The same formula without the orthonormality check.
double eigenspace_loss_unchecked(const Mat& v, const Mat& vhat);

/// min over label permutations pi of the mismatch rate between pi(z) and zhat; k <= 8.
double gmm_loss_k(const std::vector<int>& zhat, const std::vector<int>& z, std::size_t k);

/// Co-occurrence counts n_ij between two labelings; labels are remapped to 0..r-1 in sorted order.
struct ContingencyTable {
    std::vector<std::vector<long long>> counts;
    std::vector<long long> row_sums;
    std::vector<long long> col_sums;
    long long total = 0;

    static ContingencyTable from_labels(const std::vector<int>& a, const std::vector<int>& b);
};

double ari(const std::vector<int>& a, const std::vector<int>& b);

enum class NmiNorm { Geometric, Arithmetic };

/// I(a; b) / norm(H(a), H(b)) with natural logs; 0/0 is 0.
double nmi(const std::vector<int>& a, const std::vector<int>& b, NmiNorm norm = NmiNorm::Geometric);

}  // namespace spectral
