#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "spectral/episode.hpp"
#include "spectral/linalg.hpp"
#include "spectral/mat.hpp"
#include "spectral/rng.hpp"
#include "spectral/transformer.hpp"

namespace spectral {

/// How the power iterations of one eigenvector are laid out in layers.
enum class PowerMode {
    Stepwise,  // tau x (apply, normalize): two layer pairs per iteration
    Squaring,  // binary powering of the scratch matrix, one normalization at the end
};

enum class ScheduleMode { Auto, Stepwise, Squaring };

struct ConstructionConfig {
    std::size_t tau = 8;
    double eps = 1e-2;         // relative accuracy of every ridge-function approximation
    double eps0 = 0.0;         // reported only; see implied_eps0
    double lambda_lo = 0.1;    // lower bound on the top-k eigenvalues of X X^T (or of Sigma-hat)
    double lambda_hi = 100.0;  // upper bound on the largest eigenvalue
    double beta = 5.0;         // GMM readout sharpness
    double delta = 0.1;        // floor on |<init, eigenvector>|
    double x_bound = 0.0;      // GMM: bound on ||X_i - X-bar||; 0 derives it from lambda_hi and N1
    double tanh_limit = 20.0;
    double pad = 4.0;          // multiplicative slack on every approximation interval
    ScheduleMode schedule = ScheduleMode::Auto;

    void validate() const;
};

struct AuxMatrix {
    Mat p;
    AuxLayout layout;
};

/// P = [0; [I_d|0]; sphere; 0 ... 0] with k result placeholders.
AuxMatrix build_aux_pca(std::size_t d, std::size_t n, std::size_t k, Rng& rng);
/// Same layout with caller-supplied initial vectors (k unit vectors of length d).
AuxMatrix build_aux_pca(std::size_t d, std::size_t n, const std::vector<Vec>& init);

/// P = [0; [I_N1|0]; sphere (1 column); 0; bias row of ones].
AuxMatrix build_aux_gmm(std::size_t d, std::size_t n, std::size_t n1, Rng& rng);
AuxMatrix build_aux_gmm(std::size_t d, std::size_t n, std::size_t n1, const Vec& init);

/// Initial vectors stored in the sphere block.
std::vector<Vec> sphere_vectors(const Mat& p, const AuxLayout& layout);

/// Layer pairs required by the construction results.
std::size_t pca_layer_count(std::size_t tau, std::size_t k);
std::size_t gmm_layer_count(std::size_t tau);

/// Per-eigenvector power-stage layout that fits in pca_layer_count(tau, k) pairs.
std::vector<PowerMode> plan_power_stages(std::size_t tau, std::size_t k, ScheduleMode mode);

/// Solves tau = log(1 / (eps0 * delta)) / eps0 for eps0.
double implied_eps0(std::size_t tau, double delta);

struct ConstructionInfo {
    std::vector<PowerMode> modes;
    std::size_t layers = 0;
    std::size_t padding_layers = 0;
    std::size_t max_heads = 0;
    std::size_t total_heads = 0;
    std::size_t embed_dim = 0;
    double mask_scale = 0.0;
    double max_table_error = 0.0;  // worst calibrated relative/absolute error over all tables
    double implied_eps0 = 0.0;
};

TransformerParams build_pca_network(std::size_t d, std::size_t n, std::size_t k, const ConstructionConfig& cfg,
                                    const AuxLayout& layout, ConstructionInfo* info = nullptr);

/// Output is 1 x N with entries approximating tanh(beta * v1^T (X_i - X-bar)).
TransformerParams build_gmm_network(std::size_t d, std::size_t n, std::size_t n1, const ConstructionConfig& cfg,
                                    const AuxLayout& layout, ConstructionInfo* info = nullptr);

struct VerifyReport {
    Vec cos_sim;         // |cos| between network column and reference vector
    Vec vec_error;       // min(||a - b||, ||a + b||)
    Vec eigval_rel_err;  // Rayleigh quotient of the network column vs reference eigenvalue
    double max_vec_error = 0.0;
    double min_cos_sim = 1.0;
    std::size_t layer_count = 0;
    std::size_t max_heads = 0;
    std::size_t total_heads = 0;
    Mat output;
};

/// Runs the network on `ep` and compares its columns with `reference` (oracle or power method).
VerifyReport verify_construction(const TransformerParams& params, const Episode& ep, const SpectralResult& reference);

struct GmmVerifyReport {
    double sign_agreement = 0.0;  // fraction of columns whose sign matches, best over global flip
    double max_abs_output = 0.0;
    std::size_t layer_count = 0;
    std::size_t max_heads = 0;
    std::size_t total_heads = 0;
    Mat output;
};

/// Compares the sign of the network output with reference labels in {0, 1}.
GmmVerifyReport verify_gmm_construction(const TransformerParams& params, const Episode& ep,
                                        const std::vector<int>& reference_labels);

std::string to_string(PowerMode m);

}  // namespace spectral
