#pragma once

#include <cstddef>
#include <vector>

#include "spectral/episode.hpp"
#include "spectral/mat.hpp"
#include "spectral/rng.hpp"

namespace spectral {

enum class Activation { ReLU, Softmax };

struct AttnHead {
    Mat v, q, k;  // D x D each
};

struct AttnLayer {
    std::vector<AttnHead> heads;
    Activation activation = Activation::ReLU;

    std::size_t dim() const noexcept { return heads.empty() ? 0 : heads.front().v.rows(); }
};

struct FcLayer {
    Mat w1;  // D' x D
    Mat w2;  // D x D'
};

struct Block {
    AttnLayer attn;
    FcLayer fc;
};

/// Full parameter set: L (attention, FC) pairs plus output adapters.
struct TransformerParams {
    std::vector<Block> layers;
    Mat w0_out;  // d1 x D
    Mat w1_out;  // N x d2

    std::size_t depth() const noexcept { return layers.size(); }
    std::size_t embed_dim() const noexcept { return w0_out.cols(); }
    std::size_t max_heads() const noexcept;
    std::size_t total_heads() const noexcept;
    std::size_t parameter_count() const noexcept;
    /// Throws DimMismatch if any shape is inconsistent.
    void validate() const;
};

struct Arch {
    std::size_t layers = 1;  // L
    std::size_t heads = 1;   // M
    std::size_t embed = 1;   // D
    std::size_t hidden = 1;  // D'
    std::size_t out_rows = 1;  // d1
    std::size_t out_cols = 1;  // d2
    std::size_t tokens = 1;    // N
    Activation activation = Activation::ReLU;
};

/// H + (1/N) sum_m (V_m H) sigma((Q_m H)^T (K_m H)).
Mat attn_forward(const AttnLayer& layer, const Mat& h);
/// The ReLU formula without the activation switch.
Mat relu_attn_forward(const AttnLayer& layer, const Mat& h);
/// H + W2 relu(W1 H).
Mat fc_forward(const FcLayer& layer, const Mat& h);
/// Activation before the output adapters.
Mat tf_body(const TransformerParams& params, const Mat& h);
/// W0_out * body(H) * W1_out.
Mat tf_forward(const TransformerParams& params, const Mat& h);
Mat tf_forward(const TransformerParams& params, const Episode& ep);

/// Per-head intermediates kept for the backward pass.
struct HeadCache {
    Mat qh, kh, vh;
    Mat scores;      // (QH)^T (KH), N x N
    Mat activated;   // sigma(scores)
};

struct LayerCache {
    Mat attn_in;
    std::vector<HeadCache> heads;
    Mat fc_in;        // output of the attention layer
    Mat fc_pre;       // W1 * fc_in
    Mat fc_act;       // relu(fc_pre)
};

struct ForwardTrace {
    std::vector<LayerCache> layers;
    Mat body_out;
    Mat output;
};

ForwardTrace tf_forward_trace(const TransformerParams& params, const Mat& h);

/// max over layers of { max_m max(|Q|,|K|) + sum_m |V| + |W1| + |W2| + |W0_out| + |W1_out| }.
double op_norm(const TransformerParams& params);

/// Layer weights ~ N(0, (scale/sqrt(D))^2); adapters ~ N(0, 1/D) and N(0, 1/N).
TransformerParams init_params(const Arch& arch, double scale, Rng& rng);
TransformerParams zero_params(const Arch& arch);

void relu_inplace(Mat& m);
/// Column-wise softmax over rows.
Mat softmax_columns(const Mat& s);

}  // namespace spectral
