#include "spectral/transformer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "spectral/error.hpp"
#include "spectral/linalg.hpp"

namespace spectral {

std::size_t AuxLayout::rows() const noexcept {
    std::size_t r = 0;
    for (const auto& b : blocks) r = std::max(r, b.offset + b.rows);
    return r;
}

std::string to_string(AuxVariant v) {
    switch (v) {
        case AuxVariant::None: return "none";
        case AuxVariant::Pca: return "pca";
        case AuxVariant::Gmm: return "gmm";
    }
    return "none";
}

Episode make_episode(const Mat& x, const Mat& p, const AuxLayout& layout, std::size_t embed_dim) {
    if (!p.empty() && p.cols() != x.cols()) {
        throw Error(ErrorKind::DimMismatch, "make_episode: X and P have different column counts");
    }
    const std::size_t stacked = x.rows() + p.rows();
    const std::size_t rows = embed_dim == 0 ? stacked : embed_dim;
    if (rows < stacked) {
        throw Error(ErrorKind::ConfigError, "make_episode: embedding dimension " + std::to_string(rows) +
                                                " smaller than [X; P] height " + std::to_string(stacked));
    }
    Episode ep;
    ep.d = x.rows();
    ep.layout = layout;
    ep.h = Mat(rows, x.cols());
    ep.h.set_block(0, 0, x);
    if (!p.empty()) ep.h.set_block(x.rows(), 0, p);
    return ep;
}

std::size_t TransformerParams::max_heads() const noexcept {
    std::size_t m = 0;
    for (const auto& b : layers) m = std::max(m, b.attn.heads.size());
    return m;
}

std::size_t TransformerParams::total_heads() const noexcept {
    std::size_t m = 0;
    for (const auto& b : layers) m += b.attn.heads.size();
    return m;
}

std::size_t TransformerParams::parameter_count() const noexcept {
    std::size_t n = w0_out.size() + w1_out.size();
    for (const auto& b : layers) {
        for (const auto& h : b.attn.heads) n += h.v.size() + h.q.size() + h.k.size();
        n += b.fc.w1.size() + b.fc.w2.size();
    }
    return n;
}

void TransformerParams::validate() const {
    if (layers.empty()) throw Error(ErrorKind::DimMismatch, "transformer needs at least one layer");
    const std::size_t d = w0_out.cols();
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& b = layers[l];
        const std::string where = "layer " + std::to_string(l) + ": ";
        if (b.attn.heads.empty()) throw Error(ErrorKind::DimMismatch, where + "attention has no heads");
        for (const auto& h : b.attn.heads) {
            for (const Mat* m : {&h.v, &h.q, &h.k}) {
                if (m->rows() != d || m->cols() != d) {
                    throw Error(ErrorKind::DimMismatch, where + "head matrices must be DxD");
                }
            }
        }
        if (b.fc.w1.cols() != d || b.fc.w2.rows() != d || b.fc.w1.rows() != b.fc.w2.cols()) {
            throw Error(ErrorKind::DimMismatch, where + "FC shapes inconsistent");
        }
    }
}

void relu_inplace(Mat& m) {
    for (double& x : m.data()) x = x > 0.0 ? x : 0.0;
}

Mat softmax_columns(const Mat& s) {
    Mat out(s.rows(), s.cols());
    for (std::size_t j = 0; j < s.cols(); ++j) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < s.rows(); ++i) mx = std::max(mx, s(i, j));
        double z = 0.0;
        for (std::size_t i = 0; i < s.rows(); ++i) {
            out(i, j) = std::exp(s(i, j) - mx);
            z += out(i, j);
        }
        for (std::size_t i = 0; i < s.rows(); ++i) out(i, j) /= z;
    }
    return out;
}

namespace {

void check_attn_dims(const AttnLayer& layer, const Mat& h) {
    if (layer.heads.empty()) throw Error(ErrorKind::DimMismatch, "attention layer has no heads");
    for (const auto& head : layer.heads) {
        if (head.q.cols() != h.rows() || head.k.cols() != h.rows() || head.v.cols() != h.rows() ||
            head.v.rows() != h.rows() || head.q.rows() != head.k.rows()) {
            throw Error(ErrorKind::DimMismatch,
                        "attention head incompatible with input of height " + std::to_string(h.rows()));
        }
    }
}

template <class Sigma>
Mat attention_impl(const AttnLayer& layer, const Mat& h, Sigma&& sigma, double prefactor,
                   std::vector<HeadCache>* cache) {
    check_attn_dims(layer, h);
    Mat acc(h.rows(), h.cols());
    for (const auto& head : layer.heads) {
        HeadCache hc;
        hc.qh = matmul(head.q, h);
        hc.kh = matmul(head.k, h);
        hc.vh = matmul(head.v, h);
        hc.scores = matmul_tn(hc.qh, hc.kh);
        hc.activated = sigma(hc.scores);
        acc += matmul(hc.vh, hc.activated);
        if (cache) cache->push_back(std::move(hc));
    }
    acc *= prefactor;
    return h + acc;
}

Mat relu_copy(const Mat& s) {
    Mat p = s;
    relu_inplace(p);
    return p;
}

Mat attention_dispatch(const AttnLayer& layer, const Mat& h, std::vector<HeadCache>* cache) {
    if (layer.activation == Activation::Softmax) {
        return attention_impl(layer, h, softmax_columns, 1.0, cache);
    }
    return attention_impl(layer, h, relu_copy, 1.0 / static_cast<double>(h.cols()), cache);
}

}  // namespace

Mat attn_forward(const AttnLayer& layer, const Mat& h) { return attention_dispatch(layer, h, nullptr); }

Mat relu_attn_forward(const AttnLayer& layer, const Mat& h) {
    return attention_impl(layer, h, relu_copy, 1.0 / static_cast<double>(h.cols()), nullptr);
}

Mat fc_forward(const FcLayer& layer, const Mat& h) {
    if (layer.w1.cols() != h.rows() || layer.w2.rows() != h.rows() || layer.w1.rows() != layer.w2.cols()) {
        throw Error(ErrorKind::DimMismatch, "FC layer incompatible with input of height " +
                                                std::to_string(h.rows()));
    }
    Mat a = matmul(layer.w1, h);
    relu_inplace(a);
    return h + matmul(layer.w2, a);
}

Mat tf_body(const TransformerParams& params, const Mat& h) {
    Mat cur = h;
    for (const auto& b : params.layers) cur = fc_forward(b.fc, attn_forward(b.attn, cur));
    return cur;
}

Mat tf_forward(const TransformerParams& params, const Mat& h) {
    if (params.layers.empty()) throw Error(ErrorKind::DimMismatch, "transformer needs at least one layer");
    Mat body = tf_body(params, h);
    if (params.w0_out.cols() != body.rows() || params.w1_out.rows() != body.cols()) {
        throw Error(ErrorKind::DimMismatch, "output adapters incompatible with body output " +
                                                std::to_string(body.rows()) + "x" + std::to_string(body.cols()));
    }
    return matmul(matmul(params.w0_out, body), params.w1_out);
}

Mat tf_forward(const TransformerParams& params, const Episode& ep) { return tf_forward(params, ep.h); }

ForwardTrace tf_forward_trace(const TransformerParams& params, const Mat& h) {
    ForwardTrace tr;
    Mat cur = h;
    tr.layers.reserve(params.layers.size());
    for (const auto& b : params.layers) {
        LayerCache lc;
        lc.attn_in = cur;
        lc.fc_in = attention_dispatch(b.attn, cur, &lc.heads);
        if (b.fc.w1.cols() != lc.fc_in.rows()) throw Error(ErrorKind::DimMismatch, "FC input height");
        lc.fc_pre = matmul(b.fc.w1, lc.fc_in);
        lc.fc_act = lc.fc_pre;
        relu_inplace(lc.fc_act);
        cur = lc.fc_in + matmul(b.fc.w2, lc.fc_act);
        tr.layers.push_back(std::move(lc));
    }
    tr.body_out = cur;
    tr.output = matmul(matmul(params.w0_out, cur), params.w1_out);
    return tr;
}

double op_norm(const TransformerParams& params) {
    const double adapters = spectral_norm(params.w0_out) + spectral_norm(params.w1_out);
    double best = 0.0;
    for (const auto& b : params.layers) {
        double qk = 0.0;
        double vsum = 0.0;
        for (const auto& h : b.attn.heads) {
            qk = std::max({qk, spectral_norm(h.q), spectral_norm(h.k)});
            vsum += spectral_norm(h.v);
        }
        best = std::max(best, qk + vsum + spectral_norm(b.fc.w1) + spectral_norm(b.fc.w2) + adapters);
    }
    return best;
}

namespace {

Mat gaussian(std::size_t r, std::size_t c, double stddev, Rng& rng) {
    Mat m(r, c);
    if (stddev == 0.0) return m;
    for (double& x : m.data()) x = stddev * rng.normal();
    return m;
}

void check_arch(const Arch& a) {
    if (a.layers < 1 || a.heads < 1 || a.embed < 1 || a.hidden < 1 || a.out_rows < 1 || a.out_cols < 1 ||
        a.tokens < 1) {
        throw Error(ErrorKind::ConfigError, "architecture counts must all be >= 1");
    }
}

}  // namespace

TransformerParams init_params(const Arch& arch, double scale, Rng& rng) {
    check_arch(arch);
    const double sd = scale / std::sqrt(static_cast<double>(arch.embed));
    TransformerParams p;
    p.layers.resize(arch.layers);
    for (auto& b : p.layers) {
        b.attn.activation = arch.activation;
        b.attn.heads.resize(arch.heads);
        for (auto& h : b.attn.heads) {
            h.v = gaussian(arch.embed, arch.embed, sd, rng);
            h.q = gaussian(arch.embed, arch.embed, sd, rng);
            h.k = gaussian(arch.embed, arch.embed, sd, rng);
        }
        b.fc.w1 = gaussian(arch.hidden, arch.embed, sd, rng);
        b.fc.w2 = gaussian(arch.embed, arch.hidden, sd, rng);
    }
    p.w0_out = gaussian(arch.out_rows, arch.embed, 1.0 / std::sqrt(static_cast<double>(arch.embed)), rng);
    p.w1_out = gaussian(arch.tokens, arch.out_cols, 1.0 / std::sqrt(static_cast<double>(arch.tokens)), rng);
    return p;
}

TransformerParams zero_params(const Arch& arch) {
    check_arch(arch);
    TransformerParams p;
    p.layers.resize(arch.layers);
    for (auto& b : p.layers) {
        b.attn.activation = arch.activation;
        b.attn.heads.assign(arch.heads, AttnHead{Mat(arch.embed, arch.embed), Mat(arch.embed, arch.embed),
                                                 Mat(arch.embed, arch.embed)});
        b.fc.w1 = Mat(arch.hidden, arch.embed);
        b.fc.w2 = Mat(arch.embed, arch.hidden);
    }
    p.w0_out = Mat(arch.out_rows, arch.embed);
    p.w1_out = Mat(arch.tokens, arch.out_cols);
    return p;
}

}  // namespace spectral
