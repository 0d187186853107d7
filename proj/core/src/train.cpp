#include "spectral/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <string>

#include "spectral/construction.hpp"
#include "spectral/datasets.hpp"
#include "spectral/error.hpp"
#include "spectral/linalg.hpp"
#include "spectral/metrics.hpp"
#include "spectral/param_io.hpp"

namespace spectral {

Gradients zeros_like(const TransformerParams& params) {
    Gradients g = params;
    for (double* p : coordinates(g)) *p = 0.0;
    return g;
}

namespace {

template <class P, class Ptr>
std::vector<Ptr> collect(P& params) {
    std::vector<Ptr> out;
    out.reserve(params.parameter_count());
    auto add = [&](auto& m) {
        for (auto& x : m.data()) out.push_back(&x);
    };
    for (auto& b : params.layers) {
        for (auto& h : b.attn.heads) {
            add(h.v);
            add(h.q);
            add(h.k);
        }
        add(b.fc.w1);
        add(b.fc.w2);
    }
    add(params.w0_out);
    add(params.w1_out);
    return out;
}

void relu_mask(Mat& g, const Mat& pre) {
    auto gd = g.data();
    auto pd = pre.data();
    for (std::size_t i = 0; i < gd.size(); ++i) {
        if (!(pd[i] > 0.0)) gd[i] = 0.0;
    }
}

// Column-wise softmax backward: dS_:j = p_:j * (dP_:j - <p_:j, dP_:j>).
Mat softmax_backward(const Mat& p, const Mat& dp) {
    Mat ds(p.rows(), p.cols());
    for (std::size_t j = 0; j < p.cols(); ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < p.rows(); ++i) s += p(i, j) * dp(i, j);
        for (std::size_t i = 0; i < p.rows(); ++i) ds(i, j) = p(i, j) * (dp(i, j) - s);
    }
    return ds;
}

}  // namespace

std::vector<double*> coordinates(TransformerParams& params) { return collect<TransformerParams, double*>(params); }

std::vector<const double*> coordinates(const TransformerParams& params) {
    return collect<const TransformerParams, const double*>(params);
}

Gradients backward(const TransformerParams& params, const Mat& h, const Mat& dout) {
    return backward(params, tf_forward_trace(params, h), h, dout);
}

Gradients backward(const TransformerParams& params, const ForwardTrace& tr, const Mat& h, const Mat& dout) {
    (void)h;
    if (dout.rows() != tr.output.rows() || dout.cols() != tr.output.cols()) {
        throw Error(ErrorKind::ShapeMismatch, "upstream gradient is " + std::to_string(dout.rows()) + "x" +
                                                  std::to_string(dout.cols()) + ", output is " +
                                                  std::to_string(tr.output.rows()) + "x" +
                                                  std::to_string(tr.output.cols()));
    }
    Gradients g = zeros_like(params);
    const Mat bw1 = matmul(tr.body_out, params.w1_out);
    g.w0_out = matmul_nt(dout, bw1);
    const Mat w0b = matmul(params.w0_out, tr.body_out);
    g.w1_out = matmul_tn(w0b, dout);
    Mat dh = matmul_nt(matmul_tn(params.w0_out, dout), params.w1_out);

    for (std::size_t li = params.layers.size(); li-- > 0;) {
        const Block& blk = params.layers[li];
        const LayerCache& lc = tr.layers[li];
        Block& gb = g.layers[li];
        // FC: out = in + W2 relu(W1 in)
        gb.fc.w2 = matmul_nt(dh, lc.fc_act);
        Mat dz = matmul_tn(blk.fc.w2, dh);
        relu_mask(dz, lc.fc_pre);
        gb.fc.w1 = matmul_nt(dz, lc.fc_in);
        dh += matmul_tn(blk.fc.w1, dz);
        // Attention: out = in + c sum_m (V in) sigma((Q in)^T (K in))
        const Mat& in = lc.attn_in;
        const bool relu = blk.attn.activation == Activation::ReLU;
        const double c = relu ? 1.0 / static_cast<double>(in.cols()) : 1.0;
        Mat dh_in = dh;
        for (std::size_t m = 0; m < blk.attn.heads.size(); ++m) {
            const AttnHead& hd = blk.attn.heads[m];
            const HeadCache& hc = lc.heads[m];
            Mat dvh = matmul_nt(dh, hc.activated);
            dvh *= c;
            Mat dp = matmul_tn(hc.vh, dh);
            dp *= c;
            Mat ds;
            if (relu) {
                ds = std::move(dp);
                relu_mask(ds, hc.scores);
            } else {
                ds = softmax_backward(hc.activated, dp);
            }
            const Mat dqh = matmul_nt(hc.kh, ds);
            const Mat dkh = matmul(hc.qh, ds);
            AttnHead& gh = gb.attn.heads[m];
            gh.v = matmul_nt(dvh, in);
            gh.q = matmul_nt(dqh, in);
            gh.k = matmul_nt(dkh, in);
            dh_in += matmul_tn(hd.v, dvh);
            dh_in += matmul_tn(hd.q, dqh);
            dh_in += matmul_tn(hd.k, dkh);
        }
        dh = std::move(dh_in);
    }
    return g;
}

void sgd_step(TransformerParams& params, const Gradients& g, double lr) {
    auto p = coordinates(params);
    auto q = coordinates(g);
    if (p.size() != q.size()) throw Error(ErrorKind::ShapeMismatch, "gradient does not match parameters");
    for (std::size_t i = 0; i < p.size(); ++i) *p[i] -= lr * *q[i];
}

LossValue task_loss(const TaskSpec& task, const Mat& out, const Target& t) {
    LossValue lv;
    lv.grad = Mat(out.rows(), out.cols());
    switch (task.kind) {
        case TaskKind::EigVec: {
            if (out.rows() != t.eigvecs.rows() || out.cols() != t.eigvecs.cols()) {
                throw Error(ErrorKind::ShapeMismatch, "prediction and eigenvector target differ in shape");
            }
            const double k = static_cast<double>(out.cols());
            if (task.vec_loss == VecLoss::Eigenspace) {
                lv.loss = eigenspace_loss_unchecked(t.eigvecs, out);
                Mat diff = matmul_nt(out, out) - matmul_nt(t.eigvecs, t.eigvecs);
                lv.grad = matmul(diff, out);
                lv.grad *= 2.0;
                return lv;
            }
            Mat v = t.eigvecs;
            for (std::size_t c = 0; c < v.cols(); ++c) {
                double ip = 0.0;
                for (std::size_t r = 0; r < v.rows(); ++r) ip += v(r, c) * out(r, c);
                if (ip < 0.0) {
                    for (std::size_t r = 0; r < v.rows(); ++r) v(r, c) = -v(r, c);
                }
            }
            lv.loss = cos_loss(v, out);
            for (std::size_t c = 0; c < v.cols(); ++c) {
                double vv = 0.0, hh = 0.0, vh = 0.0;
                for (std::size_t r = 0; r < v.rows(); ++r) {
                    vv += v(r, c) * v(r, c);
                    hh += out(r, c) * out(r, c);
                    vh += v(r, c) * out(r, c);
                }
                const double nv = std::sqrt(vv);
                const double nh = std::sqrt(hh);
                const double den = nv * nh;
                for (std::size_t r = 0; r < v.rows(); ++r) {
                    const double g = den > 1e-8 ? v(r, c) / den - vh * out(r, c) / (nv * nh * hh) : v(r, c) / 1e-8;
                    lv.grad(r, c) = -g / k;
                }
            }
            return lv;
        }
        case TaskKind::EigVal: {
            if (out.size() != t.eigvals.size()) throw Error(ErrorKind::ShapeMismatch, "eigenvalue output size");
            const Vec pred(out.data().begin(), out.data().end());
            lv.loss = rmse_eigvals(t.eigvals, pred, true);
            const double k = static_cast<double>(pred.size());
            for (std::size_t i = 0; i < pred.size(); ++i) {
                const double den = t.eigvals[i] + 1e-8;
                lv.grad.data()[i] = -2.0 / k * (t.eigvals[i] - pred[i]) / (den * den);
            }
            return lv;
        }
        case TaskKind::Gmm: {
            if (out.size() != t.labels.size()) throw Error(ErrorKind::ShapeMismatch, "GMM output size");
            const std::size_t n = t.labels.size();
            Vec zhat(n), ds(n);
            double same = 0.0, flip = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double s = std::tanh(task.beta * out.data()[i]);
                zhat[i] = 0.5 * (s + 1.0);
                ds[i] = 0.5 * task.beta * (1.0 - s * s);
                same += std::abs(zhat[i] - t.labels[i]);
                flip += std::abs(zhat[i] - (1 - t.labels[i]));
            }
            const bool use_flip = flip < same;
            const double nn = static_cast<double>(n);
            lv.loss = std::min(same, flip) / nn;
            for (std::size_t i = 0; i < n; ++i) {
                const double target = use_flip ? 1 - t.labels[i] : t.labels[i];
                const double diff = zhat[i] - target;
                const double sg = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
                lv.grad.data()[i] = sg / nn * ds[i];
            }
            return lv;
        }
    }
    return lv;
}

double min_kink_distance(const TransformerParams& params, const Mat& h) {
    const ForwardTrace tr = tf_forward_trace(params, h);
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < tr.layers.size(); ++l) {
        if (params.layers[l].attn.activation == Activation::ReLU) {
            for (const auto& hc : tr.layers[l].heads) {
                for (double s : hc.scores.data()) m = std::min(m, std::abs(s));
            }
        }
        for (double z : tr.layers[l].fc_pre.data()) m = std::min(m, std::abs(z));
    }
    return m;
}

std::string coordinate_name(const TransformerParams& params, std::size_t index) {
    auto within = [&](const Mat& m, const std::string& label) -> std::string {
        if (index < m.size()) {
            return label + "[" + std::to_string(index / m.cols()) + "," + std::to_string(index % m.cols()) + "]";
        }
        index -= m.size();
        return {};
    };
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        const Block& b = params.layers[l];
        const std::string pre = "layer " + std::to_string(l) + " ";
        for (std::size_t m = 0; m < b.attn.heads.size(); ++m) {
            const std::string hp = pre + "head " + std::to_string(m) + " ";
            for (auto [mat, name] : {std::pair{&b.attn.heads[m].v, "V"}, std::pair{&b.attn.heads[m].q, "Q"},
                                     std::pair{&b.attn.heads[m].k, "K"}}) {
                if (auto s = within(*mat, hp + name); !s.empty()) return s;
            }
        }
        if (auto s = within(b.fc.w1, pre + "W1"); !s.empty()) return s;
        if (auto s = within(b.fc.w2, pre + "W2"); !s.empty()) return s;
    }
    if (auto s = within(params.w0_out, "W0_out"); !s.empty()) return s;
    if (auto s = within(params.w1_out, "W1_out"); !s.empty()) return s;
    return "out of range";
}

GradCheckResult grad_check(const TransformerParams& params, const Mat& h, const LossFn& loss,
                           const GradCheckOptions& opts) {
    if (!(opts.h > 0.0) || !(opts.denom_floor > 0.0)) {
        throw Error(ErrorKind::ConfigError, "grad_check needs h > 0 and denom_floor > 0");
    }
    const ForwardTrace tr = tf_forward_trace(params, h);
    const LossValue base = loss(tr.output);
    const Gradients g = backward(params, tr, h, base.grad);
    const auto ga = coordinates(g);
    const std::size_t total = ga.size();

    std::vector<std::size_t> idx;
    if (total <= opts.full_limit) {
        idx.resize(total);
        for (std::size_t i = 0; i < total; ++i) idx[i] = i;
    } else {
        Rng rng(opts.subset_seed);
        auto perm = shuffled_indices(total, rng);
        perm.resize(std::max<std::size_t>(1, (total + 99) / 100));
        std::sort(perm.begin(), perm.end());
        idx = std::move(perm);
    }

    TransformerParams work = params;
    auto wp = coordinates(work);
    GradCheckResult res;
    for (std::size_t i : idx) {
        const double orig = *wp[i];
        *wp[i] = orig + opts.h;
        const double fp = loss(tf_forward(work, h)).loss;
        *wp[i] = orig - opts.h;
        const double fm = loss(tf_forward(work, h)).loss;
        *wp[i] = orig;
        const double num = (fp - fm) / (2.0 * opts.h);
        const double ana = *ga[i] * opts.corrupt_factor;
        const double rel = std::abs(ana - num) / std::max({std::abs(ana), std::abs(num), opts.denom_floor});
        ++res.checked;
        if (rel > res.max_rel_error || res.checked == 1) {
            res.max_rel_error = rel;
            res.worst_index = i;
            res.worst_analytic = ana;
            res.worst_numeric = num;
        }
    }
    res.worst_name = coordinate_name(params, res.worst_index);
    return res;
}

void TrainConfig::validate() const {
    auto fail = [](const std::string& m) { throw Error(ErrorKind::ConfigError, m); };
    if (!(lr >= 0.0) || !std::isfinite(lr)) fail("lr must be finite and >= 0");
    if (steps < 1) fail("steps must be >= 1");
    if (layers < 1 || heads < 1 || embed < 1 || hidden < 1) fail("architecture counts must be >= 1");
    if (d < 1 || n < 1) fail("d and n must be >= 1");
    if (task.k < 1 || task.k > d) fail("k must lie in [1, d]");
    if (task.kind == TaskKind::Gmm && task.k != 1) fail("the GMM task uses k = 1");
    if (!(task.beta > 0.0)) fail("beta must be positive");
    if (!(sep_lo >= 0.0 && sep_hi >= sep_lo)) fail("separation range must satisfy 0 <= lo <= hi");
    if (!(sigma2_lo > 0.0 && sigma2_hi >= sigma2_lo)) fail("sigma2 range must satisfy 0 < lo <= hi");
    if (eval_every < 1) fail("eval_every must be >= 1");
    if (!(input_rms > 0.0) || !std::isfinite(input_rms)) fail("input_rms must be positive");
    if (task.kind == TaskKind::Gmm && n < d + 4) fail("the GMM task needs n >= d + 4");
    if (use_aux) {
        std::size_t rows = 0;
        if (task.kind == TaskKind::Gmm) {
            rows = 4 * d + choose_n1(d, n, sep_hi) + 1;
        } else {
            if (n < d) fail("the auxiliary identity block needs n >= d");
            rows = d + (task.k + 3) * d;
        }
        if (embed < rows) {
            fail("embed = " + std::to_string(embed) + " is smaller than [X; P] height " + std::to_string(rows));
        }
    } else if (embed < d) {
        fail("embed must be >= d");
    }
}

Arch TrainConfig::arch() const {
    Arch a;
    a.layers = layers;
    a.heads = heads;
    a.embed = embed;
    a.hidden = hidden;
    a.tokens = n;
    a.activation = activation;
    switch (task.kind) {
        case TaskKind::EigVec:
            a.out_rows = d;
            a.out_cols = task.k;
            break;
        case TaskKind::EigVal:
            a.out_rows = task.k;
            a.out_cols = 1;
            break;
        case TaskKind::Gmm:
            a.out_rows = 1;
            a.out_cols = n;
            break;
    }
    return a;
}

std::string to_string(TaskKind k) {
    switch (k) {
        case TaskKind::EigVec: return "eigvec";
        case TaskKind::EigVal: return "eigval";
        case TaskKind::Gmm: return "gmm";
    }
    return "eigvec";
}

std::string TrainConfig::canonical() const {
    std::ostringstream s;
    s << "task=" << to_string(task.kind) << ";k=" << task.k
      << ";loss=" << (task.vec_loss == VecLoss::Cos ? "cos" : "eigenspace") << ";beta=" << format_double(task.beta)
      << ";steps=" << steps << ";lr=" << format_double(lr) << ";seed=" << seed << ";layers=" << layers
      << ";heads=" << heads << ";embed=" << embed << ";hidden=" << hidden
      << ";activation=" << (activation == Activation::ReLU ? "relu" : "softmax")
      << ";init_scale=" << format_double(init_scale) << ";d=" << d << ";n=" << n
      << ";sep=" << format_double(sep_lo) << ".." << format_double(sep_hi) << ";sigma2=" << format_double(sigma2_lo)
      << ".." << format_double(sigma2_hi) << ";aux=" << use_aux << ";normalize=" << normalize_input << ";input_rms=" << format_double(input_rms)
      << ";dataset=" << dataset_size << ";eval_every=" << eval_every << ";eval_instances=" << eval_instances;
    return s.str();
}

Instance make_instance(const TrainConfig& cfg, Rng& rng) {
    Instance inst;
    Mat x;
    if (cfg.task.kind == TaskKind::Gmm) {
        const double sep = rng.uniform(cfg.sep_lo, cfg.sep_hi);
        const double s2 = rng.uniform(cfg.sigma2_lo, cfg.sigma2_hi);
        GmmInstance g = gen_gmm(cfg.d, cfg.n, sep, s2, rng);
        x = std::move(g.x);
        inst.target.labels = std::move(g.z);
    } else {
        x = gen_synthetic_pca(cfg.d, cfg.n, rng);
    }
    if (cfg.normalize_input) {
        const double f = frobenius_norm(x);
        if (f > 0.0) x *= cfg.input_rms * std::sqrt(static_cast<double>(cfg.n)) / f;
    }
    if (cfg.task.kind != TaskKind::Gmm) {
        const SpectralResult r = eigh_oracle(symmetrize(x), cfg.task.k);
        inst.target.eigvecs = r.eigvecs;
        inst.target.eigvals = r.eigvals;
    }
    AuxMatrix aux;
    if (cfg.use_aux) {
        if (cfg.task.kind == TaskKind::Gmm) {
            aux = build_aux_gmm(cfg.d, cfg.n, choose_n1(cfg.d, cfg.n, cfg.sep_hi), rng);
        } else {
            aux = build_aux_pca(cfg.d, cfg.n, cfg.task.k, rng);
        }
    }
    inst.ep = make_episode(x, aux.p, aux.layout, cfg.embed);
    return inst;
}

std::vector<Instance> held_out_instances(const TrainConfig& cfg, std::size_t count) {
    Rng rng = Rng::for_stream(cfg.seed, 2);
    std::vector<Instance> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.push_back(make_instance(cfg, rng));
    return out;
}

EvalRow evaluate(const TrainConfig& cfg, const TransformerParams& params, const std::vector<Instance>& instances) {
    EvalRow row;
    if (instances.empty()) return row;
    for (const Instance& inst : instances) {
        const Mat out = tf_forward(params, inst.ep);
        row.loss += task_loss(cfg.task, out, inst.target).loss;
        switch (cfg.task.kind) {
            case TaskKind::EigVec: {
                double c = 0.0;
                for (std::size_t j = 0; j < out.cols(); ++j) {
                    const Vec a = out.col(j);
                    const Vec b = inst.target.eigvecs.col(j);
                    const double den = norm2(a) * norm2(b);
                    c += den > 0.0 ? std::abs(dot(a, b)) / den : 0.0;
                }
                row.metric += c / static_cast<double>(out.cols());
                break;
            }
            case TaskKind::EigVal: {
                const Vec pred(out.data().begin(), out.data().end());
                row.metric += rmse_eigvals(inst.target.eigvals, pred, true);
                break;
            }
            case TaskKind::Gmm: {
                Labels z(out.cols());
                for (std::size_t j = 0; j < out.cols(); ++j) z[j] = out(0, j) > 0.0 ? 1 : 0;
                row.metric += gmm_loss(z, inst.target.labels);
                break;
            }
        }
    }
    const double n = static_cast<double>(instances.size());
    row.loss /= n;
    row.metric /= n;
    return row;
}

TrainResult train_loop(const TrainConfig& cfg) {
    cfg.validate();
    TrainResult res;
    Rng init_rng = Rng::for_stream(cfg.seed, 0);
    res.params = init_params(cfg.arch(), cfg.init_scale, init_rng);
    Rng data_rng = Rng::for_stream(cfg.seed, 1);
    std::vector<Instance> fixed;
    for (std::size_t i = 0; i < cfg.dataset_size; ++i) fixed.push_back(make_instance(cfg, data_rng));
    const std::vector<Instance> held = held_out_instances(cfg, cfg.eval_instances);

    res.history.reserve(cfg.steps);
    for (std::size_t step = 0; step < cfg.steps; ++step) {
        Instance fresh;
        const Instance* inst = nullptr;
        if (fixed.empty()) {
            fresh = make_instance(cfg, data_rng);
            inst = &fresh;
        } else {
            inst = &fixed[step % fixed.size()];
        }
        const ForwardTrace tr = tf_forward_trace(res.params, inst->ep.h);
        const LossValue lv = task_loss(cfg.task, tr.output, inst->target);
        if (!std::isfinite(lv.loss)) {
            res.diverged = true;
            res.diverged_step = step;
            return res;
        }
        res.history.push_back(lv.loss);
        if (cfg.lr != 0.0) {
            const Gradients g = backward(res.params, tr, inst->ep.h, lv.grad);
            sgd_step(res.params, g, cfg.lr);
        }
        if ((step + 1) % cfg.eval_every == 0 && !held.empty()) {
            EvalRow row = evaluate(cfg, res.params, held);
            row.step = step + 1;
            res.evals.push_back(row);
        }
    }
    return res;
}

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

void save_checkpoint(const std::string& path, const TransformerParams& params, const TrainConfig& cfg,
                     std::size_t step) {
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a64(cfg.canonical())));
    std::ostringstream extra;
    extra << "{\"training\":{\"step\":" << step << ",\"seed\":" << cfg.seed << ",\"cfg_hash\":\"" << hash
          << "\",\"task\":\"" << to_string(cfg.task.kind) << "\"}}";
    save_params(path, params, extra.str());
}

}  // namespace spectral
