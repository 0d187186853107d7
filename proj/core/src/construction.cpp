#include "spectral/construction.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <string>

#include "spectral/error.hpp"
#include "spectral/piecewise.hpp"

namespace spectral {

namespace {

constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

std::size_t squaring_layers(std::size_t tau) { return static_cast<std::size_t>(std::bit_width(tau)); }

std::size_t power_cost(PowerMode m, std::size_t tau) {
    return m == PowerMode::Stepwise ? 2 * tau : squaring_layers(tau) + 1;
}

void check_unit(const Vec& v, std::size_t d) {
    if (v.size() != d) throw Error(ErrorKind::DimMismatch, "initial vector has wrong length");
    if (std::abs(norm2(v) - 1.0) > 1e-10) throw Error(ErrorKind::DimMismatch, "initial vector is not unit norm");
}

// Row offsets of the blocks inside H = [X; P].
struct Rows {
    std::size_t d = 0;
    std::size_t x = 0;
    std::size_t b1 = 0;   // scratch matrix A (PCA) or Sigma-hat (GMM)
    std::size_t b2 = 0;   // identity [I_d | 0]; inside the indicator block for GMM
    std::size_t b3 = 0;   // sphere
    std::vector<std::size_t> r;  // result vectors
    std::size_t ind = npos;
    std::size_t n1 = 0;
    std::size_t bias = npos;
};

Rows pca_rows(const AuxLayout& l) {
    Rows r;
    r.d = l.d;
    r.b1 = l.h_row(0);
    r.b2 = l.h_row(1);
    r.b3 = l.h_row(2);
    for (std::size_t i = 0; i < l.k; ++i) r.r.push_back(l.h_row(3 + i));
    return r;
}

Rows gmm_rows(const AuxLayout& l) {
    Rows r;
    r.d = l.d;
    r.b1 = l.h_row(0);
    r.ind = l.h_row(1);
    r.n1 = l.n1;
    r.b2 = r.ind;
    r.b3 = l.h_row(2);
    r.r.push_back(l.h_row(3));
    r.bias = l.h_row(4);
    return r;
}

// Accumulates layer pairs. Every head matrix is D x D; score coordinates are
// allocated from 0 upward within a head.
class Builder {
public:
    Builder(std::size_t embed, std::size_t n, const Rows& rows) : D_(embed), N_(static_cast<double>(n)), rw_(rows) {}

    double mask = 0.0;

    AttnHead head() const { return {Mat(D_, D_), Mat(D_, D_), Mat(D_, D_)}; }

    // score += -mask * [i < d] * [j < d, j != c]
    void mask_key(AttnHead& h, std::size_t coord, std::size_t c) const {
        for (std::size_t r = 0; r < rw_.d; ++r) {
            h.q(coord, rw_.b2 + r) = 1.0;
            if (r != c) h.k(coord, rw_.b2 + r) = -mask;
        }
    }
    // score += -mask * [i < d, i != c] * [j < d]
    void mask_query(AttnHead& h, std::size_t coord, std::size_t c) const {
        for (std::size_t r = 0; r < rw_.d; ++r) {
            if (r != c) h.q(coord, rw_.b2 + r) = -mask;
            h.k(coord, rw_.b2 + r) = 1.0;
        }
    }

    // target(col c) <- mat * src(col c) (+ src when not in place).
    // mat == npos moves the vector unchanged. clear_src zeroes the source column.
    void apply(std::vector<AttnHead>& heads, std::size_t src, std::size_t mat, double scale, std::size_t target,
               std::size_t c, bool in_place, bool clear_src) const {
        for (double sign : {1.0, -1.0}) {
            AttnHead h = head();
            for (std::size_t r = 0; r < rw_.d; ++r) {
                h.q(r, rw_.b2 + r) = sign;
                h.k(r, src + r) = 1.0;
                if (mat == npos) {
                    h.v(target + r, rw_.b2 + r) += sign * N_;
                } else {
                    h.v(target + r, mat + r) += sign * N_ * scale;
                }
                if (in_place) h.v(target + r, rw_.b2 + r) -= sign * N_;
                if (clear_src) h.v(src + r, rw_.b2 + r) -= sign * N_;
            }
            if (c != npos) mask_key(h, rw_.d, c);
            heads.push_back(std::move(h));
        }
    }

    // target(col c) += g(||src_c||^2) * val_c; `base` is added to the constant term
    // (-1 when val == target rewrites the vector in place); clear zeroes that block's column.
    void scale(std::vector<AttnHead>& heads, std::size_t src, std::size_t val, std::size_t target,
               std::size_t clear, std::size_t c, const RidgeSum& g, double base) const {
        const std::size_t d = rw_.d;
        auto masked = [&](AttnHead& h) {
            mask_key(h, d + 1, c);
            mask_query(h, d + 2, c);
        };
        auto constant_coord = [&](AttnHead& h, double t) {
            for (std::size_t r = 0; r < d; ++r) {
                h.q(d, rw_.b2 + r) = 1.0;
                h.k(d, rw_.b2 + r) = t;
            }
        };
        auto write = [&](AttnHead& h, double coef) {
            for (std::size_t r = 0; r < d; ++r) h.v(target + r, val + r) += N_ * coef;
        };
        for (std::size_t m = 0; m < g.terms(); ++m) {
            if (g.coefs[m] == 0.0) continue;
            AttnHead h = head();
            for (std::size_t r = 0; r < d; ++r) {
                h.q(r, src + r) = 1.0;
                h.k(r, src + r) = g.left_facing ? -1.0 : 1.0;
            }
            constant_coord(h, g.left_facing ? g.knots[m] : -g.knots[m]);
            masked(h);
            write(h, g.coefs[m]);
            heads.push_back(std::move(h));
        }
        if (g.linear != 0.0) {
            AttnHead h = head();
            for (std::size_t r = 0; r < d; ++r) {
                h.q(r, src + r) = 1.0;
                h.k(r, src + r) = 1.0;
            }
            masked(h);
            write(h, g.linear);
            heads.push_back(std::move(h));
        }
        AttnHead h = head();
        constant_coord(h, 1.0);
        masked(h);
        write(h, g.constant + base);
        if (clear != npos) {
            for (std::size_t r = 0; r < d; ++r) h.v(clear + r, clear + r) -= N_;
        }
        heads.push_back(std::move(h));
    }

    void push(std::vector<AttnHead> heads, FcLayer fc) {
        if (heads.empty()) heads.push_back(head());
        Block b;
        b.attn.heads = std::move(heads);
        b.fc = std::move(fc);
        layers.push_back(std::move(b));
    }

    FcLayer idle_fc() const { return {Mat(1, D_), Mat(D_, 1)}; }

    // dst rows <- coef * src rows, for all columns; dst and src hold `count` rows.
    FcLayer overwrite_fc(std::size_t dst, std::size_t src, std::size_t count, double coef) const {
        FcLayer fc{Mat(2 * count, D_), Mat(D_, 2 * count)};
        for (std::size_t r = 0; r < count; ++r) {
            if (src != npos) {
                fc.w1(r, src + r) += coef;
                fc.w1(count + r, src + r) -= coef;
            }
            fc.w1(r, dst + r) -= 1.0;
            fc.w1(count + r, dst + r) += 1.0;
            fc.w2(dst + r, r) = 1.0;
            fc.w2(dst + r, count + r) = -1.0;
        }
        return fc;
    }

    std::size_t D_;
    double N_;
    Rows rw_;
    std::vector<Block> layers;
};

double recip_sqrt(double x) { return 1.0 / std::sqrt(x); }

struct Tables {
    double max_error = 0.0;
    double max_knot = 0.0;

    RidgeSum make(double (*f)(double), double a, double b, double eps) {
        Calibration c = calibrate(f, a, b, eps, KnotSpacing::Geometric, true);
        max_error = std::max(max_error, c.error.rel);
        max_knot = std::max(max_knot, b);
        return c.interp.left_ridges();
    }
};

double sqrt_fn(double x) { return std::sqrt(x); }

void fill_info(ConstructionInfo* info, const TransformerParams& p, std::size_t used, double mask, double err) {
    if (!info) return;
    info->layers = p.depth();
    info->padding_layers = p.depth() - used;
    info->max_heads = p.max_heads();
    info->total_heads = p.total_heads();
    info->embed_dim = p.embed_dim();
    info->mask_scale = mask;
    info->max_table_error = err;
}

}  // namespace

void ConstructionConfig::validate() const {
    if (tau < 1) throw Error(ErrorKind::ConfigError, "tau must be >= 1");
    if (!(eps > 0.0 && eps < 1.0)) throw Error(ErrorKind::ConfigError, "eps must lie in (0, 1)");
    if (eps0 < 0.0 || eps0 >= 1.0) throw Error(ErrorKind::ConfigError, "eps0 must lie in (0, 1)");
    if (!(lambda_lo > 0.0 && lambda_hi > lambda_lo)) {
        throw Error(ErrorKind::ConfigError, "lambda range must satisfy 0 < lo < hi");
    }
    if (!(beta > 0.0)) throw Error(ErrorKind::ConfigError, "beta must be positive");
    if (!(delta > 0.0 && delta <= 1.0)) throw Error(ErrorKind::ConfigError, "delta must lie in (0, 1]");
    if (x_bound < 0.0) throw Error(ErrorKind::ConfigError, "x_bound must be >= 0");
    if (!(tanh_limit > 0.0)) throw Error(ErrorKind::ConfigError, "tanh_limit must be positive");
    if (!(pad >= 1.0)) throw Error(ErrorKind::ConfigError, "pad must be >= 1");
}

std::string to_string(PowerMode m) { return m == PowerMode::Stepwise ? "stepwise" : "squaring"; }

AuxMatrix build_aux_pca(std::size_t d, std::size_t n, std::size_t k, Rng& rng) {
    if (k < 1 || k > d) throw Error(ErrorKind::KTooLarge, "k must lie in [1, d]");
    std::vector<Vec> init;
    for (std::size_t i = 0; i < k; ++i) init.push_back(sample_unit_sphere(d, rng));
    return build_aux_pca(d, n, init);
}

AuxMatrix build_aux_pca(std::size_t d, std::size_t n, const std::vector<Vec>& init) {
    const std::size_t k = init.size();
    if (d < 1) throw Error(ErrorKind::DimMismatch, "d must be >= 1");
    if (n < d) throw Error(ErrorKind::NTooSmall, "N = " + std::to_string(n) + " < d = " + std::to_string(d));
    if (k < 1 || k > d) throw Error(ErrorKind::KTooLarge, "k must lie in [1, d]");
    AuxMatrix a;
    a.layout.variant = AuxVariant::Pca;
    a.layout.d = d;
    a.layout.n = n;
    a.layout.k = k;
    a.layout.blocks.push_back({BlockRole::Placeholder, 0, d});
    a.layout.blocks.push_back({BlockRole::Identity, d, d});
    a.layout.blocks.push_back({BlockRole::Sphere, 2 * d, d});
    for (std::size_t l = 0; l < k; ++l) a.layout.blocks.push_back({BlockRole::Placeholder, (3 + l) * d, d});
    a.p = Mat(a.layout.rows(), n);
    for (std::size_t r = 0; r < d; ++r) a.p(d + r, r) = 1.0;
    for (std::size_t l = 0; l < k; ++l) {
        check_unit(init[l], d);
        for (std::size_t r = 0; r < d; ++r) a.p(2 * d + r, l) = init[l][r];
    }
    return a;
}

AuxMatrix build_aux_gmm(std::size_t d, std::size_t n, std::size_t n1, Rng& rng) {
    return build_aux_gmm(d, n, n1, sample_unit_sphere(d, rng));
}

AuxMatrix build_aux_gmm(std::size_t d, std::size_t n, std::size_t n1, const Vec& init) {
    if (d < 1) throw Error(ErrorKind::DimMismatch, "d must be >= 1");
    if (n1 < d + 2 || n1 >= n) {
        throw Error(ErrorKind::BadSplit, "N1 = " + std::to_string(n1) + " must satisfy d + 2 <= N1 < N");
    }
    check_unit(init, d);
    AuxMatrix a;
    a.layout.variant = AuxVariant::Gmm;
    a.layout.d = d;
    a.layout.n = n;
    a.layout.k = 1;
    a.layout.n1 = n1;
    a.layout.blocks.push_back({BlockRole::Placeholder, 0, d});
    a.layout.blocks.push_back({BlockRole::Indicator, d, n1});
    a.layout.blocks.push_back({BlockRole::Sphere, d + n1, d});
    a.layout.blocks.push_back({BlockRole::Placeholder, 2 * d + n1, d});
    a.layout.blocks.push_back({BlockRole::Bias, 3 * d + n1, 1});
    a.p = Mat(a.layout.rows(), n);
    for (std::size_t r = 0; r < n1; ++r) a.p(d + r, r) = 1.0;
    for (std::size_t r = 0; r < d; ++r) a.p(d + n1 + r, 0) = init[r];
    for (std::size_t j = 0; j < n; ++j) a.p(3 * d + n1, j) = 1.0;
    return a;
}

std::vector<Vec> sphere_vectors(const Mat& p, const AuxLayout& layout) {
    std::size_t idx = npos;
    for (std::size_t i = 0; i < layout.blocks.size(); ++i) {
        if (layout.blocks[i].role == BlockRole::Sphere) idx = i;
    }
    if (idx == npos) throw Error(ErrorKind::ConfigError, "layout has no sphere block");
    const AuxBlock& b = layout.blocks[idx];
    std::vector<Vec> out;
    for (std::size_t l = 0; l < layout.k; ++l) {
        Vec v(layout.d);
        for (std::size_t r = 0; r < layout.d; ++r) v[r] = p(b.offset + r, l);
        out.push_back(std::move(v));
    }
    return out;
}

std::size_t pca_layer_count(std::size_t tau, std::size_t k) { return 2 * tau + 4 * k + 1; }
std::size_t gmm_layer_count(std::size_t tau) { return 2 * tau + 7; }

std::vector<PowerMode> plan_power_stages(std::size_t tau, std::size_t k, ScheduleMode mode) {
    if (tau < 1) throw Error(ErrorKind::ConfigError, "tau must be >= 1");
    if (k < 1) throw Error(ErrorKind::KTooLarge, "k must be >= 1");
    const std::size_t budget = pca_layer_count(tau, k);
    std::size_t used = 1 + 3 * (k - 1);
    std::vector<PowerMode> modes;
    for (std::size_t l = 0; l < k; ++l) {
        const std::size_t rest = (k - l - 1) * power_cost(PowerMode::Squaring, tau);
        PowerMode m = PowerMode::Squaring;
        if (mode == ScheduleMode::Stepwise ||
            (mode == ScheduleMode::Auto && used + power_cost(PowerMode::Stepwise, tau) + rest <= budget)) {
            m = PowerMode::Stepwise;
        }
        used += power_cost(m, tau);
        modes.push_back(m);
    }
    if (used > budget) {
        throw Error(ErrorKind::ConfigError, "power stages need " + std::to_string(used) + " layers, budget is " +
                                                std::to_string(budget));
    }
    return modes;
}

double implied_eps0(std::size_t tau, double delta) {
    if (tau < 1 || !(delta > 0.0)) throw Error(ErrorKind::ConfigError, "implied_eps0 needs tau >= 1, delta > 0");
    // f(e) = log(1 / (e delta)) / e is decreasing on (0, 1/delta); bisect f(e) = tau in log space.
    const double t = static_cast<double>(tau);
    auto f = [&](double e) { return std::log(1.0 / (e * delta)) / e; };
    double lo = 1e-300;
    double hi = std::min(1.0, 1.0 / delta);
    if (f(hi) >= t) return hi;
    for (int it = 0; it < 200; ++it) {
        const double mid = std::sqrt(lo * hi);
        (f(mid) > t ? lo : hi) = mid;
    }
    return hi;
}

TransformerParams build_pca_network(std::size_t d, std::size_t n, std::size_t k, const ConstructionConfig& cfg,
                                    const AuxLayout& layout, ConstructionInfo* info) {
    cfg.validate();
    if (layout.variant != AuxVariant::Pca) throw Error(ErrorKind::ConfigError, "layout is not the PCA variant");
    if (layout.d != d || layout.n != n || layout.k != k) {
        throw Error(ErrorKind::DimMismatch, "layout does not match (d, N, k)");
    }
    const auto modes = plan_power_stages(cfg.tau, k, cfg.schedule);
    const Rows rw = pca_rows(layout);
    const std::size_t D = d + layout.rows();
    const double ratio = cfg.lambda_lo / cfg.lambda_hi;
    const double grow = (1.0 + cfg.eps) * (1.0 + cfg.eps);

    Tables tables;
    const RidgeSum step_norm =
        tables.make(recip_sqrt, std::pow(cfg.delta * ratio, 2) / (grow * cfg.pad), grow * cfg.pad, cfg.eps);
    const RidgeSum wide_norm = tables.make(
        recip_sqrt, cfg.delta * cfg.delta * std::pow(ratio, 2.0 * static_cast<double>(cfg.tau)) / (grow * cfg.pad),
        grow * cfg.pad, cfg.eps);
    const RidgeSum root = tables.make(sqrt_fn, cfg.lambda_lo * cfg.lambda_lo / (grow * cfg.pad),
                                      cfg.lambda_hi * cfg.lambda_hi * grow * grow * cfg.pad, cfg.eps);

    Builder b(D, n, rw);
    const double col_bound = std::max(1.0, cfg.lambda_hi) * grow * 2.0;
    b.mask = 4.0 * (1.0 + tables.max_knot + col_bound * col_bound);

    // A = X X^T into the scratch block, S = A / lambda_hi over X.
    {
        std::vector<AttnHead> heads;
        for (double sign : {1.0, -1.0}) {
            AttnHead h = b.head();
            for (std::size_t r = 0; r < d; ++r) {
                h.q(r, rw.x + r) = sign;
                h.k(r, rw.b2 + r) = 1.0;
                h.v(rw.b1 + r, rw.x + r) = sign * static_cast<double>(n);
            }
            heads.push_back(std::move(h));
        }
        b.push(std::move(heads), b.overwrite_fc(rw.x, rw.b1, d, 1.0 / cfg.lambda_hi));
    }

    for (std::size_t l = 0; l < k; ++l) {
        const std::size_t c = l;
        const std::size_t y = rw.r[l];
        if (modes[l] == PowerMode::Stepwise) {
            for (std::size_t t = 0; t < cfg.tau; ++t) {
                std::vector<AttnHead> heads;
                if (t == 0) {
                    b.apply(heads, rw.b3, rw.x, 1.0, y, c, false, true);
                } else {
                    b.apply(heads, y, rw.x, 1.0, y, c, true, false);
                }
                b.push(std::move(heads), b.idle_fc());
                heads.clear();
                b.scale(heads, y, y, y, npos, c, step_norm, -1.0);
                b.push(std::move(heads), b.idle_fc());
            }
        } else {
            const std::size_t bits = squaring_layers(cfg.tau);
            for (std::size_t bit = 0; bit < bits; ++bit) {
                std::vector<AttnHead> heads;
                const bool use = (cfg.tau >> bit) & 1U;
                if (bit == 0) {
                    b.apply(heads, rw.b3, use ? rw.x : npos, 1.0, y, c, false, true);
                } else if (use) {
                    b.apply(heads, y, rw.x, 1.0, y, c, true, false);
                }
                if (bit + 1 < bits) b.apply(heads, rw.x, rw.x, 1.0, rw.x, npos, true, false);
                b.push(std::move(heads), b.idle_fc());
            }
            std::vector<AttnHead> heads;
            b.scale(heads, y, y, y, npos, c, wide_norm, -1.0);
            b.push(std::move(heads), b.idle_fc());
        }
        if (l + 1 == k) break;
        // w = A_l v into the sphere column, then lambda-hat * v there, then deflate.
        std::vector<AttnHead> heads;
        b.apply(heads, y, rw.b1, 1.0, rw.b3, c, false, false);
        b.push(std::move(heads), b.idle_fc());
        heads.clear();
        b.scale(heads, rw.b3, y, rw.b3, rw.b3, c, root, 0.0);
        b.push(std::move(heads), b.idle_fc());
        heads.clear();
        for (double sign : {1.0, -1.0}) {
            AttnHead h = b.head();
            for (std::size_t r = 0; r < d; ++r) {
                h.q(r, y + r) = sign;
                h.k(r, rw.b2 + r) = 1.0;
                h.v(rw.b1 + r, rw.b3 + r) = -sign * static_cast<double>(n);
            }
            heads.push_back(std::move(h));
        }
        b.push(std::move(heads), b.overwrite_fc(rw.x, rw.b1, d, 1.0 / cfg.lambda_hi));
    }

    const std::size_t used = b.layers.size();
    const std::size_t total = pca_layer_count(cfg.tau, k);
    if (used > total) throw Error(ErrorKind::ConfigError, "construction exceeded its layer budget");
    while (b.layers.size() < total) b.push({}, b.idle_fc());

    TransformerParams p;
    p.layers = std::move(b.layers);
    p.w0_out = Mat(d, D);
    for (std::size_t l = 0; l < k; ++l) {
        for (std::size_t r = 0; r < d; ++r) p.w0_out(r, rw.r[l] + r) = 1.0;
    }
    p.w1_out = Mat(n, k);
    for (std::size_t l = 0; l < k; ++l) p.w1_out(l, l) = 1.0;
    if (info) {
        info->modes = modes;
        info->implied_eps0 = implied_eps0(cfg.tau, cfg.delta);
    }
    fill_info(info, p, used, b.mask, tables.max_error);
    return p;
}

TransformerParams build_gmm_network(std::size_t d, std::size_t n, std::size_t n1, const ConstructionConfig& cfg,
                                    const AuxLayout& layout, ConstructionInfo* info) {
    cfg.validate();
    if (layout.variant != AuxVariant::Gmm) throw Error(ErrorKind::ConfigError, "layout is not the GMM variant");
    if (layout.d != d || layout.n != n || layout.n1 != n1) {
        throw Error(ErrorKind::DimMismatch, "layout does not match (d, N, N1)");
    }
    if (n1 < d + 2 || n1 >= n) throw Error(ErrorKind::BadSplit, "N1 must satisfy d + 2 <= N1 < N");
    const Rows rw = gmm_rows(layout);
    const std::size_t D = d + layout.rows();
    const double N = static_cast<double>(n);
    const double N1 = static_cast<double>(n1);
    const double ratio = cfg.lambda_lo / cfg.lambda_hi;
    const double grow = (1.0 + cfg.eps) * (1.0 + cfg.eps);

    Tables tables;
    const RidgeSum step_norm =
        tables.make(recip_sqrt, std::pow(cfg.delta * ratio, 2) / (grow * cfg.pad), grow * cfg.pad, cfg.eps);
    const Calibration th = calibrate_tanh(cfg.tanh_limit, cfg.eps);
    tables.max_error = std::max(tables.max_error, th.error.abs);

    Builder b(D, n, rw);
    b.mask = 4.0 * (1.0 + tables.max_knot + 4.0 * grow * grow);
    // Every centered sample used for Sigma-hat satisfies ||Y_i||^2 <= N1 * lambda_max.
    const double xb = cfg.x_bound > 0.0 ? cfg.x_bound : std::sqrt(N1 * cfg.lambda_hi);
    const double cov_mask = 2.0 * xb + 1.0;

    // X <- X - X-bar on every column.
    {
        AttnHead h = b.head();
        for (std::size_t r = 0; r < n1; ++r) h.q(0, rw.ind + r) = 1.0;
        h.k(0, rw.bias) = 1.0;
        for (std::size_t r = 0; r < d; ++r) h.v(rw.x + r, rw.x + r) = -N / N1;
        b.push({h}, b.idle_fc());
    }
    // Sigma-hat from the first N1 centered columns; then free indicator rows d..N1-1.
    {
        std::vector<AttnHead> heads;
        for (double sign : {1.0, -1.0}) {
            AttnHead h = b.head();
            for (std::size_t r = 0; r < d; ++r) {
                h.q(r, rw.x + r) = sign;
                h.k(r, rw.b2 + r) = 1.0;
                h.k(d, rw.b2 + r) = 1.0;
                h.v(rw.b1 + r, rw.x + r) = sign * N / N1;
            }
            for (std::size_t r = 0; r < n1; ++r) h.q(d, rw.ind + r) = cov_mask;
            h.q(d, rw.bias) = -cov_mask;
            heads.push_back(std::move(h));
        }
        b.push(std::move(heads), b.overwrite_fc(rw.ind + d, npos, n1 - d, 0.0));
    }
    const std::size_t y = rw.r[0];
    for (std::size_t t = 0; t < cfg.tau; ++t) {
        std::vector<AttnHead> heads;
        if (t == 0) {
            b.apply(heads, rw.b3, rw.b1, 1.0 / cfg.lambda_hi, y, 0, false, true);
        } else {
            b.apply(heads, y, rw.b1, 1.0 / cfg.lambda_hi, y, 0, true, false);
        }
        b.push(std::move(heads), b.idle_fc());
        heads.clear();
        b.scale(heads, y, y, y, npos, 0, step_norm, -1.0);
        b.push(std::move(heads), b.idle_fc());
    }
    // p_j = beta v^T Y_j, then tanh(p_j) in the final FC.
    const std::size_t proj = rw.ind + d;
    const std::size_t out = rw.ind + d + 1;
    {
        std::vector<AttnHead> heads;
        for (double sign : {1.0, -1.0}) {
            AttnHead h = b.head();
            for (std::size_t r = 0; r < d; ++r) {
                h.q(r, y + r) = sign;
                h.k(r, rw.x + r) = 1.0;
            }
            h.v(proj, rw.b2) = sign * N * cfg.beta;
            heads.push_back(std::move(h));
        }
        RidgeSum g = th.interp.right_ridges();
        g.knots.push_back(th.interp.xs().back());
        g.coefs.push_back(-th.interp.slope(th.interp.segments() - 1));
        const std::size_t m = g.terms();
        FcLayer fc{Mat(2 * m, D), Mat(D, 2 * m)};
        for (std::size_t i = 0; i < m; ++i) {
            fc.w1(i, proj) = 1.0;
            fc.w1(i, rw.bias) = -g.knots[i];
            fc.w1(m + i, proj) = -1.0;
            fc.w1(m + i, rw.bias) = -g.knots[i];
            fc.w2(out, i) = g.coefs[i];
            fc.w2(out, m + i) = -g.coefs[i];
        }
        b.push(std::move(heads), std::move(fc));
    }

    const std::size_t used = b.layers.size();
    const std::size_t total = gmm_layer_count(cfg.tau);
    while (b.layers.size() < total) b.push({}, b.idle_fc());

    TransformerParams p;
    p.layers = std::move(b.layers);
    p.w0_out = Mat(1, D);
    p.w0_out(0, out) = 1.0;
    p.w1_out = Mat::identity(n);
    if (info) {
        info->modes = {PowerMode::Stepwise};
        info->implied_eps0 = implied_eps0(cfg.tau, cfg.delta);
    }
    fill_info(info, p, used, b.mask, tables.max_error);
    return p;
}

VerifyReport verify_construction(const TransformerParams& params, const Episode& ep, const SpectralResult& reference) {
    VerifyReport rep;
    rep.layer_count = params.depth();
    rep.max_heads = params.max_heads();
    rep.total_heads = params.total_heads();
    rep.output = tf_forward(params, ep);
    const std::size_t k = std::min(rep.output.cols(), reference.k());
    const Mat a = symmetrize(ep.x());
    for (std::size_t i = 0; i < k; ++i) {
        const Vec got = rep.output.col(i);
        const Vec want = reference.vector(i);
        const double ng = norm2(got);
        const double nw = norm2(want);
        const double c = (ng > 0.0 && nw > 0.0) ? std::abs(dot(got, want)) / (ng * nw) : 0.0;
        double plus = 0.0;
        double minus = 0.0;
        for (std::size_t r = 0; r < got.size(); ++r) {
            plus += (got[r] + want[r]) * (got[r] + want[r]);
            minus += (got[r] - want[r]) * (got[r] - want[r]);
        }
        const double err = std::sqrt(std::min(plus, minus));
        const Vec av = matvec(a, got);
        const double rq = ng > 0.0 ? dot(got, av) / (ng * ng) : 0.0;
        const double lam = reference.eigvals[i];
        rep.cos_sim.push_back(c);
        rep.vec_error.push_back(err);
        rep.eigval_rel_err.push_back(std::abs(rq - lam) / std::max(std::abs(lam), 1e-300));
        rep.max_vec_error = std::max(rep.max_vec_error, err);
        rep.min_cos_sim = std::min(rep.min_cos_sim, c);
    }
    return rep;
}

GmmVerifyReport verify_gmm_construction(const TransformerParams& params, const Episode& ep,
                                        const std::vector<int>& reference_labels) {
    GmmVerifyReport rep;
    rep.layer_count = params.depth();
    rep.max_heads = params.max_heads();
    rep.total_heads = params.total_heads();
    rep.output = tf_forward(params, ep);
    if (rep.output.rows() != 1 || rep.output.cols() != reference_labels.size()) {
        throw Error(ErrorKind::LengthMismatch, "network output and labels differ in length");
    }
    std::size_t agree = 0;
    for (std::size_t j = 0; j < reference_labels.size(); ++j) {
        const int lab = rep.output(0, j) > 0.0 ? 1 : 0;
        agree += lab == reference_labels[j] ? 1 : 0;
        rep.max_abs_output = std::max(rep.max_abs_output, std::abs(rep.output(0, j)));
    }
    const double n = static_cast<double>(reference_labels.size());
    const double frac = static_cast<double>(agree) / n;
    rep.sign_agreement = std::max(frac, 1.0 - frac);
    return rep;
}

}  // namespace spectral
