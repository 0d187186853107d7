#include <cstdio>

#include "cli.hpp"
#include "spectral/error.hpp"
#include "spectral/train.hpp"
#include "spectral/transformer.hpp"

namespace spectral::cli {

Json gradcheck_defaults() {
    return Json{
        {"schema", "gradcheck.v1"},
        {"task", "eigvec"},
        {"seed", 0u},
        {"h", 1e-5},
        {"tol", 1e-4},
        {"denom_floor", 1e-6},
        {"d", 2u},
        {"n", 6u},
        {"layers", 2u},
        {"heads", 2u},
        {"embed", 6u},
        {"hidden", 6u},
        {"activation", "relu"},
        {"vec_loss", "cos"},
        {"max_draws", 200u},
        {"corrupt_factor", 1.0},
    };
}

int cmd_gradcheck(const Json& cfg) {
    const double h = cfg["h"];
    if (!(h > 0.0)) throw Error(ErrorKind::ConfigError, "h must be positive");
    if (h > 1e-2) std::fprintf(stderr, "warning: h = %g is coarse; central differences may disagree\n", h);

    Json tj = train_defaults();
    for (const char* key : {"task", "seed", "d", "n", "layers", "heads", "embed", "hidden", "activation", "vec_loss"}) {
        tj[key] = cfg[key];
    }
    tj["use_aux"] = false;
    tj["steps"] = 1u;
    const TrainConfig tc = train_config_from_json(tj);

    GradCheckOptions opts;
    opts.h = h;
    opts.subset_seed = tc.seed;
    opts.corrupt_factor = cfg["corrupt_factor"];
    opts.denom_floor = cfg["denom_floor"];

    // Redraw (params, instance) until every ReLU argument sits at least 10h away from its kink.
    // If none does (large h), fall back to the draw with the widest margin.
    Rng rng = Rng::for_stream(tc.seed, 3);
    const std::size_t max_draws = cfg["max_draws"];
    TransformerParams params;
    Instance inst;
    double margin = -1.0;
    std::size_t draw = 0;
    for (; draw < max_draws && margin < 10.0 * h; ++draw) {
        TransformerParams p = init_params(tc.arch(), tc.init_scale, rng);
        Instance i = make_instance(tc, rng);
        const double m = min_kink_distance(p, i.ep.h);
        if (m > margin) {
            margin = m;
            params = std::move(p);
            inst = std::move(i);
        }
    }
    if (margin < 10.0 * h) {
        std::fprintf(stderr, "warning: best kink margin %.3g is below 10h; checking anyway\n", margin);
    }
    const LossFn loss = [&](const Mat& out) { return task_loss(tc.task, out, inst.target); };
    const GradCheckResult r = grad_check(params, inst.ep.h, loss, opts);
    std::printf("max relative error %.3e over %zu coordinates (kink margin %.3g)\n", r.max_rel_error, r.checked,
                margin);
    std::fflush(stdout);
    if (r.max_rel_error <= cfg["tol"].get<double>()) return kOk;
    std::fprintf(stderr, "error: gradient mismatch at %s (coordinate %zu): analytic %.10g, numeric %.10g\n",
                 r.worst_name.c_str(), r.worst_index, r.worst_analytic, r.worst_numeric);
    return kGradCheckFailed;
}

}  // namespace spectral::cli
