#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "cli.hpp"
#include "spectral/construction.hpp"
#include "spectral/datasets.hpp"
#include "spectral/error.hpp"
#include "spectral/gmm.hpp"
#include "spectral/linalg.hpp"
#include "spectral/param_io.hpp"
#include "spectral/rng.hpp"

namespace spectral::cli {

Json construct_defaults() {
    return Json{
        {"schema", "construct.v1"},
        {"variant", "pca"},
        {"d", 4u},
        {"n", 8u},
        {"k", 1u},
        {"tau", 8u},
        {"eps", 1e-2},
        {"eps0", 0.0},
        {"seed", 0u},
        {"instances", 5u},
        {"n1", 0u},
        {"sep", 6.0},
        {"sigma2", 1.0},
        {"beta", 5.0},
        {"delta", 0.2},
        {"lambda_lo", 0.0},
        {"lambda_hi", 0.0},
        {"x_bound", 0.0},
        {"schedule", "auto"},
        {"max_init_draws", 1000u},
        {"out_params", ""},
        {"out_report", ""},
    };
}

namespace {

ScheduleMode parse_schedule(const std::string& s) {
    if (s == "auto") return ScheduleMode::Auto;
    if (s == "stepwise") return ScheduleMode::Stepwise;
    if (s == "squaring") return ScheduleMode::Squaring;
    throw Error(ErrorKind::ConfigError, "schedule must be auto, stepwise or squaring");
}

Json info_json(const ConstructionInfo& info) {
    Json modes = Json::array();
    for (PowerMode m : info.modes) modes.push_back(to_string(m));
    return Json{{"layer_count", info.layers},
                {"padding_layers", info.padding_layers},
                {"max_heads", info.max_heads},
                {"total_heads", info.total_heads},
                {"embed_dim", info.embed_dim},
                {"modes", modes},
                {"mask_scale", info.mask_scale},
                {"max_table_error", info.max_table_error},
                {"implied_eps0", info.implied_eps0}};
}

std::string params_path(const Json& cfg, const char* fallback) { return output_path(cfg["out_params"], fallback); }

void write_report(const std::string& path, const Json& report) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + path);
    out << report.dump(2) << '\n';
}

struct PcaCase {
    Mat x;
    AuxMatrix aux;
    SpectralResult oracle;
};

// Resamples the sphere block until every initial vector overlaps its target eigenvector by at least delta.
AuxMatrix draw_aux_pca(std::size_t d, std::size_t n, std::size_t k, const SpectralResult& oracle, double delta,
                       std::size_t max_draws, Rng& rng) {
    for (std::size_t draw = 0; draw < max_draws; ++draw) {
        AuxMatrix aux = build_aux_pca(d, n, k, rng);
        const auto init = sphere_vectors(aux.p, aux.layout);
        bool ok = true;
        for (std::size_t i = 0; i < k && ok; ++i) ok = std::abs(dot(init[i], oracle.vector(i))) >= delta;
        if (ok) return aux;
    }
    throw Error(ErrorKind::DegenerateData, "no initialization with overlap >= delta in max_init_draws draws");
}

int construct_pca(const Json& cfg, ConstructionConfig cc) {
    const std::size_t d = cfg["d"], n = cfg["n"], k = cfg["k"], instances = cfg["instances"];
    if (k == 0) throw Error(ErrorKind::ConfigError, "k must be positive");
    if (k > d) throw Error(ErrorKind::KTooLarge, "k exceeds d");
    const auto seed = cfg["seed"].get<std::uint64_t>();

    std::vector<PcaCase> cases;
    double top = 0.0, bottom = INFINITY;
    for (std::size_t i = 0; i < instances; ++i) {
        Rng rng = Rng::for_stream(seed, i);
        PcaCase c;
        c.x = gen_synthetic_pca(d, n, rng);
        c.oracle = eigh_oracle(matmul_nt(c.x, c.x), k);
        c.aux = draw_aux_pca(d, n, k, c.oracle, cc.delta, cfg["max_init_draws"], rng);
        top = std::max(top, c.oracle.eigvals[0]);
        bottom = std::min(bottom, c.oracle.eigvals[k - 1]);
        cases.push_back(std::move(c));
    }
    if (cfg["lambda_hi"].get<double>() == 0.0) {
        if (cases.empty()) throw Error(ErrorKind::ConfigError, "lambda_hi = 0 needs at least one instance");
        cc.lambda_hi = 1.5 * top;
    }
    if (cfg["lambda_lo"].get<double>() == 0.0) {
        if (cases.empty()) throw Error(ErrorKind::ConfigError, "lambda_lo = 0 needs at least one instance");
        cc.lambda_lo = 0.5 * bottom;
    }
    cc.validate();

    ConstructionInfo info;
    Rng layout_rng(0);
    const AuxLayout layout = cases.empty() ? build_aux_pca(d, n, k, layout_rng).layout : cases.front().aux.layout;
    const TransformerParams params = build_pca_network(d, n, k, cc, layout, &info);

    Json report = info_json(info);
    report["variant"] = "pca";
    report["expected_layer_count"] = pca_layer_count(cc.tau, k);
    report["lambda_lo"] = cc.lambda_lo;
    report["lambda_hi"] = cc.lambda_hi;
    Json per = Json::array();
    double max_err = 0.0, min_cos = 1.0;
    for (const PcaCase& c : cases) {
        const SpectralResult ref = power_method(c.x, cc.tau, k, sphere_vectors(c.aux.p, c.aux.layout));
        const VerifyReport rep = verify_construction(params, make_episode(c.x, c.aux.p, c.aux.layout), ref);
        per.push_back({{"vec_error", rep.vec_error}, {"cos_sim", rep.cos_sim}, {"eigval_rel_err", rep.eigval_rel_err}});
        max_err = std::max(max_err, rep.max_vec_error);
        min_cos = std::min(min_cos, rep.min_cos_sim);
    }
    report["instances"] = per;
    report["max_vec_error"] = max_err;
    report["min_cos_sim"] = min_cos;

    const std::string ppath = params_path(cfg, "construct_pca.params");
    save_params(ppath, params, Json{{"construction", {{"variant", "pca"}, {"d", d}, {"n", n}, {"k", k},
                                                      {"tau", cc.tau}, {"eps", cc.eps}}}}.dump());
    const std::string rpath = output_path(cfg["out_report"], "construct_pca.json");
    write_report(rpath, report);
    write_resolved_config(rpath, cfg);
    std::printf("layers %zu (expected %zu), max heads %zu, max vec error %.3g\n", info.layers,
                pca_layer_count(cc.tau, k), info.max_heads, max_err);
    return kOk;
}

int construct_gmm(const Json& cfg, ConstructionConfig cc) {
    const std::size_t d = cfg["d"], n = cfg["n"], instances = cfg["instances"];
    const auto seed = cfg["seed"].get<std::uint64_t>();
    std::size_t n1 = cfg["n1"];
    if (n1 == 0) n1 = choose_n1(d, n, cfg["sep"].get<double>());
    if (n1 < d + 2 || n1 + 1 > n) throw Error(ErrorKind::ConfigError, "n1 must satisfy d + 2 <= n1 <= n - 1");

    struct Case {
        GmmInstance g;
        AuxMatrix aux;
    };
    std::vector<Case> cases;
    double top = 0.0, bottom = INFINITY, xb = 0.0;
    for (std::size_t i = 0; i < instances; ++i) {
        Rng rng = Rng::for_stream(seed, i);
        Case c{gen_gmm(d, n, cfg["sep"], cfg["sigma2"], rng), {}};
        const CovEstimate cov = empirical_cov(c.g.x, n1);
        const SpectralResult orc = eigh_oracle(cov.cov, 1);
        c.aux = [&] {
            for (std::size_t draw = 0; draw < cfg["max_init_draws"].get<std::size_t>(); ++draw) {
                AuxMatrix a = build_aux_gmm(d, n, n1, rng);
                if (std::abs(dot(sphere_vectors(a.p, a.layout)[0], orc.vector(0))) >= cc.delta) return a;
            }
            throw Error(ErrorKind::DegenerateData, "no initialization with overlap >= delta in max_init_draws draws");
        }();
        top = std::max(top, orc.eigvals[0]);
        bottom = std::min(bottom, orc.eigvals[0]);
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t r = 0; r < d; ++r) s += (c.g.x(r, j) - cov.mean[r]) * (c.g.x(r, j) - cov.mean[r]);
            xb = std::max(xb, std::sqrt(s));
        }
        cases.push_back(std::move(c));
    }
    if (cfg["lambda_hi"].get<double>() == 0.0) {
        if (cases.empty()) throw Error(ErrorKind::ConfigError, "lambda_hi = 0 needs at least one instance");
        cc.lambda_hi = 1.5 * top;
    }
    if (cfg["lambda_lo"].get<double>() == 0.0) {
        if (cases.empty()) throw Error(ErrorKind::ConfigError, "lambda_lo = 0 needs at least one instance");
        cc.lambda_lo = 0.5 * bottom;
    }
    if (cc.x_bound == 0.0 && !cases.empty()) cc.x_bound = 2.0 * xb;
    cc.validate();

    ConstructionInfo info;
    Rng layout_rng(0);
    const AuxLayout layout = cases.empty() ? build_aux_gmm(d, n, n1, layout_rng).layout : cases.front().aux.layout;
    const TransformerParams params = build_gmm_network(d, n, n1, cc, layout, &info);

    Json report = info_json(info);
    report["variant"] = "gmm";
    report["n1"] = n1;
    report["expected_layer_count"] = gmm_layer_count(cc.tau);
    report["lambda_lo"] = cc.lambda_lo;
    report["lambda_hi"] = cc.lambda_hi;
    report["x_bound"] = cc.x_bound;
    Json per = Json::array();
    double min_agree = 1.0;
    for (const Case& c : cases) {
        const Vec init = sphere_vectors(c.aux.p, c.aux.layout)[0];
        const ClusterAssignment ref = spectral_cluster(c.g.x, n1, cc.tau, init);
        const GmmVerifyReport rep =
            verify_gmm_construction(params, make_episode(c.g.x, c.aux.p, c.aux.layout), ref.labels);
        per.push_back({{"sign_agreement", rep.sign_agreement}, {"max_abs_output", rep.max_abs_output}});
        min_agree = std::min(min_agree, rep.sign_agreement);
    }
    report["instances"] = per;
    report["min_sign_agreement"] = min_agree;

    const std::string ppath = params_path(cfg, "construct_gmm.params");
    save_params(ppath, params, Json{{"construction", {{"variant", "gmm"}, {"d", d}, {"n", n}, {"n1", n1},
                                                      {"tau", cc.tau}, {"eps", cc.eps}}}}.dump());
    const std::string rpath = output_path(cfg["out_report"], "construct_gmm.json");
    write_report(rpath, report);
    write_resolved_config(rpath, cfg);
    std::printf("layers %zu (expected %zu), max heads %zu, min sign agreement %.3f\n", info.layers,
                gmm_layer_count(cc.tau), info.max_heads, min_agree);
    return kOk;
}

}  // namespace

int cmd_construct(const Json& cfg) {
    ConstructionConfig cc;
    cc.tau = cfg["tau"];
    cc.eps = cfg["eps"];
    cc.eps0 = cfg["eps0"];
    cc.beta = cfg["beta"];
    cc.delta = cfg["delta"];
    cc.x_bound = cfg["x_bound"];
    cc.schedule = parse_schedule(cfg["schedule"]);
    // Placeholders so validate() can check the remaining fields before any data is drawn.
    cc.lambda_lo = cfg["lambda_lo"].get<double>() > 0.0 ? cfg["lambda_lo"].get<double>() : 1.0;
    cc.lambda_hi = cfg["lambda_hi"].get<double>() > 0.0 ? cfg["lambda_hi"].get<double>() : 2.0;
    if (cfg["lambda_lo"].get<double>() < 0.0 || cfg["lambda_hi"].get<double>() < 0.0) {
        throw Error(ErrorKind::ConfigError, "lambda bounds must be >= 0");
    }
    if (cfg["lambda_lo"].get<double>() > 0.0 && cfg["lambda_hi"].get<double>() > 0.0) cc.validate();
    const std::string variant = cfg["variant"];
    if (variant == "pca") return construct_pca(cfg, cc);
    if (variant == "gmm") return construct_gmm(cfg, cc);
    throw Error(ErrorKind::ConfigError, "variant must be pca or gmm");
}

}  // namespace spectral::cli
