#include <chrono>
#include <cstdio>
#include <filesystem>

#include "cli.hpp"
#include "spectral/datasets.hpp"
#include "spectral/error.hpp"
#include "spectral/linalg.hpp"
#include "spectral/metrics.hpp"
#include "spectral/rng.hpp"

namespace spectral::cli {

Json pca_defaults() {
    return Json{
        {"schema", "pca.v1"},
        {"d", 4u},
        {"n", 10u},
        {"k", 2u},
        {"tau", 200u},
        {"trials", 10u},
        {"seed", 0u},
        {"out", ""},
        {"csv_in", ""},
        {"transpose", false},
        {"threads", 1u},
        {"plot", ""},
    };
}

namespace {

struct TrialResult {
    Vec cos;
    double eigenspace = 0.0;
    double rmse = 0.0;
    double wall_ms = 0.0;
};

}  // namespace

int cmd_pca(const Json& cfg) {
    const auto k = cfg["k"].get<std::size_t>();
    const auto tau = cfg["tau"].get<std::size_t>();
    const auto trials = cfg["trials"].get<std::size_t>();
    const auto seed = cfg["seed"].get<std::uint64_t>();
    const std::string csv_in = cfg["csv_in"];

    Mat fixed;
    std::size_t d = cfg["d"];
    std::size_t n = cfg["n"];
    if (!csv_in.empty()) {
        fixed = load_csv_matrix(csv_in, CsvOptions{cfg["transpose"].get<bool>()});
        d = fixed.rows();
        n = fixed.cols();
    }
    if (k == 0) throw Error(ErrorKind::ConfigError, "k must be positive");
    if (k > d) throw Error(ErrorKind::KTooLarge, "k exceeds d");
    if (d == 0 || n == 0) throw Error(ErrorKind::ConfigError, "d and n must be positive");
    if (trials == 0) throw Error(ErrorKind::ConfigError, "trials must be positive");

    std::vector<TrialResult> results(trials);
    parallel_for(trials, cfg["threads"], [&](std::size_t t) {
        Rng rng = Rng::for_stream(seed, t);
        const auto start = std::chrono::steady_clock::now();
        const Mat x = fixed.empty() ? gen_synthetic_pca(d, n, rng) : fixed;
        std::vector<Vec> init;
        for (std::size_t i = 0; i < k; ++i) init.push_back(sample_unit_sphere(d, rng));
        const SpectralResult est = power_method(x, tau, k, init);
        const SpectralResult ref = eigh_oracle(matmul_nt(x, x), k);
        TrialResult& r = results[t];
        for (std::size_t i = 0; i < k; ++i) {
            r.cos.push_back(cos_loss(Mat::column(ref.vector(i)), Mat::column(est.vector(i))));
        }
        r.eigenspace = eigenspace_loss_unchecked(ref.eigvecs, est.eigvecs);
        r.rmse = rmse_eigvals(ref.eigvals, est.eigvals);
        r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    });

    std::vector<std::string> header{"trial"};
    for (std::size_t i = 1; i <= k; ++i) header.push_back("cos_loss_" + std::to_string(i));
    header.push_back("eigenspace_loss");
    header.push_back("rmse_eigvals");
    CsvTable table(header);
    CsvTable timing({"trial", "wall_ms"});
    for (std::size_t t = 0; t < trials; ++t) {
        std::vector<std::string> row{std::to_string(t)};
        for (double c : results[t].cos) row.push_back(fmt(c));
        row.push_back(fmt(results[t].eigenspace));
        row.push_back(fmt(results[t].rmse));
        table.add(std::move(row));
        char ms[32];
        std::snprintf(ms, sizeof ms, "%.3f", results[t].wall_ms);
        timing.add({std::to_string(t), ms});
    }

    const std::string out = output_path(cfg["out"], "pca.csv");
    table.write(out);
    std::filesystem::path tp(out);
    tp.replace_extension(".timing.csv");
    timing.write(tp.string());
    write_resolved_config(out, cfg);

    const std::string plot = cfg["plot"];
    if (!plot.empty()) {
        std::vector<Series> series;
        for (std::size_t i = 0; i < k; ++i) {
            Series s{"cos_loss_" + std::to_string(i + 1), {}, {}};
            for (std::size_t t = 0; t < trials; ++t) {
                s.x.push_back(static_cast<double>(t));
                s.y.push_back(results[t].cos[i]);
            }
            series.push_back(std::move(s));
        }
        emit_svg_plot(series, plot, {"power method vs oracle", "trial", "cos loss"});
    }
    std::printf("wrote %zu rows to %s\n", trials, out.c_str());
    return kOk;
}

}  // namespace spectral::cli
