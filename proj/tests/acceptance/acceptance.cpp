// Acceptance driver: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "spectral/construction.hpp"
#include "spectral/datasets.hpp"
#include "spectral/error.hpp"
#include "spectral/gmm.hpp"
#include "spectral/linalg.hpp"
#include "spectral/metrics.hpp"
#include "spectral/train.hpp"
#include "spectral/transformer.hpp"
#include "test_util.hpp"

#ifdef SPECTRAL_CLI_PATH
#include "cli.hpp"
using spectral::cli::Json;
#endif

namespace fs = std::filesystem;
using namespace spectral;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string strf(const char* f, double a = 0, double b = 0, double c = 0, double d = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

fs::path scratch_dir(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("spectral_acceptance_" + std::to_string(getpid())) / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

double dotv(const Vec& a, const Vec& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// d x N data whose Gram matrix X X^T has exactly the given spectrum (N >= d).
Mat data_with_spectrum(const Vec& spectrum, std::size_t n, Rng& rng) {
    const std::size_t d = spectrum.size();
    Mat g = test::gaussian(d, n, rng);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t p = 0; p < i; ++p) {
            double s = 0;
            for (std::size_t j = 0; j < n; ++j) s += g(i, j) * g(p, j);
            for (std::size_t j = 0; j < n; ++j) g(i, j) -= s * g(p, j);
        }
        double nn = 0;
        for (std::size_t j = 0; j < n; ++j) nn += g(i, j) * g(i, j);
        nn = std::sqrt(nn);
        for (std::size_t j = 0; j < n; ++j) g(i, j) /= nn;
    }
    Vec root(d);
    for (std::size_t i = 0; i < d; ++i) root[i] = std::sqrt(spectrum[i]);
    const Mat q = test::spd_with_spectrum(root, rng);  // symmetric square root of Q diag(lambda) Q^T
    Mat x(d, n);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0;
            for (std::size_t m = 0; m < d; ++m) s += q(i, m) * g(m, j);
            x(i, j) = s;
        }
    }
    return x;
}

// Descending spectrum with consecutive ratios in [lo, hi], top eigenvalue in [1, 10].
Vec geometric_spectrum(std::size_t d, double lo, double hi, Rng& rng) {
    Vec s(d);
    s[0] = rng.uniform(1.0, 10.0);
    for (std::size_t i = 1; i < d; ++i) s[i] = s[i - 1] * rng.uniform(lo, hi);
    return s;
}

double relative_gap(const Vec& full, std::size_t k) {
    double g = INFINITY;
    for (std::size_t i = 0; i < k && i + 1 < full.size(); ++i) g = std::min(g, (full[i] - full[i + 1]) / full[i]);
    return g;
}

double phi(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// ---------------------------------------------------------------------------

Outcome layer_counts() {
#ifdef SPECTRAL_CLI_PATH
    const fs::path dir = scratch_dir("layers");
    std::size_t bad = 0, runs = 0;
    auto run = [&](const std::string& variant, std::size_t tau, std::size_t k) {
        Json over = {{"variant", variant}, {"tau", tau}, {"k", k}, {"d", 3u}, {"n", variant == "gmm" ? 16u : 8u},
                     {"instances", 1u}, {"eps", 0.1}};
        const std::string stem = variant + "_" + std::to_string(tau) + "_" + std::to_string(k);
        over["out_params"] = (dir / (stem + ".params")).string();
        over["out_report"] = (dir / (stem + ".json")).string();
        const Json cfg = cli::resolve_config(cli::construct_defaults(), Json::object(), over);
        if (cli::cmd_construct(cfg) != 0) return false;
        std::ifstream in(over["out_report"].get<std::string>());
        const Json rep = Json::parse(in);
        const std::size_t expect = variant == "pca" ? 2 * tau + 4 * k + 1 : 2 * tau + 7;
        return rep["layer_count"].get<std::size_t>() == expect;
    };
    for (std::size_t tau = 1; tau <= 8; ++tau) {
        for (std::size_t k = 1; k <= 3; ++k) {
            ++runs;
            if (!run("pca", tau, k)) ++bad;
        }
        ++runs;
        if (!run("gmm", tau, 1)) ++bad;
    }
    return {bad == 0, strf("%.0f/%.0f construct runs report L = 2tau+4k+1 (pca) / 2tau+7 (gmm)", runs - bad, runs)};
#else
    return {false, "built without tools; cmd_construct unavailable"};
#endif
}

Outcome power_method_oracle() {
    double worst_cos = 1.0, worst_rel = 0.0;
    for (std::uint64_t s = 0; s < 50; ++s) {
        Rng rng = Rng::for_stream(1000, s);
        const std::size_t d = 2 + rng.below(7);
        const std::size_t n = d + rng.below(8);
        const std::size_t k = 1 + rng.below(std::min<std::size_t>(d, 3));
        const Mat x = data_with_spectrum(geometric_spectrum(d, 0.2, 0.8, rng), n, rng);
        const SpectralResult full = eigh_full(symmetrize(x));
        if (relative_gap(full.eigvals, k) < 0.2) return {false, "generated instance violates the gap floor"};
        std::vector<Vec> init;
        for (std::size_t i = 0; i < k; ++i) init.push_back(sample_unit_sphere(d, rng));
        const SpectralResult pm = power_method(x, 200, k, init);
        for (std::size_t i = 0; i < k; ++i) {
            worst_cos = std::min(worst_cos, std::abs(dotv(pm.vector(i), full.vector(i))));
            worst_rel = std::max(worst_rel, std::abs(pm.eigvals[i] - full.eigvals[i]) / full.eigvals[i]);
        }
    }
    return {worst_cos >= 1 - 1e-6 && worst_rel <= 1e-6,
            strf("50 instances, min |cos| = 1 - %.2e, max eigval rel err = %.2e", 1 - worst_cos, worst_rel)};
}

struct FidelityCase {
    Mat x;
    AuxMatrix aux;
    std::size_t k;
    double top, bottom;
};

Outcome construction_fidelity() {
    std::vector<FidelityCase> cases;
    for (std::uint64_t s = 0; s < 20; ++s) {
        Rng rng = Rng::for_stream(2000, s);
        const std::size_t d = 2 + rng.below(5);
        const std::size_t n = d + rng.below(13 - d);
        const std::size_t k = 1 + s % 2;
        const Mat x = data_with_spectrum(geometric_spectrum(d, 0.2, 0.7, rng), n, rng);
        const SpectralResult o = eigh_oracle(symmetrize(x), k);
        AuxMatrix aux;
        for (int draw = 0;; ++draw) {
            if (draw == 1000) return {false, "no init with overlap >= 0.2"};
            aux = build_aux_pca(d, n, k, rng);
            const auto init = sphere_vectors(aux.p, aux.layout);
            bool ok = true;
            for (std::size_t i = 0; i < k; ++i) ok = ok && std::abs(dotv(init[i], o.vector(i))) >= 0.2;
            if (ok) break;
        }
        cases.push_back({x, aux, k, o.eigvals[0], o.eigvals[k - 1]});
    }
    auto run = [&](double eps, double* worst) {
        double total = 0;
        std::size_t count = 0;
        *worst = 0;
        for (const FidelityCase& c : cases) {
            ConstructionConfig cfg;
            cfg.tau = 8;
            cfg.eps = eps;
            cfg.delta = 0.2;
            cfg.lambda_hi = 1.5 * c.top;
            cfg.lambda_lo = 0.5 * c.bottom;
            const std::size_t d = c.x.rows(), n = c.x.cols();
            const TransformerParams p = build_pca_network(d, n, c.k, cfg, c.aux.layout);
            const SpectralResult ref = power_method(c.x, cfg.tau, c.k, sphere_vectors(c.aux.p, c.aux.layout));
            const VerifyReport rep = verify_construction(p, make_episode(c.x, c.aux.p, c.aux.layout), ref);
            for (double e : rep.vec_error) {
                total += e;
                ++count;
            }
            *worst = std::max(*worst, rep.max_vec_error);
        }
        return total / static_cast<double>(count);
    };
    double w1, w2, w3;
    const double m1 = run(0.1, &w1), m2 = run(0.03, &w2), m3 = run(0.01, &w3);
    const bool pass = w3 <= 0.05 && m2 <= m1 && m3 <= m2;
    return {pass, strf("max err at eps=1e-2: %.3g; mean err over eps {0.1,0.03,0.01}: %.3g, %.3g, %.3g", w3, m1, m2,
                       m3)};
}

double mean_errors(std::size_t d, std::size_t n, double sep, std::size_t seeds, std::uint64_t base,
                   double* bayes_mean) {
    double sp = 0, by = 0;
    for (std::uint64_t s = 0; s < seeds; ++s) {
        Rng rng = Rng::for_stream(base, s);
        const GmmInstance g = gen_gmm(d, n, sep, 1.0, rng);
        const std::size_t n1 = choose_n1(d, n, sep);
        sp += gmm_loss(spectral_cluster(g.x, n1, 100, rng).labels, g.z);
        by += gmm_loss(bayes_cluster(g.x, g.mu0, g.mu1).labels, g.z);
    }
    if (bayes_mean) *bayes_mean = by / static_cast<double>(seeds);
    return sp / static_cast<double>(seeds);
}

Outcome gmm_vs_bayes() {
    bool pass = true;
    double worst_ratio = 0;
    std::uint64_t base = 3000;
    for (std::size_t d : {2u, 5u, 10u}) {
        for (double sep : {3.0, 4.0, 5.0}) {
            double by;
            const double sp = mean_errors(d, 1000, sep, 50, base++, &by);
            const double ratio = sp / by;
            worst_ratio = std::max(worst_ratio, ratio);
            if (!(sp <= 2 * by)) pass = false;
        }
    }
    // Rate shape with sep(N) = sqrt(2 ln N), the separation growth the rate bound assumes.
    std::vector<double> lx, ly;
    for (std::size_t n : {500u, 2000u, 8000u}) {
        const double e = mean_errors(5, n, std::sqrt(2 * std::log(static_cast<double>(n))), 50, base++, nullptr);
        lx.push_back(std::log(static_cast<double>(n)));
        ly.push_back(std::log(e));
    }
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / 3, my = std::accumulate(ly.begin(), ly.end(), 0.0) / 3;
    double sxy = 0, sxx = 0;
    for (int i = 0; i < 3; ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    const double slope = sxy / sxx;
    pass = pass && slope >= -0.55 && slope <= -0.15;
    return {pass, strf("worst spectral/Bayes ratio %.3f (sep 3..5, d 2/5/10); log-log slope %.3f", worst_ratio, slope)};
}

Outcome bayes_sanity() {
    Rng rng(4000);
    const GmmInstance g = gen_gmm(1, 100000, 2.0, 1.0, rng);
    const double err = gmm_loss(bayes_cluster(g.x, g.mu0, g.mu1).labels, g.z);
    const double expect = phi(-1.0);
    return {std::abs(err - expect) <= 0.01, strf("empirical %.4f vs Phi(-1) = %.4f", err, expect)};
}

Outcome gradients() {
    const double h = 1e-5;
    double worst = 0;
    std::size_t unguarded = 0;
    auto check = [&](std::size_t i, double corrupt, bool* guarded) {
        TrainConfig tc;
        tc.task.kind = i % 3 == 0 ? TaskKind::EigVec : i % 3 == 1 ? TaskKind::EigVal : TaskKind::Gmm;
        tc.task.k = tc.task.kind == TaskKind::Gmm ? 1 : 1 + (i / 3) % 2;
        tc.task.vec_loss = (i / 2) % 2 ? VecLoss::Eigenspace : VecLoss::Cos;
        tc.activation = i % 5 == 4 ? Activation::Softmax : Activation::ReLU;
        tc.seed = 5000 + i;
        tc.d = 2 + i % 2;
        tc.n = 8;
        tc.embed = 6;
        tc.hidden = 6;
        tc.use_aux = false;
        tc.steps = 1;
        tc.validate();
        Rng rng = Rng::for_stream(tc.seed, 3);
        TransformerParams params;
        Instance inst;
        double margin = -1;
        for (int draw = 0; draw < 200 && margin < 10 * h; ++draw) {
            TransformerParams p = init_params(tc.arch(), tc.init_scale, rng);
            Instance in = make_instance(tc, rng);
            const double m = min_kink_distance(p, in.ep.h);
            if (m > margin) {
                margin = m;
                params = std::move(p);
                inst = std::move(in);
            }
        }
        *guarded = margin >= 10 * h;
        GradCheckOptions opts;
        opts.h = h;
        opts.subset_seed = tc.seed;
        opts.corrupt_factor = corrupt;
        const LossFn loss = [&](const Mat& out) { return task_loss(tc.task, out, inst.target); };
        return grad_check(params, inst.ep.h, loss, opts).max_rel_error;
    };
    for (std::size_t i = 0; i < 20; ++i) {
        bool guarded;
        worst = std::max(worst, check(i, 1.0, &guarded));
        if (!guarded) ++unguarded;
    }
    bool guarded;
    const double corrupted = check(0, 1.01, &guarded);
    return {worst <= 1e-4 && unguarded == 0 && corrupted > 1e-4,
            strf("20 triples max rel err %.2e (%.0f unguarded); corrupted x1.01 gives %.2e", worst, unguarded,
                 corrupted)};
}

Outcome toy_training() {
    std::string vals;
    std::size_t good = 0;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        TrainConfig c;
        c.task.kind = TaskKind::EigVec;
        c.task.k = 1;
        c.task.vec_loss = VecLoss::Cos;
        c.d = 4;
        c.n = 8;
        c.layers = 2;
        c.heads = 2;
        c.embed = 32;
        c.steps = 20000;
        c.lr = 1e-3;
        c.seed = seed;
        // Knobs left open by the criterion.
        c.hidden = 64;
        c.init_scale = 0.35;
        c.input_rms = 5.0;
        c.use_aux = true;
        c.eval_every = 20000;
        c.eval_instances = 512;
        const TrainResult r = train_loop(c);
        const double m = r.diverged || r.evals.empty() ? 0.0 : r.evals.back().metric;
        if (m >= 0.9) ++good;
        vals += strf(vals.empty() ? "%.4f" : ", %.4f", m);
    }
    return {good == 3, "held-out mean |cos| per seed: " + vals};
}

Outcome metric_identities() {
    Rng rng(6000);
    double worst = 0;
    auto labels = [&](std::size_t n, std::size_t r) {
        Labels z(n);
        for (int& v : z) v = static_cast<int>(rng.below(r));
        return z;
    };
    bool ok = true;
    for (int t = 0; t < 1000; ++t) {
        const std::size_t n = 1 + rng.below(60);
        const Labels a = labels(n, 2), b = labels(n, 2);
        Labels flip(a);
        for (int& v : flip) v = 1 - v;
        const double l = gmm_loss(a, b);
        ok = ok && l == gmm_loss(flip, b) && l == gmm_loss(b, a) && std::abs(l - gmm_loss_k(a, b, 2)) <= 1e-15;
    }
    for (int t = 0; t < 200; ++t) {
        const std::size_t n = 2 + rng.below(40), r = 2 + rng.below(4);
        const Labels a = labels(n, r), b = labels(n, r);
        std::vector<int> perm(r);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng.engine());
        Labels pa(a);
        for (int& v : pa) v = perm[static_cast<std::size_t>(v)] + 7;
        worst = std::max({worst, std::abs(ari(a, b) - ari(pa, b)), std::abs(nmi(a, b) - nmi(pa, b))});
    }
    ok = ok && worst <= 1e-12;
    // Exhaustive: ARI against a direct count over item pairs.
    double ari_err = 0;
    for (std::size_t n = 2; n <= 8; ++n) {
        for (unsigned ma = 0; ma < (1u << n); ++ma) {
            for (unsigned mb = 0; mb < (1u << n); ++mb) {
                Labels a(n), b(n);
                for (std::size_t i = 0; i < n; ++i) {
                    a[i] = (ma >> i) & 1;
                    b[i] = (mb >> i) & 1;
                }
                double both = 0, sa = 0, sb = 0;
                for (std::size_t i = 0; i < n; ++i) {
                    for (std::size_t j = i + 1; j < n; ++j) {
                        const bool xa = a[i] == a[j], xb = b[i] == b[j];
                        sa += xa;
                        sb += xb;
                        both += xa && xb;
                    }
                }
                const double pairs = n * (n - 1) / 2.0;
                const double expected = sa * sb / pairs, denom = 0.5 * (sa + sb) - expected;
                const double want = denom == 0 ? 1.0 : (both - expected) / denom;
                ari_err = std::max(ari_err, std::abs(ari(a, b) - want));
            }
        }
    }
    ok = ok && ari_err <= 1e-12;
    double rot_err = 0;
    for (int t = 0; t < 100; ++t) {
        const std::size_t d = 3 + rng.below(5), k = 1 + rng.below(3);
        const SpectralResult basis = eigh_full(symmetrize(test::gaussian(d, d, rng)));
        const SpectralResult other = eigh_full(symmetrize(test::gaussian(d, d, rng)));
        Mat v(d, k), w(d, k);
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = 0; j < k; ++j) {
                v(i, j) = basis.eigvecs(i, j);
                w(i, j) = other.eigvecs(i, j);
            }
        }
        const SpectralResult rot = eigh_full(symmetrize(test::gaussian(k, k, rng)));
        Mat wr(d, k);
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = 0; j < k; ++j) {
                double s = 0;
                for (std::size_t m = 0; m < k; ++m) s += w(i, m) * rot.eigvecs(m, j);
                wr(i, j) = s;
            }
        }
        rot_err = std::max(rot_err, std::abs(eigenspace_loss(v, w) - eigenspace_loss(v, wr)));
    }
    ok = ok && rot_err <= 1e-10;
    return {ok, strf("permutation drift %.1e, exhaustive ARI err %.1e, rotation drift %.1e", worst, ari_err, rot_err)};
}

Outcome anti_concentration() {
    Rng rng(7000);
    const Vec v = sample_unit_sphere(10, rng);
    std::size_t hits = 0;
    const std::size_t draws = 100000;
    for (std::size_t i = 0; i < draws; ++i) {
        if (std::abs(dotv(v, sample_unit_sphere(10, rng))) <= 0.01) ++hits;
    }
    const double p = static_cast<double>(hits) / draws;
    return {p <= 0.05, strf("P(|v^T x| <= 0.01) = %.4f at d=10", p)};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome cli_determinism() {
#ifdef SPECTRAL_CLI_PATH
    const std::vector<std::string> cmds = {
        "pca --trials 4 --seed 3",
        "gmm --trials 5 --n 400 --sep-values 2,4",
        "train --steps 60 --eval-every 20 --eval-instances 8",
        "train --task gmm --steps 40 --eval-every 20 --eval-instances 8 --out-history g.csv --out-eval ge.csv "
        "--out-ckpt g.params",
        "construct --tau 3 --instances 2",
        "construct --variant gmm --tau 3 --n 20 --instances 2",
    };
    std::size_t files = 0, diffs = 0;
    std::vector<fs::path> dirs;
    for (int rep = 0; rep < 2; ++rep) {
        const fs::path dir = scratch_dir("determinism_" + std::to_string(rep));
        dirs.push_back(dir);
        for (const std::string& c : cmds) {
            const std::string line =
                "cd '" + dir.string() + "' && '" SPECTRAL_CLI_PATH "' " + c + " > /dev/null 2>&1";
            if (std::system(line.c_str()) != 0) return {false, "command failed: " + c};
        }
    }
    for (const auto& e : fs::directory_iterator(dirs[0])) {
        const std::string name = e.path().filename().string();
        if (name.find(".timing.") != std::string::npos) continue;
        ++files;
        if (!fs::exists(dirs[1] / name) || slurp(e.path()) != slurp(dirs[1] / name)) ++diffs;
    }
    return {files > 0 && diffs == 0, strf("%.0f output files over %.0f commands, %.0f differ", files, cmds.size(), diffs)};
#else
    return {false, "built without tools; no CLI binary"};
#endif
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        std::function<Outcome()> fn;
    };
    const std::vector<Criterion> all = {
        {"layer-count identities", layer_counts},
        {"power-method oracle equivalence", power_method_oracle},
        {"construction fidelity", construction_fidelity},
        {"gmm spectral vs bayes", gmm_vs_bayes},
        {"bayes sanity", bayes_sanity},
        {"gradient correctness", gradients},
        {"toy training", toy_training},
        {"metric identities", metric_identities},
        {"anti-concentration", anti_concentration},
        {"cli determinism", cli_determinism},
    };
    int failed = 0;
    for (std::size_t i = 0; i < all.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = all[i].fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (!o.pass) ++failed;
        std::printf("%s %2zu %-32s %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", i + 1, all[i].name, o.detail.c_str(),
                    secs);
        std::fflush(stdout);
    }
    fs::remove_all(fs::temp_directory_path() / ("spectral_acceptance_" + std::to_string(getpid())));
    return failed == 0 ? 0 : 1;
}
