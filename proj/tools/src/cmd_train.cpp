#include <cstdio>

#include "cli.hpp"
#include "spectral/error.hpp"
#include "spectral/train.hpp"

namespace spectral::cli {

Json train_defaults() {
    return Json{
        {"schema", "train.v1"},
        {"task", "eigvec"},
        {"k", 1u},
        {"vec_loss", "cos"},
        {"beta", 5.0},
        {"steps", 1000u},
        {"lr", 1e-3},
        {"seed", 0u},
        {"layers", 2u},
        {"heads", 2u},
        {"embed", 32u},
        {"hidden", 32u},
        {"activation", "relu"},
        {"init_scale", 1.0},
        {"d", 4u},
        {"n", 8u},
        {"sep_lo", 1.0},
        {"sep_hi", 6.0},
        {"sigma2_lo", 1.0},
        {"sigma2_hi", 1.0},
        {"use_aux", true},
        {"normalize_input", true},
        {"input_rms", 1.0},
        {"dataset_size", 0u},
        {"eval_every", 500u},
        {"eval_instances", 128u},
        {"out_ckpt", ""},
        {"out_history", ""},
        {"out_eval", ""},
        {"plot", ""},
    };
}

TaskKind parse_task(const std::string& s) {
    if (s == "eigvec") return TaskKind::EigVec;
    if (s == "eigval") return TaskKind::EigVal;
    if (s == "gmm") return TaskKind::Gmm;
    throw Error(ErrorKind::ConfigError, "task must be eigvec, eigval or gmm");
}

TrainConfig train_config_from_json(const Json& cfg) {
    TrainConfig tc;
    tc.task.kind = parse_task(cfg["task"]);
    tc.task.k = cfg["k"];
    const std::string vl = cfg["vec_loss"];
    if (vl == "cos") {
        tc.task.vec_loss = VecLoss::Cos;
    } else if (vl == "eigenspace") {
        tc.task.vec_loss = VecLoss::Eigenspace;
    } else {
        throw Error(ErrorKind::ConfigError, "vec_loss must be cos or eigenspace");
    }
    tc.task.beta = cfg["beta"];
    tc.steps = cfg["steps"];
    tc.lr = cfg["lr"];
    tc.seed = cfg["seed"];
    tc.layers = cfg["layers"];
    tc.heads = cfg["heads"];
    tc.embed = cfg["embed"];
    tc.hidden = cfg["hidden"];
    const std::string act = cfg["activation"];
    if (act == "relu") {
        tc.activation = Activation::ReLU;
    } else if (act == "softmax") {
        tc.activation = Activation::Softmax;
    } else {
        throw Error(ErrorKind::ConfigError, "activation must be relu or softmax");
    }
    tc.init_scale = cfg["init_scale"];
    tc.d = cfg["d"];
    tc.n = cfg["n"];
    tc.sep_lo = cfg["sep_lo"];
    tc.sep_hi = cfg["sep_hi"];
    tc.sigma2_lo = cfg["sigma2_lo"];
    tc.sigma2_hi = cfg["sigma2_hi"];
    tc.use_aux = cfg["use_aux"];
    tc.normalize_input = cfg["normalize_input"];
    tc.input_rms = cfg["input_rms"];
    tc.dataset_size = cfg["dataset_size"];
    tc.eval_every = cfg["eval_every"];
    tc.eval_instances = cfg["eval_instances"];
    tc.validate();
    return tc;
}

int cmd_train(const Json& cfg) {
    const TrainConfig tc = train_config_from_json(cfg);
    const TrainResult res = train_loop(tc);

    const std::string hist_path = output_path(cfg["out_history"], "train_history.csv");
    CsvTable hist({"step", "loss"});
    for (std::size_t i = 0; i < res.history.size(); ++i) hist.add({std::to_string(i), fmt(res.history[i])});
    hist.write(hist_path);
    write_resolved_config(hist_path, cfg);

    CsvTable evals({"step", "loss", "metric"});
    for (const EvalRow& r : res.evals) evals.add({std::to_string(r.step), fmt(r.loss), fmt(r.metric)});
    evals.write(output_path(cfg["out_eval"], "train_eval.csv"));

    if (res.diverged) {
        std::fprintf(stderr, "error: %s\n",
                     Error(ErrorKind::DivergenceDetected,
                           "non-finite loss at step " + std::to_string(res.diverged_step))
                         .what());
        return kDiverged;
    }

    save_checkpoint(output_path(cfg["out_ckpt"], "train.params"), res.params, tc, res.history.size());

    const std::string plot = cfg["plot"];
    if (!plot.empty()) {
        std::vector<Series> series;
        Series loss{"train loss", {}, {}};
        for (std::size_t i = 0; i < res.history.size(); ++i) {
            loss.x.push_back(static_cast<double>(i));
            loss.y.push_back(res.history[i]);
        }
        series.push_back(std::move(loss));
        if (!res.evals.empty()) {
            Series metric{"held-out metric", {}, {}};
            for (const EvalRow& r : res.evals) {
                metric.x.push_back(static_cast<double>(r.step));
                metric.y.push_back(r.metric);
            }
            series.push_back(std::move(metric));
        }
        emit_svg_plot(series, plot, {"training " + to_string(tc.task.kind), "step", "value"});
    }
    if (!res.evals.empty()) {
        const EvalRow& last = res.evals.back();
        std::printf("step %zu held-out loss %.6g metric %.6g\n", last.step, last.loss, last.metric);
    }
    return kOk;
}

}  // namespace spectral::cli
