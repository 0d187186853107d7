#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "spectral/episode.hpp"
#include "spectral/gmm.hpp"
#include "spectral/mat.hpp"
#include "spectral/rng.hpp"
#include "spectral/transformer.hpp"

namespace spectral {

/// Same shapes as the parameters; entries are dL/dtheta.
using Gradients = TransformerParams;

/// Gradients with every matrix zeroed, shaped like `params`.
Gradients zeros_like(const TransformerParams& params);

/// Pointers to every scalar in container order (per layer: heads V, Q, K; W1; W2; then adapters).
std::vector<double*> coordinates(TransformerParams& params);
std::vector<const double*> coordinates(const TransformerParams& params);

/// Exact reverse-mode gradient of tf_forward at `h` for upstream gradient `dout`.
/// ReLU derivative at 0 is taken as 0.
Gradients backward(const TransformerParams& params, const Mat& h, const Mat& dout);
Gradients backward(const TransformerParams& params, const ForwardTrace& trace, const Mat& h, const Mat& dout);

/// theta <- theta - lr * g
void sgd_step(TransformerParams& params, const Gradients& g, double lr);

enum class TaskKind { EigVec, EigVal, Gmm };
enum class VecLoss { Cos, Eigenspace };

struct TaskSpec {
    TaskKind kind = TaskKind::EigVec;
    std::size_t k = 1;
    VecLoss vec_loss = VecLoss::Cos;
    double beta = 5.0;  // Gmm: s = tanh(beta * output)
};

struct Target {
    Mat eigvecs;   // d x k (EigVec)
    Vec eigvals;   // k (EigVal)
    Labels labels; // N (Gmm)
};

struct LossValue {
    double loss = 0.0;
    Mat grad;  // dL/d(output)
};

/// Loss and its gradient with respect to the raw network output.
/// EigVec/cos aligns each target column's sign with the prediction first.
LossValue task_loss(const TaskSpec& task, const Mat& output, const Target& target);

/// Smallest distance of any ReLU argument (attention scores, FC pre-activations) from 0.
double min_kink_distance(const TransformerParams& params, const Mat& h);

struct GradCheckOptions {
    double h = 1e-5;
    std::uint64_t subset_seed = 0;
    std::size_t full_limit = 10000;  // above this many coordinates check a 1% subset
    double corrupt_factor = 1.0;     // test hook: scales the analytic gradient
    // Denominator floor. At h = 1e-5 the numeric derivative carries ~1e-11 of roundoff,
    // so a floor near 1e-8 flags correct gradients of magnitude < 1e-7.
    double denom_floor = 1e-6;
};

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::size_t worst_index = 0;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
    std::size_t checked = 0;
    std::string worst_name;
};

using LossFn = std::function<LossValue(const Mat& output)>;

/// Central differences against backward(); relative error uses max(|a|, |n|, denom_floor).
GradCheckResult grad_check(const TransformerParams& params, const Mat& h, const LossFn& loss,
                           const GradCheckOptions& opts = {});

/// Human-readable location of coordinate `index` (e.g. "layer 1 head 0 Q[2,3]").
std::string coordinate_name(const TransformerParams& params, std::size_t index);

struct TrainConfig {
    TaskSpec task;
    std::size_t steps = 1000;
    double lr = 1e-3;
    std::uint64_t seed = 0;
    // architecture
    std::size_t layers = 2;
    std::size_t heads = 2;
    std::size_t embed = 32;
    std::size_t hidden = 32;
    Activation activation = Activation::ReLU;
    double init_scale = 1.0;
    // data
    std::size_t d = 4;
    std::size_t n = 8;
    double sep_lo = 1.0;
    double sep_hi = 6.0;
    double sigma2_lo = 1.0;
    double sigma2_hi = 1.0;
    bool use_aux = true;
    bool normalize_input = true;   // rescale X so its columns have RMS norm input_rms
    double input_rms = 1.0;
    std::size_t dataset_size = 0;  // 0: a fresh instance every step
    // evaluation
    std::size_t eval_every = 500;
    std::size_t eval_instances = 128;

    void validate() const;
    Arch arch() const;
    /// Canonical one-line description used for the checkpoint hash.
    std::string canonical() const;
};

struct Instance {
    Episode ep;
    Target target;
};

Instance make_instance(const TrainConfig& cfg, Rng& rng);

struct EvalRow {
    std::size_t step = 0;
    double loss = 0.0;
    double metric = 0.0;  // EigVec: mean |cos|, EigVal: squared relative error, Gmm: clustering loss
};

/// Mean loss and task metric of `params` over `instances`.
EvalRow evaluate(const TrainConfig& cfg, const TransformerParams& params, const std::vector<Instance>& instances);

struct TrainResult {
    TransformerParams params;
    std::vector<double> history;  // loss at every completed step
    std::vector<EvalRow> evals;
    bool diverged = false;
    std::size_t diverged_step = 0;
};

/// Plain SGD. A non-finite loss stops the run with diverged = true and the history so far.
TrainResult train_loop(const TrainConfig& cfg);

/// Held-out instances drawn from the evaluation stream of cfg.seed.
std::vector<Instance> held_out_instances(const TrainConfig& cfg, std::size_t count);

std::uint64_t fnv1a64(const std::string& s);

void save_checkpoint(const std::string& path, const TransformerParams& params, const TrainConfig& cfg,
                     std::size_t step);

std::string to_string(TaskKind k);

}  // namespace spectral
