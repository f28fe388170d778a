#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sfda/mat.hpp"

namespace sfda::nn {

// Floor for log arguments in every cross-entropy in the project.
constexpr double kLogFloor = 1e-12;

struct DenseLayer {
    Mat weight;  // out x in
    Vec bias;    // out
};

// MLP feature extractor plus a weight-normalized linear classifier.
// The effective classifier row c is
//   classifier_scale[c] * classifier_direction[c] / ||classifier_direction[c]||_2,
// recomputed on every forward pass so the identity holds by construction.
struct ModelParams {
    std::vector<DenseLayer> extractor;
    Mat classifier_direction;  // K x d
    Vec classifier_scale;      // K
    int input_dim = 0;
    int feature_dim = 0;
    int class_count = 0;

    // [input_dim, hidden..., feature_dim, class_count]
    std::vector<int> arch() const;
};

// Gradient (or velocity) arrays mirroring ModelParams.
struct Gradients {
    std::vector<DenseLayer> extractor;
    Mat classifier_direction;
    Vec classifier_scale;
};

struct OptState {
    Gradients velocity;
    double momentum = 0.9;
    double weight_decay = 1e-3;
};

struct Forward {
    Mat features;  // B x d
    Mat logits;    // B x K
};

struct Batch {
    Mat inputs;
    std::vector<int> sample_indices;
    std::vector<int> labels;  // empty when unlabeled
};

// Deterministic scaled-uniform init: weights ~ U(-a, a) with
// a = sqrt(6 / (fan_in + fan_out)), biases zero. classifier_scale is set to
// the row norms of the drawn classifier_direction, so the weight-norm
// identity holds at step 0.
ModelParams init_params(const std::vector<int>& arch, uint64_t seed);

Gradients zeros_like(const ModelParams& params);
OptState make_opt_state(const ModelParams& params, double momentum, double weight_decay);

// ReLU between hidden layers, identity at the feature layer, logits through
// the weight-norm identity.
Forward forward(const ModelParams& params, const Mat& inputs);

// Row-wise softmax with max-subtraction.
Mat softmax(const Mat& logits);

// Per-sample H(target, probs) = -sum_k target_k log(max(probs_k, kLogFloor)).
Vec soft_cross_entropy(const Mat& target, const Mat& probs);

// Mean cross-entropy against (1-eps)*onehot + eps/K targets.
double label_smoothed_ce(const Mat& logits, const std::vector<int>& labels, double eps);

// Exact reverse-mode gradients of the scalar loss whose d(loss)/d(logits) is
// supplied, including the weight-norm chain rule for (direction, scale).
Gradients backward(const ModelParams& params, const Mat& inputs, const Mat& grad_logits);

// Classical momentum with coupled weight decay, applied to every learnable
// array: v <- momentum*v + g + wd*theta; theta <- theta - lr*v.
void sgd_momentum_step(ModelParams& params, const Gradients& grads, OptState& state, double lr);

// gamma0 * (1 + 10 p)^(-0.75), p in [0, 1].
double lr_at_progress(double gamma0, double p);

// Versioned text checkpoints: every named array with its shape and row-major
// values at 17 significant digits, so reloading reproduces forward outputs
// bit-for-bit on the same platform.
void save_checkpoint(const ModelParams& params, const std::string& path);
ModelParams load_checkpoint(const std::string& path);

} // namespace sfda::nn
