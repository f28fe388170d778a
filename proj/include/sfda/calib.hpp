#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sfda/augment.hpp"
#include "sfda/mat.hpp"
#include "sfda/nn.hpp"

namespace sfda::calib {

// Per-target-sample store of the latest weak-view probability and feature.
// Single writer (the training loop); all global statistics read from here.
struct MemoryBank {
    Mat probs;     // n_t x K
    Mat features;  // n_t x d
    std::vector<char> initialized;

    int size() const { return probs.rows; }
    int class_count() const { return probs.cols; }
    int feature_dim() const { return features.cols; }
    bool fully_initialized() const;
};

struct Prototypes {
    Mat eta;                  // K x d class-mean features
    std::vector<char> valid;  // false where no sample is assigned to the class
};

enum class Distance { cosine, euclidean };
Distance parse_distance(const std::string& s);
std::string to_string(Distance d);

// Thrown when every bank row is below the confidence threshold; callers fall
// back to uniform class weights for that refresh.
struct EmptyCountsError : std::runtime_error {
    EmptyCountsError() : std::runtime_error("class_weights: all counts zero") {}
};

// One full weak-view inference pass in sample order (view streams keyed with
// epoch tag 0, before the first training epoch).
MemoryBank bank_init(const nn::ModelParams& model, const Mat& target_inputs,
                     const augment::AugmentContext& actx, uint64_t seed);

// Replace-on-write row updates; last write wins.
void bank_update(MemoryBank& bank, std::span<const int> sample_indices, const Mat& probs,
                 const Mat& features);

// alpha_c = #{i : max_k p_ik > tau and argmax_k p_ik = c}, strict inequality.
std::vector<long long> class_counts(const MemoryBank& bank, double tau);

// w_c = 1 - ln(alpha_c / max_c alpha_c), with zero counts replaced by the
// smallest non-zero count first. Throws EmptyCountsError when all are zero.
Vec class_weights(std::vector<long long> alpha);

// eta_c = mean feature over bank rows whose argmax prediction is c.
Prototypes compute_prototypes(const MemoryBank& bank);

// 1 iff the nearest valid prototype's class equals argmax(probs). If the
// predicted class has no valid prototype the gate is disabled (returns 1).
// Cosine distance works on L2-normalized vectors; zero-norm feature is an
// error, zero-norm prototypes are skipped.
int proto_agreement(std::span<const double> feature, std::span<const double> probs,
                    const Prototypes& protos, Distance distance);

// sum_k m_k * log(K * m_k): KL divergence of the mean prediction from uniform.
double diversity_loss(std::span<const double> mean_probs);

// Gradient of diversity_loss(column mean of probs) with respect to the logits
// that produced probs by softmax; used by the L_div baseline.
Mat diversity_loss_logit_grad(const Mat& probs);

} // namespace sfda::calib
