#pragma once

#include <span>
#include <string>

#include "sfda/mat.hpp"
#include "sfda/rng.hpp"

namespace sfda::pseudo {

// A soft training target on the probability simplex. During training the
// label is treated as a constant: gradients flow only through the branch it
// supervises, never back into the label itself.
struct SoftPseudoLabel {
    Vec probs;
    double confidence = 0.0;  // max_k probs[k]
    int predicted_class = 0;  // argmax, lowest index on ties
};

enum class SelectionMode { expectation, bernoulli, threshold, all };

SelectionMode parse_selection_mode(const std::string& s);
std::string to_string(SelectionMode mode);

struct SelectionDecision {
    double xi = 1.0;
    SelectionMode mode = SelectionMode::all;
    bool accepted = true;
    double weight = 1.0;  // loss multiplier contributed by selection
};

// Temperature-scaled softmax of the logits; T = 1 reproduces plain softmax,
// T < 1 lowers entropy.
SoftPseudoLabel sharpen(std::span<const double> logits, double temperature);

// -sum_k pseudo_k log(max(strong_k, 1e-12)).
double consistency_loss(const SoftPseudoLabel& pseudo, std::span<const double> strong_probs);

// Identity confidence mapping: xi = max_k probs_k.
double selection_probability(std::span<const double> probs);

// expectation -> weight xi; bernoulli -> accept with probability xi;
// threshold -> accept iff xi >= threshold; all -> accept with weight 1.
// Only bernoulli consumes randomness.
SelectionDecision decide(double xi, SelectionMode mode, RngStream& rng, double threshold);

// (1/B) * sum_i xi_i * w_div_i * w_proto_i * loss_i. Normalization is by the
// batch size, not by the weight sum.
double weighted_batch_loss(std::span<const double> losses, std::span<const double> xis,
                           std::span<const double> w_div, std::span<const double> w_proto);

// One-hot at argmax, lowest index on ties.
SoftPseudoLabel hard_label(std::span<const double> probs);

} // namespace sfda::pseudo
