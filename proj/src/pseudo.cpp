#include "sfda/pseudo.hpp"

#include <cmath>
#include <stdexcept>

#include "sfda/nn.hpp"

namespace sfda::pseudo {

SelectionMode parse_selection_mode(const std::string& s) {
    if (s == "expectation") return SelectionMode::expectation;
    if (s == "bernoulli") return SelectionMode::bernoulli;
    if (s == "threshold") return SelectionMode::threshold;
    if (s == "all") return SelectionMode::all;
    throw std::invalid_argument("unknown selection mode: " + s);
}

std::string to_string(SelectionMode mode) {
    switch (mode) {
        case SelectionMode::expectation: return "expectation";
        case SelectionMode::bernoulli: return "bernoulli";
        case SelectionMode::threshold: return "threshold";
        case SelectionMode::all: return "all";
    }
    return "?";
}

SoftPseudoLabel sharpen(std::span<const double> logits, double temperature) {
    if (!(temperature > 0.0)) throw std::invalid_argument("sharpen: temperature must be > 0");
    if (!all_finite(logits)) throw std::invalid_argument("sharpen: non-finite logits");
    SoftPseudoLabel out;
    out.probs.resize(logits.size());
    double m = logits[0] / temperature;
    for (size_t k = 1; k < logits.size(); ++k) m = std::max(m, logits[k] / temperature);
    double z = 0.0;
    for (size_t k = 0; k < logits.size(); ++k) {
        out.probs[k] = std::exp(logits[k] / temperature - m);
        z += out.probs[k];
    }
    for (double& p : out.probs) p /= z;
    out.predicted_class = argmax(out.probs);
    out.confidence = out.probs[out.predicted_class];
    return out;
}

double consistency_loss(const SoftPseudoLabel& pseudo, std::span<const double> strong_probs) {
    if (pseudo.probs.size() != strong_probs.size())
        throw std::invalid_argument("consistency_loss: length mismatch");
    double s = 0.0;
    for (size_t k = 0; k < strong_probs.size(); ++k)
        s -= pseudo.probs[k] * std::log(std::max(strong_probs[k], nn::kLogFloor));
    return s;
}

double selection_probability(std::span<const double> probs) {
    return probs[argmax(probs)];
}

SelectionDecision decide(double xi, SelectionMode mode, RngStream& rng, double threshold) {
    if (xi < 0.0 || xi > 1.0) throw std::invalid_argument("decide: xi out of [0,1]");
    SelectionDecision d;
    d.xi = xi;
    d.mode = mode;
    switch (mode) {
        case SelectionMode::expectation:
            d.accepted = true;
            d.weight = xi;
            break;
        case SelectionMode::bernoulli:
            d.accepted = rng.uniform() < xi;
            d.weight = d.accepted ? 1.0 : 0.0;
            break;
        case SelectionMode::threshold:
            if (threshold < 0.0 || threshold > 1.0)
                throw std::invalid_argument("decide: threshold out of [0,1]");
            d.accepted = xi >= threshold;
            d.weight = d.accepted ? 1.0 : 0.0;
            break;
        case SelectionMode::all:
            d.accepted = true;
            d.weight = 1.0;
            break;
    }
    return d;
}

double weighted_batch_loss(std::span<const double> losses, std::span<const double> xis,
                           std::span<const double> w_div, std::span<const double> w_proto) {
    const size_t n = losses.size();
    if (xis.size() != n || w_div.size() != n || w_proto.size() != n)
        throw std::invalid_argument("weighted_batch_loss: length mismatch");
    if (n == 0) throw std::invalid_argument("weighted_batch_loss: empty batch");
    double s = 0.0;
    for (size_t i = 0; i < n; ++i) {
        if (!(xis[i] >= 0.0) || !(w_div[i] >= 0.0) || !(w_proto[i] >= 0.0))
            throw std::invalid_argument("weighted_batch_loss: negative or non-finite weight");
        s += xis[i] * w_div[i] * w_proto[i] * losses[i];
    }
    return s / static_cast<double>(n);
}

SoftPseudoLabel hard_label(std::span<const double> probs) {
    SoftPseudoLabel out;
    out.probs.assign(probs.size(), 0.0);
    out.predicted_class = argmax(probs);
    out.probs[out.predicted_class] = 1.0;
    out.confidence = 1.0;
    return out;
}

} // namespace sfda::pseudo
