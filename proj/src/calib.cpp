#include "sfda/calib.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace sfda::calib {

bool MemoryBank::fully_initialized() const {
    for (char c : initialized)
        if (!c) return false;
    return true;
}

Distance parse_distance(const std::string& s) {
    if (s == "cosine") return Distance::cosine;
    if (s == "euclidean") return Distance::euclidean;
    throw std::invalid_argument("unknown distance: " + s);
}

std::string to_string(Distance d) {
    return d == Distance::cosine ? "cosine" : "euclidean";
}

MemoryBank bank_init(const nn::ModelParams& model, const Mat& target_inputs,
                     const augment::AugmentContext& actx, uint64_t seed) {
    if (target_inputs.rows == 0) throw std::invalid_argument("bank_init: empty dataset");
    Mat weak(target_inputs.rows, target_inputs.cols);
    for (int i = 0; i < target_inputs.rows; ++i) {
        RngStream rng(seed, kTagWeakView, static_cast<uint64_t>(i), uint64_t{0});
        const Vec v = augment::weak_augment(actx, target_inputs.row(i), rng);
        std::copy(v.begin(), v.end(), weak.row(i).begin());
    }
    const nn::Forward fwd = nn::forward(model, weak);
    MemoryBank bank;
    bank.probs = nn::softmax(fwd.logits);
    bank.features = fwd.features;
    bank.initialized.assign(target_inputs.rows, 1);
    return bank;
}

void bank_update(MemoryBank& bank, std::span<const int> sample_indices, const Mat& probs,
                 const Mat& features) {
    if (probs.rows != static_cast<int>(sample_indices.size()) || features.rows != probs.rows)
        throw std::invalid_argument("bank_update: row count mismatch");
    if (probs.cols != bank.class_count() || features.cols != bank.feature_dim())
        throw std::invalid_argument("bank_update: width mismatch");
    for (size_t r = 0; r < sample_indices.size(); ++r) {
        const int i = sample_indices[r];
        if (i < 0 || i >= bank.size()) throw std::invalid_argument("bank_update: index out of range");
        std::copy(probs.row(static_cast<int>(r)).begin(), probs.row(static_cast<int>(r)).end(),
                  bank.probs.row(i).begin());
        std::copy(features.row(static_cast<int>(r)).begin(), features.row(static_cast<int>(r)).end(),
                  bank.features.row(i).begin());
        bank.initialized[i] = 1;
    }
}

std::vector<long long> class_counts(const MemoryBank& bank, double tau) {
    if (tau < 0.0 || tau >= 1.0) throw std::invalid_argument("class_counts: tau out of [0,1)");
    if (!bank.fully_initialized()) throw std::invalid_argument("class_counts: bank not initialized");
    std::vector<long long> alpha(bank.class_count(), 0);
    for (int i = 0; i < bank.size(); ++i) {
        const auto row = bank.probs.row(i);
        const int c = argmax(row);
        if (row[c] > tau) ++alpha[c];
    }
    return alpha;
}

Vec class_weights(std::vector<long long> alpha) {
    long long max_count = 0, min_nonzero = std::numeric_limits<long long>::max();
    for (long long a : alpha) {
        if (a < 0) throw std::invalid_argument("class_weights: negative count");
        max_count = std::max(max_count, a);
        if (a > 0) min_nonzero = std::min(min_nonzero, a);
    }
    if (max_count == 0) throw EmptyCountsError();
    for (long long& a : alpha)
        if (a == 0) a = min_nonzero;
    Vec w(alpha.size());
    for (size_t c = 0; c < alpha.size(); ++c)
        w[c] = 1.0 - std::log(static_cast<double>(alpha[c]) / static_cast<double>(max_count));
    return w;
}

Prototypes compute_prototypes(const MemoryBank& bank) {
    if (!bank.fully_initialized()) throw std::invalid_argument("compute_prototypes: bank not initialized");
    const int K = bank.class_count(), d = bank.feature_dim();
    Prototypes p;
    p.eta = Mat(K, d);
    p.valid.assign(K, 0);
    std::vector<long long> count(K, 0);
    for (int i = 0; i < bank.size(); ++i) {
        const int c = argmax(bank.probs.row(i));
        ++count[c];
        for (int j = 0; j < d; ++j) p.eta(c, j) += bank.features(i, j);
    }
    for (int c = 0; c < K; ++c) {
        if (count[c] > 0) {
            p.valid[c] = 1;
            for (int j = 0; j < d; ++j) p.eta(c, j) /= static_cast<double>(count[c]);
        }
    }
    return p;
}

int proto_agreement(std::span<const double> feature, std::span<const double> probs,
                    const Prototypes& protos, Distance distance) {
    bool any_valid = false;
    for (char v : protos.valid) any_valid |= v != 0;
    if (!any_valid) throw std::invalid_argument("proto_agreement: no valid prototype");

    const int predicted = argmax(probs);
    if (!protos.valid[predicted]) return 1;  // gate disabled for this class

    const double fnorm = l2_norm(feature);
    if (distance == Distance::cosine && fnorm == 0.0)
        throw std::invalid_argument("proto_agreement: zero-norm feature");

    int best = -1;
    double best_dist = std::numeric_limits<double>::infinity();
    for (int c = 0; c < static_cast<int>(protos.valid.size()); ++c) {
        if (!protos.valid[c]) continue;
        const auto eta_c = protos.eta.row(c);
        double dist;
        if (distance == Distance::cosine) {
            const double enorm = l2_norm(eta_c);
            if (enorm == 0.0) continue;
            dist = 1.0 - dot(feature, eta_c) / (fnorm * enorm);
        } else {
            double s = 0.0;
            for (size_t j = 0; j < feature.size(); ++j) {
                const double diff = feature[j] - eta_c[j];
                s += diff * diff;
            }
            dist = std::sqrt(s);
        }
        if (dist < best_dist) {
            best_dist = dist;
            best = c;
        }
    }
    if (best < 0) return 1;  // every valid prototype skipped (zero norm)
    return best == predicted ? 1 : 0;
}

double diversity_loss(std::span<const double> mean_probs) {
    const double K = static_cast<double>(mean_probs.size());
    double s = 0.0;
    for (double p : mean_probs)
        if (p > 0.0) s += p * std::log(K * p);
    return s;
}

Mat diversity_loss_logit_grad(const Mat& probs) {
    const int B = probs.rows, K = probs.cols;
    if (B == 0) throw std::invalid_argument("diversity_loss_logit_grad: empty batch");
    Vec mean(K, 0.0);
    for (int i = 0; i < B; ++i)
        for (int k = 0; k < K; ++k) mean[k] += probs(i, k);
    for (double& m : mean) m /= B;
    // dL/dm_k = log(K m_k) + 1; chain through the batch mean and softmax.
    Vec g(K);
    for (int k = 0; k < K; ++k) g[k] = std::log(std::max(mean[k], nn::kLogFloor) * K) + 1.0;
    Mat out(B, K);
    for (int i = 0; i < B; ++i) {
        double inner = 0.0;
        for (int k = 0; k < K; ++k) inner += g[k] * probs(i, k);
        for (int k = 0; k < K; ++k) out(i, k) = probs(i, k) * (g[k] - inner) / B;
    }
    return out;
}

} // namespace sfda::calib
