#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "oracles.hpp"
#include "sfda/nn.hpp"
#include "sfda/pseudo.hpp"
#include "sfda/rng.hpp"

using namespace sfda;
using namespace sfda::pseudo;

namespace {

Vec random_logits(int k, uint64_t seed, double scale = 4.0) {
    RngStream rng(seed, stream_id(0x51));
    Vec v(k);
    for (double& x : v) x = scale * (2.0 * rng.uniform() - 1.0);
    return v;
}

} // namespace

TEST_CASE("sharpen examples") {
    const Vec sym{0.0, 0.0};
    for (double t : {0.1, 0.5, 1.0, 3.0}) {
        const SoftPseudoLabel p = sharpen(sym, t);
        CHECK(p.probs[0] == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(p.probs[1] == doctest::Approx(0.5).epsilon(1e-15));
    }

    const Vec l{1.0, 0.0};
    const SoftPseudoLabel p = sharpen(l, 0.5);
    const double e2 = std::exp(2.0);
    CHECK(p.probs[0] == doctest::Approx(e2 / (e2 + 1.0)).epsilon(1e-14));
    CHECK(p.probs[1] == doctest::Approx(1.0 / (e2 + 1.0)).epsilon(1e-14));
    CHECK(p.predicted_class == 0);
    CHECK(p.confidence == p.probs[0]);

    CHECK_THROWS_AS(sharpen(l, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(sharpen(l, -1.0), std::invalid_argument);
}

TEST_CASE("sharpen at T=1 equals softmax, T->0 approaches one-hot") {
    for (uint64_t seed = 0; seed < 50; ++seed) {
        const Vec l = random_logits(5, seed);
        Mat m(1, 5);
        std::copy(l.begin(), l.end(), m.row(0).begin());
        const Mat sm = nn::softmax(m);
        const SoftPseudoLabel p = sharpen(l, 1.0);
        for (int k = 0; k < 5; ++k) CHECK(std::abs(p.probs[k] - sm(0, k)) < 1e-12);
    }
    const SoftPseudoLabel cold = sharpen(Vec{2.0, 1.0, 0.0}, 0.01);
    CHECK(cold.probs[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(cold.predicted_class == 0);
}

TEST_CASE("sharpening lowers entropy for T < 1") {
    for (uint64_t seed = 0; seed < 200; ++seed) {
        const Vec l = random_logits(6, seed + 100);
        const double base = testutil::entropy(sharpen(l, 1.0).probs);
        for (double t : {0.1, 0.5})
            CHECK(testutil::entropy(sharpen(l, t).probs) <= base + 1e-12);
    }
}

TEST_CASE("consistency_loss examples") {
    SoftPseudoLabel onehot;
    onehot.probs = {0.0, 1.0, 0.0};
    onehot.predicted_class = 1;
    onehot.confidence = 1.0;
    const Vec q{0.2, 0.5, 0.3};
    CHECK(consistency_loss(onehot, q) == doctest::Approx(-std::log(0.5)).epsilon(1e-14));

    SoftPseudoLabel uni;
    uni.probs = {0.25, 0.25, 0.25, 0.25};
    CHECK(consistency_loss(uni, Vec{0.25, 0.25, 0.25, 0.25}) ==
          doctest::Approx(std::log(4.0)).epsilon(1e-14));

    SoftPseudoLabel soft;
    soft.probs = {0.9, 0.1};
    CHECK(consistency_loss(soft, Vec{0.5, 0.5}) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
}

TEST_CASE("selection_probability") {
    CHECK(selection_probability(Vec{0.7, 0.2, 0.1}) == 0.7);
    CHECK(selection_probability(Vec{0.25, 0.25, 0.25, 0.25}) == 0.25);
    CHECK(selection_probability(Vec{0.0, 1.0}) == 1.0);

    // raising the top probability (renormalizing the rest) never lowers xi
    RngStream rng(5, stream_id(0x52));
    for (int trial = 0; trial < 100; ++trial) {
        Vec p(4);
        double sum = 0.0;
        for (double& v : p) {
            v = rng.uniform_pos();
            sum += v;
        }
        for (double& v : p) v /= sum;
        const int top = argmax(p);
        const double xi = selection_probability(p);
        const double bump = 0.5 * (1.0 - p[top]);
        Vec q(4);
        const double rest_scale = (1.0 - p[top] - bump) / (1.0 - p[top]);
        for (int k = 0; k < 4; ++k) q[k] = k == top ? p[top] + bump : p[k] * rest_scale;
        CHECK(selection_probability(q) >= xi);
    }
}

TEST_CASE("decide modes") {
    RngStream rng(3, kTagSelect, 0, 0);
    const SelectionDecision e = decide(0.37, SelectionMode::expectation, rng, 0.8);
    CHECK(e.weight == 0.37);
    CHECK(e.accepted);

    for (int i = 0; i < 1000; ++i) CHECK(decide(1.0, SelectionMode::bernoulli, rng, 0.8).accepted);

    long hits = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) hits += decide(0.3, SelectionMode::bernoulli, rng, 0.8).accepted;
    const double se = std::sqrt(0.3 * 0.7 / n);
    CHECK(std::abs(static_cast<double>(hits) / n - 0.3) <= 3.0 * se);

    CHECK_FALSE(decide(0.79, SelectionMode::threshold, rng, 0.8).accepted);
    CHECK(decide(0.80, SelectionMode::threshold, rng, 0.8).accepted);
    CHECK(decide(0.80, SelectionMode::threshold, rng, 0.8).weight == 1.0);
    CHECK(decide(0.2, SelectionMode::all, rng, 0.8).weight == 1.0);

    CHECK_THROWS_AS(decide(1.2, SelectionMode::expectation, rng, 0.8), std::invalid_argument);
    CHECK_THROWS_AS(decide(0.5, SelectionMode::threshold, rng, 1.5), std::invalid_argument);
}

TEST_CASE("weighted_batch_loss") {
    const Vec losses{1.0, 2.0, 3.0};
    const Vec ones{1.0, 1.0, 1.0};
    CHECK(weighted_batch_loss(losses, ones, ones, ones) == doctest::Approx(2.0).epsilon(1e-15));

    const Vec gate{1.0, 0.0, 1.0};
    CHECK(weighted_batch_loss(losses, ones, ones, gate) == doctest::Approx(4.0 / 3.0).epsilon(1e-15));

    CHECK_THROWS_AS(weighted_batch_loss(losses, Vec{1.0}, ones, ones), std::invalid_argument);
    CHECK_THROWS_AS(weighted_batch_loss(losses, Vec{1.0, -0.1, 1.0}, ones, ones), std::invalid_argument);
}

TEST_CASE("expectation mode equals the mean of bernoulli resamples") {
    // frozen losses and confidences; epoch loss under expectation vs the mean
    // over 1000 bernoulli-resampled epochs
    const int n = 200;
    RngStream setup(17, stream_id(0x53));
    Vec losses(n), xis(n), ones(n, 1.0);
    for (int i = 0; i < n; ++i) {
        losses[i] = 3.0 * setup.uniform();
        xis[i] = setup.uniform();
    }
    const double expectation = weighted_batch_loss(losses, xis, ones, ones);

    const int repeats = 1000;
    Vec totals(repeats);
    double mean = 0.0;
    for (int r = 0; r < repeats; ++r) {
        Vec w(n);
        for (int i = 0; i < n; ++i) {
            RngStream rng(17, kTagSelect, static_cast<uint64_t>(i), static_cast<uint64_t>(r));
            w[i] = decide(xis[i], SelectionMode::bernoulli, rng, 0.8).weight;
        }
        totals[r] = weighted_batch_loss(losses, w, ones, ones);
        mean += totals[r];
    }
    mean /= repeats;
    double var = 0.0;
    for (double t : totals) var += (t - mean) * (t - mean);
    const double stderr_mean = std::sqrt(var / (repeats - 1)) / std::sqrt(static_cast<double>(repeats));
    CHECK(std::abs(mean - expectation) <= 3.0 * stderr_mean);
}

TEST_CASE("hard_label") {
    const SoftPseudoLabel a = hard_label(Vec{0.2, 0.5, 0.3});
    CHECK(a.probs == Vec{0.0, 1.0, 0.0});
    CHECK(a.predicted_class == 1);

    const SoftPseudoLabel tie = hard_label(Vec{0.5, 0.5});
    CHECK(tie.probs == Vec{1.0, 0.0});

    const SoftPseudoLabel hot = hard_label(Vec{0.0, 0.0, 1.0});
    CHECK(hot.probs == Vec{0.0, 0.0, 1.0});
}
