#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "sfda/augment.hpp"
#include "sfda/rng.hpp"

using namespace sfda;
using namespace sfda::augment;

namespace {

AugmentContext make_ctx(int dim, AugmentConfig cfg = {}) {
    AugmentContext ctx;
    ctx.cfg = std::move(cfg);
    ctx.dim_std.assign(dim, 1.0);
    return ctx;
}

Vec sample_x(int dim, uint64_t seed) {
    RngStream rng(seed, stream_id(0xfeed));
    Vec x(dim);
    for (double& v : x) v = rng.gaussian();
    return x;
}

} // namespace

TEST_CASE("per_dim_std matches a hand computation") {
    Mat data(3, 2);
    data(0, 0) = 1.0;
    data(1, 0) = 2.0;
    data(2, 0) = 3.0;
    // column 1 stays constant at zero
    const Vec sd = per_dim_std(data);
    CHECK(sd[0] == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-15));
    CHECK(sd[1] == 0.0);
}

TEST_CASE("weak augment with zero sigma is exact identity") {
    AugmentConfig cfg;
    cfg.weak_noise_sigma = 0.0;
    const AugmentContext ctx = make_ctx(5, cfg);
    const Vec x = sample_x(5, 1);
    RngStream rng(3, kTagWeakView, 0, 0);
    CHECK(weak_augment(ctx, x, rng) == x);
}

TEST_CASE("same stream state gives identical views, keys separate views") {
    const AugmentContext ctx = make_ctx(6);
    const Vec x = sample_x(6, 2);
    RngStream a(7, kTagWeakView, 5, 3);
    RngStream b(7, kTagWeakView, 5, 3);
    CHECK(weak_augment(ctx, x, a) == weak_augment(ctx, x, b));

    RngStream c(7, kTagWeakView, 5, 4);  // different epoch
    RngStream d(7, kTagStrongView, 5, 3);  // different view tag
    CHECK(weak_augment(ctx, x, c) != weak_augment(ctx, x, d));
}

TEST_CASE("weak noise is centered: 10k draws within 3 standard errors") {
    const AugmentContext ctx = make_ctx(4);
    const Vec x(4, 0.0);
    const int n = 10000;
    Vec sum(4, 0.0), sumsq(4, 0.0);
    for (int i = 0; i < n; ++i) {
        RngStream rng(11, kTagWeakView, static_cast<uint64_t>(i), 0);
        const Vec v = weak_augment(ctx, x, rng);
        for (int j = 0; j < 4; ++j) {
            sum[j] += v[j];
            sumsq[j] += v[j] * v[j];
        }
    }
    for (int j = 0; j < 4; ++j) {
        const double mean = sum[j] / n;
        const double sd = std::sqrt(sumsq[j] / n - mean * mean);
        CHECK(std::abs(mean) <= 3.0 * sd / std::sqrt(static_cast<double>(n)));
    }
}

TEST_CASE("strong with vanishing magnitude and noise-only pool approaches identity") {
    AugmentConfig cfg;
    cfg.op_pool = {"noise"};
    cfg.strong_magnitude = 1e-9;
    const AugmentContext ctx = make_ctx(5, cfg);
    const Vec x = sample_x(5, 9);
    RngStream rng(5, kTagStrongView, 0, 1);
    const Vec y = strong_augment(ctx, x, rng);
    for (int j = 0; j < 5; ++j) CHECK(std::abs(y[j] - x[j]) < 1e-8);
}

TEST_CASE("mask op zeroes exactly round(0.25*m*n) distinct coordinates") {
    AugmentConfig cfg;
    cfg.op_pool = {"mask"};
    cfg.strong_ops_per_sample = 1;
    cfg.strong_magnitude = 1.0;
    const AugmentContext ctx = make_ctx(8, cfg);
    const Vec x(8, 1.0);
    for (uint64_t trial = 0; trial < 20; ++trial) {
        RngStream rng(13, kTagStrongView, trial, 1);
        const Vec y = strong_augment(ctx, x, rng);
        int zeros = 0;
        for (double v : y) zeros += v == 0.0;
        CHECK(zeros == 2);  // 0.25 * 1 * 8
    }
}

TEST_CASE("strong displacement exceeds weak displacement on standardized data") {
    const AugmentContext ctx = make_ctx(8);
    const int n = 1000;
    double weak_disp = 0.0, strong_disp = 0.0;
    for (int i = 0; i < n; ++i) {
        const Vec x = sample_x(8, 1000 + i);
        RngStream wr(21, kTagWeakView, static_cast<uint64_t>(i), 1);
        RngStream sr(21, kTagStrongView, static_cast<uint64_t>(i), 1);
        const Vec w = weak_augment(ctx, x, wr);
        const Vec s = strong_augment(ctx, x, sr);
        double dw = 0.0, ds = 0.0;
        for (int j = 0; j < 8; ++j) {
            dw += (w[j] - x[j]) * (w[j] - x[j]);
            ds += (s[j] - x[j]) * (s[j] - x[j]);
        }
        weak_disp += std::sqrt(dw);
        strong_disp += std::sqrt(ds);
    }
    CHECK(strong_disp / n > weak_disp / n);
}

TEST_CASE("rotation preserves norm, scale op preserves direction") {
    AugmentConfig rot;
    rot.op_pool = {"rotate"};
    rot.strong_ops_per_sample = 1;
    const AugmentContext rctx = make_ctx(4, rot);
    const Vec x = sample_x(4, 77);
    RngStream rr(3, kTagStrongView, 7, 2);
    const Vec y = strong_augment(rctx, x, rr);
    CHECK(l2_norm(y) == doctest::Approx(l2_norm(x)).epsilon(1e-12));

    AugmentConfig sc;
    sc.op_pool = {"scale"};
    sc.strong_ops_per_sample = 1;
    const AugmentContext sctx = make_ctx(4, sc);
    RngStream sr(3, kTagStrongView, 7, 2);
    const Vec z = strong_augment(sctx, x, sr);
    const double factor = z[0] / x[0];
    for (int j = 0; j < 4; ++j) CHECK(z[j] == doctest::Approx(factor * x[j]).epsilon(1e-12));
    CHECK(factor >= 1.0 - 0.25);
    CHECK(factor <= 1.0 + 0.25);  // magnitude 0.5 bounds the factor by 1 +- 0.25
}

TEST_CASE("unknown op identifier is rejected") {
    AugmentConfig cfg;
    cfg.op_pool = {"noise", "blur"};
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    const AugmentContext ctx = make_ctx(3, cfg);
    RngStream rng(1, kTagStrongView, 0, 0);
    const Vec x(3, 1.0);
    CHECK_THROWS_AS(strong_augment(ctx, x, rng), std::invalid_argument);

    AugmentConfig empty;
    empty.op_pool = {};
    CHECK_THROWS_AS(empty.validate(), std::invalid_argument);
}
