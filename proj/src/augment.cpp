#include "sfda/augment.hpp"

#include <cmath>
#include <stdexcept>

namespace sfda::augment {

namespace {

constexpr double kPi = 3.14159265358979323846;

bool known_op(const std::string& op) {
    return op == "noise" || op == "mask" || op == "scale" || op == "rotate";
}

} // namespace

void AugmentConfig::validate() const {
    if (weak_noise_sigma < 0.0) throw std::invalid_argument("augment: weak_noise_sigma must be >= 0");
    if (strong_ops_per_sample < 1) throw std::invalid_argument("augment: strong_ops_per_sample must be >= 1");
    if (!(strong_magnitude > 0.0) || strong_magnitude > 1.0)
        throw std::invalid_argument("augment: strong_magnitude must be in (0,1]");
    if (op_pool.empty()) throw std::invalid_argument("augment: op_pool must be non-empty");
    for (const auto& op : op_pool)
        if (!known_op(op)) throw std::invalid_argument("augment: unknown op identifier: " + op);
}

Vec per_dim_std(const Mat& data) {
    if (data.rows == 0) throw std::invalid_argument("per_dim_std: empty data");
    Vec mean(data.cols, 0.0), var(data.cols, 0.0);
    for (int i = 0; i < data.rows; ++i)
        for (int j = 0; j < data.cols; ++j) mean[j] += data(i, j);
    for (double& m : mean) m /= data.rows;
    for (int i = 0; i < data.rows; ++i)
        for (int j = 0; j < data.cols; ++j) {
            const double d = data(i, j) - mean[j];
            var[j] += d * d;
        }
    Vec out(data.cols);
    for (int j = 0; j < data.cols; ++j) out[j] = std::sqrt(var[j] / data.rows);
    return out;
}

Vec weak_augment(const AugmentContext& ctx, std::span<const double> x, RngStream& rng) {
    if (x.size() != ctx.dim_std.size()) throw std::invalid_argument("weak_augment: dimension mismatch");
    Vec out(x.begin(), x.end());
    for (size_t j = 0; j < out.size(); ++j)
        out[j] += ctx.cfg.weak_noise_sigma * ctx.dim_std[j] * rng.gaussian();
    return out;
}

Vec strong_augment(const AugmentContext& ctx, std::span<const double> x, RngStream& rng) {
    ctx.cfg.validate();
    if (x.size() != ctx.dim_std.size()) throw std::invalid_argument("strong_augment: dimension mismatch");
    const int n = static_cast<int>(x.size());
    const double m = ctx.cfg.strong_magnitude;
    Vec out(x.begin(), x.end());
    for (int step = 0; step < ctx.cfg.strong_ops_per_sample; ++step) {
        const std::string& op = ctx.cfg.op_pool[rng.index(ctx.cfg.op_pool.size())];
        if (op == "noise") {
            for (int j = 0; j < n; ++j)
                out[j] += 4.0 * m * ctx.cfg.weak_noise_sigma * ctx.dim_std[j] * rng.gaussian();
        } else if (op == "mask") {
            const int n_zero = std::min<int>(n, static_cast<int>(std::llround(0.25 * m * n)));
            // partial Fisher-Yates over an index array picks distinct coords
            std::vector<int> idx(n);
            for (int j = 0; j < n; ++j) idx[j] = j;
            for (int j = 0; j < n_zero; ++j) {
                const int pick = j + static_cast<int>(rng.index(n - j));
                std::swap(idx[j], idx[pick]);
                out[idx[j]] = 0.0;
            }
        } else if (op == "scale") {
            const double factor = 1.0 + (2.0 * rng.uniform() - 1.0) * 0.5 * m;
            for (double& v : out) v *= factor;
        } else if (op == "rotate") {
            if (n >= 2) {
                const int i = static_cast<int>(rng.index(n));
                int j = static_cast<int>(rng.index(n - 1));
                if (j >= i) ++j;
                const double angle = (2.0 * rng.uniform() - 1.0) * m * kPi / 4.0;
                const double c = std::cos(angle), s = std::sin(angle);
                const double xi = out[i], xj = out[j];
                out[i] = c * xi - s * xj;
                out[j] = s * xi + c * xj;
            }
        }
    }
    return out;
}

} // namespace sfda::augment
