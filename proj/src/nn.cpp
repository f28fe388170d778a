#include "sfda/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "sfda/errors.hpp"
#include "sfda/rng.hpp"

namespace sfda::nn {

namespace {

// y = x W^T + b, x: B x in, W: out x in.
Mat affine(const Mat& x, const Mat& w, const Vec& b) {
    Mat y(x.rows, w.rows);
    for (int i = 0; i < x.rows; ++i) {
        for (int o = 0; o < w.rows; ++o) {
            double s = b[o];
            for (int j = 0; j < w.cols; ++j) s += x(i, j) * w(o, j);
            y(i, o) = s;
        }
    }
    return y;
}

struct ForwardCache {
    std::vector<Mat> activations;  // activations[0] = inputs, activations[L] = features
    std::vector<Mat> preacts;      // pre-activation of each extractor layer
    Mat logits;
    Vec dir_norms;  // ||v_c|| per class
};

ForwardCache forward_cached(const ModelParams& p, const Mat& inputs) {
    if (inputs.cols != p.input_dim) throw std::invalid_argument("forward: input width mismatch");
    ForwardCache c;
    c.activations.reserve(p.extractor.size() + 1);
    c.activations.push_back(inputs);
    for (size_t l = 0; l < p.extractor.size(); ++l) {
        Mat z = affine(c.activations.back(), p.extractor[l].weight, p.extractor[l].bias);
        c.preacts.push_back(z);
        if (l + 1 < p.extractor.size()) {
            for (double& v : z.a) v = v > 0.0 ? v : 0.0;
        }
        c.activations.push_back(std::move(z));
    }
    const Mat& feats = c.activations.back();
    const int K = p.class_count;
    c.dir_norms.resize(K);
    c.logits = Mat(inputs.rows, K);
    // a zero direction row contributes zero logits; norm 1 keeps 0/0 out
    for (int k = 0; k < K; ++k) {
        const double norm = l2_norm(p.classifier_direction.row(k));
        c.dir_norms[k] = norm > 0.0 ? norm : 1.0;
    }
    for (int i = 0; i < inputs.rows; ++i) {
        for (int k = 0; k < K; ++k) {
            const double s = dot(feats.row(i), p.classifier_direction.row(k));
            c.logits(i, k) = p.classifier_scale[k] * s / c.dir_norms[k];
        }
    }
    return c;
}

void write_array(std::FILE* f, const std::string& name, int rows, int cols, std::span<const double> v) {
    std::fprintf(f, "array %s %d %d\n", name.c_str(), rows, cols);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c)
            std::fprintf(f, c ? " %.17g" : "%.17g", v[static_cast<size_t>(r) * cols + c]);
        std::fprintf(f, "\n");
    }
}

} // namespace

std::vector<int> ModelParams::arch() const {
    std::vector<int> a{input_dim};
    for (const auto& l : extractor) a.push_back(l.weight.rows);
    a.push_back(class_count);
    return a;
}

ModelParams init_params(const std::vector<int>& arch, uint64_t seed) {
    if (arch.size() < 2) throw std::invalid_argument("init_params: arch needs at least 2 layers");
    for (int s : arch)
        if (s <= 0) throw std::invalid_argument("init_params: non-positive layer size");
    const int K = arch.back();
    if (K < 2) throw std::invalid_argument("init_params: class count must be >= 2");

    ModelParams p;
    p.input_dim = arch.front();
    p.feature_dim = arch[arch.size() - 2];
    p.class_count = K;

    auto draw = [&](Mat& w, uint64_t layer_tag) {
        RngStream rng(seed, kTagInit, layer_tag);
        const double a = std::sqrt(6.0 / (w.cols + w.rows));
        for (double& v : w.a) v = a * (2.0 * rng.uniform() - 1.0);
    };

    for (size_t l = 0; l + 2 < arch.size(); ++l) {
        DenseLayer layer;
        layer.weight = Mat(arch[l + 1], arch[l]);
        layer.bias.assign(arch[l + 1], 0.0);
        draw(layer.weight, l);
        p.extractor.push_back(std::move(layer));
    }
    p.classifier_direction = Mat(K, p.feature_dim);
    draw(p.classifier_direction, arch.size());
    p.classifier_scale.resize(K);
    for (int k = 0; k < K; ++k) p.classifier_scale[k] = l2_norm(p.classifier_direction.row(k));
    return p;
}

Gradients zeros_like(const ModelParams& params) {
    Gradients g;
    for (const auto& l : params.extractor) {
        DenseLayer z;
        z.weight = Mat(l.weight.rows, l.weight.cols);
        z.bias.assign(l.bias.size(), 0.0);
        g.extractor.push_back(std::move(z));
    }
    g.classifier_direction = Mat(params.classifier_direction.rows, params.classifier_direction.cols);
    g.classifier_scale.assign(params.classifier_scale.size(), 0.0);
    return g;
}

OptState make_opt_state(const ModelParams& params, double momentum, double weight_decay) {
    OptState s;
    s.velocity = zeros_like(params);
    s.momentum = momentum;
    s.weight_decay = weight_decay;
    return s;
}

Forward forward(const ModelParams& params, const Mat& inputs) {
    ForwardCache c = forward_cached(params, inputs);
    return {std::move(c.activations.back()), std::move(c.logits)};
}

Mat softmax(const Mat& logits) {
    if (!all_finite(logits)) throw std::invalid_argument("softmax: non-finite logits");
    Mat out(logits.rows, logits.cols);
    for (int i = 0; i < logits.rows; ++i) {
        double m = logits(i, 0);
        for (int k = 1; k < logits.cols; ++k) m = std::max(m, logits(i, k));
        double z = 0.0;
        for (int k = 0; k < logits.cols; ++k) {
            out(i, k) = std::exp(logits(i, k) - m);
            z += out(i, k);
        }
        for (int k = 0; k < logits.cols; ++k) out(i, k) /= z;
    }
    return out;
}

Vec soft_cross_entropy(const Mat& target, const Mat& probs) {
    if (!target.same_shape(probs)) throw std::invalid_argument("soft_cross_entropy: shape mismatch");
    Vec out(target.rows, 0.0);
    for (int i = 0; i < target.rows; ++i) {
        double s = 0.0;
        for (int k = 0; k < target.cols; ++k)
            s -= target(i, k) * std::log(std::max(probs(i, k), kLogFloor));
        out[i] = s;
    }
    return out;
}

double label_smoothed_ce(const Mat& logits, const std::vector<int>& labels, double eps) {
    if (eps < 0.0 || eps >= 1.0) throw std::invalid_argument("label_smoothed_ce: eps out of [0,1)");
    if (static_cast<int>(labels.size()) != logits.rows)
        throw std::invalid_argument("label_smoothed_ce: label count mismatch");
    const int K = logits.cols;
    Mat target(logits.rows, K);
    for (int i = 0; i < logits.rows; ++i) {
        if (labels[i] < 0 || labels[i] >= K) throw std::invalid_argument("label_smoothed_ce: label out of range");
        for (int k = 0; k < K; ++k) target(i, k) = eps / K;
        target(i, labels[i]) += 1.0 - eps;
    }
    const Vec losses = soft_cross_entropy(target, softmax(logits));
    double s = 0.0;
    for (double v : losses) s += v;
    return s / logits.rows;
}

Gradients backward(const ModelParams& p, const Mat& inputs, const Mat& grad_logits) {
    if (grad_logits.cols != p.class_count || grad_logits.rows != inputs.rows)
        throw std::invalid_argument("backward: grad_logits shape mismatch");
    ForwardCache c = forward_cached(p, inputs);
    Gradients g = zeros_like(p);

    const Mat& feats = c.activations.back();
    const int B = inputs.rows, K = p.class_count, d = p.feature_dim;

    // Classifier: logit(i,k) = scale_k * <feats_i, u_k>, u_k = v_k/||v_k||.
    Mat d_feats(B, d);
    for (int k = 0; k < K; ++k) {
        const double norm = c.dir_norms[k];
        const auto v = p.classifier_direction.row(k);
        Vec u(d);
        for (int j = 0; j < d; ++j) u[j] = v[j] / norm;

        Vec sum_gf(d, 0.0);  // sum_i G(i,k) * feats_i
        double d_scale = 0.0;
        for (int i = 0; i < B; ++i) {
            const double gik = grad_logits(i, k);
            const double s = dot(feats.row(i), std::span<const double>(u));
            d_scale += gik * s;
            for (int j = 0; j < d; ++j) {
                sum_gf[j] += gik * feats(i, j);
                d_feats(i, j) += gik * p.classifier_scale[k] * u[j];
            }
        }
        g.classifier_scale[k] = d_scale;
        const double proj = dot(std::span<const double>(sum_gf), std::span<const double>(u));
        for (int j = 0; j < d; ++j)
            g.classifier_direction(k, j) = p.classifier_scale[k] / norm * (sum_gf[j] - proj * u[j]);
    }

    // Extractor, top layer has identity activation.
    Mat delta = std::move(d_feats);
    for (int l = static_cast<int>(p.extractor.size()) - 1; l >= 0; --l) {
        const bool top = l == static_cast<int>(p.extractor.size()) - 1;
        if (!top) {
            const Mat& z = c.preacts[l];
            for (int i = 0; i < delta.rows; ++i)
                for (int j = 0; j < delta.cols; ++j)
                    if (z(i, j) <= 0.0) delta(i, j) = 0.0;
        }
        const Mat& below = c.activations[l];
        Mat& dw = g.extractor[l].weight;
        Vec& db = g.extractor[l].bias;
        for (int i = 0; i < delta.rows; ++i) {
            for (int o = 0; o < dw.rows; ++o) {
                const double dz = delta(i, o);
                db[o] += dz;
                for (int j = 0; j < dw.cols; ++j) dw(o, j) += dz * below(i, j);
            }
        }
        if (l > 0) {
            const Mat& w = p.extractor[l].weight;
            Mat next(delta.rows, w.cols);
            for (int i = 0; i < delta.rows; ++i)
                for (int o = 0; o < w.rows; ++o) {
                    const double dz = delta(i, o);
                    for (int j = 0; j < w.cols; ++j) next(i, j) += dz * w(o, j);
                }
            delta = std::move(next);
        }
    }
    return g;
}

namespace {

template <class F>
void for_each_array(ModelParams& p, const Gradients& g, Gradients& v, F&& f) {
    for (size_t l = 0; l < p.extractor.size(); ++l) {
        f(p.extractor[l].weight.a, g.extractor[l].weight.a, v.extractor[l].weight.a);
        f(p.extractor[l].bias, g.extractor[l].bias, v.extractor[l].bias);
    }
    f(p.classifier_direction.a, g.classifier_direction.a, v.classifier_direction.a);
    f(p.classifier_scale, g.classifier_scale, v.classifier_scale);
}

} // namespace

void sgd_momentum_step(ModelParams& params, const Gradients& grads, OptState& state, double lr) {
    if (!(lr > 0.0)) throw std::invalid_argument("sgd_momentum_step: lr must be positive");
    for_each_array(params, grads, state.velocity, [&](Vec& theta, const Vec& g, Vec& vel) {
        if (g.size() != theta.size() || vel.size() != theta.size())
            throw std::invalid_argument("sgd_momentum_step: shape mismatch");
        if (!all_finite(std::span<const double>(g)))
            throw std::invalid_argument("sgd_momentum_step: non-finite gradient");
        for (size_t i = 0; i < theta.size(); ++i) {
            vel[i] = state.momentum * vel[i] + g[i] + state.weight_decay * theta[i];
            theta[i] -= lr * vel[i];
        }
    });
}

double lr_at_progress(double gamma0, double p) {
    if (!(gamma0 > 0.0)) throw std::invalid_argument("lr_at_progress: gamma0 must be positive");
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("lr_at_progress: progress out of [0,1]");
    return gamma0 * std::pow(1.0 + 10.0 * p, -0.75);
}

void save_checkpoint(const ModelParams& params, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw InputError("cannot open checkpoint for writing: " + path);
    std::fprintf(f, "sfda_checkpoint 1\narch");
    for (int s : params.arch()) std::fprintf(f, " %d", s);
    std::fprintf(f, "\n");
    for (size_t l = 0; l < params.extractor.size(); ++l) {
        const auto& layer = params.extractor[l];
        write_array(f, "extractor." + std::to_string(l) + ".weight", layer.weight.rows, layer.weight.cols,
                    layer.weight.a);
        write_array(f, "extractor." + std::to_string(l) + ".bias", 1, static_cast<int>(layer.bias.size()),
                    layer.bias);
    }
    write_array(f, "classifier.direction", params.classifier_direction.rows, params.classifier_direction.cols,
                params.classifier_direction.a);
    write_array(f, "classifier.scale", 1, static_cast<int>(params.classifier_scale.size()),
                params.classifier_scale);
    std::fprintf(f, "end\n");
    std::fclose(f);
}

namespace {

void read_values(std::istream& in, std::span<double> out, const std::string& path) {
    for (double& v : out)
        if (!(in >> v)) throw InputError("corrupt checkpoint (truncated values): " + path);
    if (!all_finite(std::span<const double>(out.data(), out.size())))
        throw InputError("corrupt checkpoint (non-finite value): " + path);
}

} // namespace

ModelParams load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("missing checkpoint: " + path);
    std::string magic;
    int version = 0;
    in >> magic >> version;
    if (magic != "sfda_checkpoint" || version != 1)
        throw InputError("corrupt checkpoint (bad header): " + path);

    std::string word;
    in >> word;
    if (word != "arch") throw InputError("corrupt checkpoint (missing arch): " + path);
    std::vector<int> arch;
    std::string line;
    std::getline(in, line);
    std::istringstream archline(line);
    int s;
    while (archline >> s) arch.push_back(s);
    if (arch.size() < 2) throw InputError("corrupt checkpoint (bad arch): " + path);

    ModelParams p;
    p.input_dim = arch.front();
    p.feature_dim = arch[arch.size() - 2];
    p.class_count = arch.back();

    auto expect_array = [&](const std::string& name, int rows, int cols, std::span<double> out) {
        std::string kw, got;
        int r = 0, c = 0;
        if (!(in >> kw >> got >> r >> c) || kw != "array" || got != name || r != rows || c != cols)
            throw InputError("corrupt checkpoint (array " + name + "): " + path);
        read_values(in, out, path);
    };

    for (size_t l = 0; l + 2 < arch.size(); ++l) {
        DenseLayer layer;
        layer.weight = Mat(arch[l + 1], arch[l]);
        layer.bias.assign(arch[l + 1], 0.0);
        expect_array("extractor." + std::to_string(l) + ".weight", layer.weight.rows, layer.weight.cols,
                     layer.weight.a);
        expect_array("extractor." + std::to_string(l) + ".bias", 1, static_cast<int>(layer.bias.size()),
                     layer.bias);
        p.extractor.push_back(std::move(layer));
    }
    p.classifier_direction = Mat(p.class_count, p.feature_dim);
    p.classifier_scale.assign(p.class_count, 0.0);
    expect_array("classifier.direction", p.class_count, p.feature_dim, p.classifier_direction.a);
    expect_array("classifier.scale", 1, p.class_count, p.classifier_scale);
    in >> word;
    if (word != "end") throw InputError("corrupt checkpoint (missing end): " + path);
    return p;
}

} // namespace sfda::nn
