#include "sfda/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "sfda/errors.hpp"
#include "sfda/rng.hpp"

namespace sfda::synth {

void DomainShiftSpec::validate() const {
    if (class_count < 2) throw std::invalid_argument("data spec: class_count must be >= 2");
    if (input_dim < 1) throw std::invalid_argument("data spec: input_dim must be >= 1");
    if (class_means.rows != class_count || class_means.cols != input_dim)
        throw std::invalid_argument("data spec: class_means shape mismatch");
    if (!(class_cov_scale > 0.0)) throw std::invalid_argument("data spec: class_cov_scale must be > 0");
    if (static_cast<int>(translation.size()) != input_dim)
        throw std::invalid_argument("data spec: translation length mismatch");
    if (!(scale != 0.0)) throw std::invalid_argument("data spec: scale must be non-zero");
    if (static_cast<int>(target_class_weights.size()) != class_count)
        throw std::invalid_argument("data spec: target_class_weights length mismatch");
    double wsum = 0.0;
    for (double w : target_class_weights) {
        if (w < 0.0) throw std::invalid_argument("data spec: negative class weight");
        wsum += w;
    }
    if (std::abs(wsum - 1.0) > 1e-9)
        throw std::invalid_argument("data spec: target_class_weights must sum to 1");
    if (n_source < class_count || n_target_train < class_count || n_target_test < class_count)
        throw std::invalid_argument("data spec: split sizes must be >= class_count");
    for (int a = 0; a < class_count; ++a)
        for (int b = a + 1; b < class_count; ++b) {
            double diff = 0.0;
            for (int j = 0; j < input_dim; ++j) {
                const double d = class_means(a, j) - class_means(b, j);
                diff += d * d;
            }
            if (diff == 0.0) throw std::invalid_argument("data spec: coincident class means");
        }
}

Mat DomainShiftSpec::circle_means(int class_count, int input_dim, double radius, double phase) {
    Mat m(class_count, input_dim);
    for (int c = 0; c < class_count; ++c) {
        const double angle = 2.0 * 3.14159265358979323846 * c / class_count + phase;
        m(c, 0) = radius * std::cos(angle);
        if (input_dim >= 2) m(c, 1) = radius * std::sin(angle);
    }
    return m;
}

namespace {

int draw_class(RngStream& rng, const Vec& weights) {
    const double u = rng.uniform();
    double cum = 0.0;
    for (size_t c = 0; c < weights.size(); ++c) {
        cum += weights[c];
        if (u < cum) return static_cast<int>(c);
    }
    return static_cast<int>(weights.size()) - 1;
}

void draw_blob_sample(RngStream& rng, const DomainShiftSpec& spec, int label, std::span<double> out) {
    const double sd = std::sqrt(spec.class_cov_scale);
    for (int j = 0; j < spec.input_dim; ++j) out[j] = spec.class_means(label, j) + sd * rng.gaussian();
}

void apply_shift(const DomainShiftSpec& spec, std::span<double> x) {
    if (spec.input_dim >= 2 && spec.rotation_angle != 0.0) {
        const double c = std::cos(spec.rotation_angle), s = std::sin(spec.rotation_angle);
        const double x0 = x[0], x1 = x[1];
        x[0] = c * x0 - s * x1;
        x[1] = s * x0 + c * x1;
    }
    for (int j = 0; j < spec.input_dim; ++j) x[j] = spec.scale * x[j] + spec.translation[j];
}

} // namespace

DomainPair generate(const DomainShiftSpec& spec) {
    spec.validate();
    DomainPair pair;
    const Vec uniform_weights(spec.class_count, 1.0 / spec.class_count);

    pair.source.inputs = Mat(spec.n_source, spec.input_dim);
    pair.source.labels.resize(spec.n_source);
    for (int i = 0; i < spec.n_source; ++i) {
        RngStream rng(spec.seed, kTagGenSource, static_cast<uint64_t>(i));
        pair.source.labels[i] = draw_class(rng, uniform_weights);
        draw_blob_sample(rng, spec, pair.source.labels[i], pair.source.inputs.row(i));
    }

    // one target draw, split into train then test
    const int n_total = spec.n_target_train + spec.n_target_test;
    pair.target_train.inputs = Mat(spec.n_target_train, spec.input_dim);
    pair.target_train.labels.resize(spec.n_target_train);
    pair.target_test.inputs = Mat(spec.n_target_test, spec.input_dim);
    pair.target_test.labels.resize(spec.n_target_test);
    for (int i = 0; i < n_total; ++i) {
        RngStream rng(spec.seed, kTagGenTarget, static_cast<uint64_t>(i));
        const int label = draw_class(rng, spec.target_class_weights);
        const bool train = i < spec.n_target_train;
        auto row = train ? pair.target_train.inputs.row(i) : pair.target_test.inputs.row(i - spec.n_target_train);
        draw_blob_sample(rng, spec, label, row);
        apply_shift(spec, row);
        (train ? pair.target_train.labels[i] : pair.target_test.labels[i - spec.n_target_train]) = label;
    }
    return pair;
}

DomainPair standardize(const DomainPair& pair) {
    if (pair.source.size() == 0) throw std::invalid_argument("standardize: empty source split");
    const int n = pair.source.size(), dim = pair.source.inputs.cols;
    DomainPair out = pair;
    out.source_mean.assign(dim, 0.0);
    out.source_std.assign(dim, 0.0);
    out.warnings.clear();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < dim; ++j) out.source_mean[j] += pair.source.inputs(i, j);
    for (double& m : out.source_mean) m /= n;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < dim; ++j) {
            const double d = pair.source.inputs(i, j) - out.source_mean[j];
            out.source_std[j] += d * d;
        }
    for (int j = 0; j < dim; ++j) out.source_std[j] = std::sqrt(out.source_std[j] / n);

    for (int j = 0; j < dim; ++j)
        if (out.source_std[j] <= 1e-12)
            out.warnings.push_back("dimension " + std::to_string(j) + " has zero source variance; left unscaled");

    auto apply = [&](Mat& m) {
        for (int i = 0; i < m.rows; ++i)
            for (int j = 0; j < dim; ++j) {
                m(i, j) -= out.source_mean[j];
                if (out.source_std[j] > 1e-12) m(i, j) /= out.source_std[j];
            }
    };
    apply(out.source.inputs);
    apply(out.target_train.inputs);
    apply(out.target_test.inputs);
    return out;
}

namespace {

void write_split(std::FILE* f, const char* tag, const LabeledSet& set) {
    for (int i = 0; i < set.size(); ++i) {
        std::fprintf(f, "%s %d", tag, set.labels[i]);
        for (int j = 0; j < set.inputs.cols; ++j) std::fprintf(f, " %.17g", set.inputs(i, j));
        std::fprintf(f, "\n");
    }
}

void write_stats_line(std::FILE* f, const char* name, const Vec& v) {
    std::fprintf(f, "%s", name);
    for (double x : v) std::fprintf(f, " %.17g", x);
    std::fprintf(f, "\n");
}

} // namespace

void save_dataset(const DomainPair& pair, const std::string& spec_hash, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw InputError("cannot open dataset for writing: " + path);
    int K = 0;
    for (const LabeledSet* s : {&pair.source, &pair.target_train, &pair.target_test})
        for (int label : s->labels) K = std::max(K, label + 1);
    std::fprintf(f, "sfda_dataset 1\n");
    std::fprintf(f, "spec_hash %s\n", spec_hash.c_str());
    std::fprintf(f, "class_count %d\n", K);
    std::fprintf(f, "input_dim %d\n", pair.source.inputs.cols);
    std::fprintf(f, "n_source %d\n", pair.source.size());
    std::fprintf(f, "n_target_train %d\n", pair.target_train.size());
    std::fprintf(f, "n_target_test %d\n", pair.target_test.size());
    if (!pair.source_mean.empty()) {
        write_stats_line(f, "source_mean", pair.source_mean);
        write_stats_line(f, "source_std", pair.source_std);
    }
    std::fprintf(f, "rows\n");
    write_split(f, "source", pair.source);
    write_split(f, "target_train", pair.target_train);
    write_split(f, "target_test", pair.target_test);
    std::fprintf(f, "end\n");
    std::fclose(f);
}

LoadedDataset load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("missing dataset: " + path);
    std::string magic;
    int version = 0;
    in >> magic >> version;
    if (magic != "sfda_dataset" || version != 1) throw InputError("corrupt dataset (bad header): " + path);

    LoadedDataset out;
    int K = 0, dim = 0, n_source = 0, n_train = 0, n_test = 0;
    std::string key;
    while (in >> key && key != "rows") {
        if (key == "spec_hash") in >> out.spec_hash;
        else if (key == "class_count") in >> K;
        else if (key == "input_dim") in >> dim;
        else if (key == "n_source") in >> n_source;
        else if (key == "n_target_train") in >> n_train;
        else if (key == "n_target_test") in >> n_test;
        else if (key == "source_mean" || key == "source_std") {
            if (dim <= 0) throw InputError("corrupt dataset (stats before input_dim): " + path);
            Vec v(dim);
            for (double& x : v)
                if (!(in >> x)) throw InputError("corrupt dataset (stats): " + path);
            (key == "source_mean" ? out.pair.source_mean : out.pair.source_std) = v;
        } else {
            throw InputError("corrupt dataset (unknown header key " + key + "): " + path);
        }
        if (!in) throw InputError("corrupt dataset (header): " + path);
    }
    if (K < 2 || dim < 1 || n_source < 1 || n_train < 1 || n_test < 1)
        throw InputError("corrupt dataset (bad sizes): " + path);

    auto read_split = [&](const std::string& tag, int n) {
        LabeledSet set;
        set.inputs = Mat(n, dim);
        set.labels.resize(n);
        for (int i = 0; i < n; ++i) {
            std::string got;
            if (!(in >> got >> set.labels[i]) || got != tag)
                throw InputError("corrupt dataset (row " + std::to_string(i) + " of " + tag + "): " + path);
            if (set.labels[i] < 0 || set.labels[i] >= K)
                throw InputError("corrupt dataset (label out of range): " + path);
            for (int j = 0; j < dim; ++j)
                if (!(in >> set.inputs(i, j))) throw InputError("corrupt dataset (values): " + path);
        }
        return set;
    };
    out.pair.source = read_split("source", n_source);
    out.pair.target_train = read_split("target_train", n_train);
    out.pair.target_test = read_split("target_test", n_test);
    std::string tail;
    in >> tail;
    if (tail != "end") throw InputError("corrupt dataset (missing end): " + path);
    return out;
}

} // namespace sfda::synth
