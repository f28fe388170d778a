#include "sfda/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "sfda/errors.hpp"
#include "sfda/rng.hpp"

namespace sfda::engine {

namespace {

std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

bool params_finite(const nn::ModelParams& p) {
    for (const auto& layer : p.extractor)
        if (!all_finite(layer.weight) || !all_finite(std::span<const double>(layer.bias))) return false;
    return all_finite(p.classifier_direction) && all_finite(std::span<const double>(p.classifier_scale));
}

std::vector<int> shuffled_indices(int n, uint64_t seed, uint64_t epoch) {
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    RngStream rng(seed, kTagShuffle, epoch);
    for (int i = n - 1; i > 0; --i) {
        const int j = static_cast<int>(rng.index(static_cast<uint64_t>(i) + 1));
        std::swap(idx[i], idx[j]);
    }
    return idx;
}

} // namespace

void AdaptConfig::validate() const {
    if (epochs < 0) throw ConfigError("adapt.epochs must be >= 0");
    if (batch_size < 1) throw ConfigError("adapt.batch_size must be >= 1");
    if (!(gamma0 > 0.0)) throw ConfigError("adapt.gamma0 must be > 0");
    if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("adapt.momentum must be in [0,1)");
    if (weight_decay < 0.0) throw ConfigError("adapt.weight_decay must be >= 0");
    if (!(temperature > 0.0)) throw ConfigError("pseudo.temperature must be > 0");
    if (tau < 0.0 || tau >= 1.0) throw ConfigError("calib.tau must be in [0,1)");
    if (selection_threshold < 0.0 || selection_threshold > 1.0)
        throw ConfigError("selection.threshold must be in [0,1]");
    if (refresh_every_epochs < 1) throw ConfigError("calib.refresh_every_epochs must be >= 1");
    if (use_cr == vanilla_self_training)
        throw ConfigError("toggles inconsistent: exactly one of ablation.use_cr and "
                          "baseline.vanilla_self_training must be set");
    if (use_div_loss && use_class_weights)
        throw ConfigError("toggles inconsistent: baseline.use_div_loss replaces class weighting; "
                          "disable ablation.use_class_weights");
    if (use_div_loss && !(div_weight > 0.0)) throw ConfigError("baseline.div_weight must be > 0");
    try {
        augment.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

void write_report_csv(const RunReport& report, std::ostream& out) {
    const size_t K = report.rows.empty() ? 0 : report.rows.front().per_class_train.size();
    out << "epoch,train_acc,test_acc,mean_loss,selected_ratio";
    for (size_t c = 0; c < K; ++c) out << ",train_class_recall_" << c;
    out << "\n";
    for (const EpochRow& r : report.rows) {
        out << r.epoch << ',' << fmt_g17(r.train_acc) << ',' << fmt_g17(r.test_acc) << ','
            << fmt_g17(r.mean_loss) << ',' << fmt_g17(r.selected_ratio);
        for (double v : r.per_class_train) out << ',' << fmt_g17(v);
        out << "\n";
    }
}

EvalResult evaluate(const nn::ModelParams& model, const synth::LabeledSet& split) {
    if (split.size() == 0) throw std::invalid_argument("evaluate: empty split");
    const nn::Forward fwd = nn::forward(model, split.inputs);
    const int K = model.class_count;
    std::vector<long long> correct(K, 0), total(K, 0);
    for (int i = 0; i < split.size(); ++i) {
        const int pred = argmax(fwd.logits.row(i));
        const int label = split.labels[i];
        if (label < 0 || label >= K) throw std::invalid_argument("evaluate: label out of range");
        ++total[label];
        if (pred == label) ++correct[label];
    }
    EvalResult res;
    res.per_class.resize(K);
    long long all_correct = 0;
    for (int c = 0; c < K; ++c) {
        all_correct += correct[c];
        res.per_class[c] = total[c] > 0 ? 100.0 * correct[c] / total[c] : 0.0;
    }
    res.accuracy = 100.0 * all_correct / split.size();
    return res;
}

PretrainResult pretrain_source(const synth::DomainPair& pair, const std::vector<int>& arch,
                               const PretrainConfig& cfg) {
    if (pair.source.size() == 0) throw std::invalid_argument("pretrain_source: empty source split");
    const int n = pair.source.size();
    int n_holdout = static_cast<int>(n * cfg.holdout_fraction);
    n_holdout = std::clamp(n_holdout, 1, n - 1);
    const int n_train = n - n_holdout;

    synth::LabeledSet train_set, test_set;
    train_set.inputs = Mat(n_train, pair.source.inputs.cols);
    train_set.labels.assign(pair.source.labels.begin(), pair.source.labels.begin() + n_train);
    test_set.inputs = Mat(n_holdout, pair.source.inputs.cols);
    test_set.labels.assign(pair.source.labels.begin() + n_train, pair.source.labels.end());
    for (int i = 0; i < n_train; ++i)
        std::copy(pair.source.inputs.row(i).begin(), pair.source.inputs.row(i).end(),
                  train_set.inputs.row(i).begin());
    for (int i = 0; i < n_holdout; ++i)
        std::copy(pair.source.inputs.row(n_train + i).begin(), pair.source.inputs.row(n_train + i).end(),
                  test_set.inputs.row(i).begin());

    nn::ModelParams model = nn::init_params(arch, cfg.seed);
    nn::OptState opt = nn::make_opt_state(model, cfg.momentum, cfg.weight_decay);
    const int steps_per_epoch = (n_train + cfg.batch_size - 1) / cfg.batch_size;
    const long total_steps = static_cast<long>(cfg.epochs) * steps_per_epoch;
    long step = 0;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const std::vector<int> order = shuffled_indices(n_train, cfg.seed, static_cast<uint64_t>(epoch));
        for (int start = 0; start < n_train; start += cfg.batch_size) {
            const int bs = std::min(cfg.batch_size, n_train - start);
            nn::Batch batch;
            batch.inputs = Mat(bs, train_set.inputs.cols);
            batch.sample_indices.assign(order.begin() + start, order.begin() + start + bs);
            batch.labels.resize(bs);
            for (int b = 0; b < bs; ++b) {
                const int i = batch.sample_indices[b];
                std::copy(train_set.inputs.row(i).begin(), train_set.inputs.row(i).end(),
                          batch.inputs.row(b).begin());
                batch.labels[b] = train_set.labels[i];
            }
            const nn::Forward fwd = nn::forward(model, batch.inputs);
            if (!all_finite(fwd.logits)) throw NumericError("pretrain: non-finite forward pass", step);
            const double loss = nn::label_smoothed_ce(fwd.logits, batch.labels, cfg.label_smoothing);
            if (!std::isfinite(loss)) throw NumericError("pretrain: non-finite loss", step);
            const Mat probs = nn::softmax(fwd.logits);
            const int K = model.class_count;
            Mat grad(bs, K);
            for (int b = 0; b < bs; ++b)
                for (int k = 0; k < K; ++k) {
                    const double target =
                        cfg.label_smoothing / K + (k == batch.labels[b] ? 1.0 - cfg.label_smoothing : 0.0);
                    grad(b, k) = (probs(b, k) - target) / bs;
                }
            const nn::Gradients grads = nn::backward(model, batch.inputs, grad);
            const double lr = nn::lr_at_progress(cfg.gamma0, static_cast<double>(step) / total_steps);
            nn::sgd_momentum_step(model, grads, opt, lr);
            if (!params_finite(model)) throw NumericError("pretrain: non-finite parameters", step);
            ++step;
        }
    }

    PretrainResult res;
    res.source_train_acc = evaluate(model, train_set).accuracy;
    res.source_test_acc = evaluate(model, test_set).accuracy;
    res.model = std::move(model);
    return res;
}

namespace {

EpochRow make_row(int epoch, const nn::ModelParams& model, const synth::DomainPair& pair,
                  double mean_loss, double selected_ratio) {
    EpochRow row;
    row.epoch = epoch;
    const EvalResult train = evaluate(model, pair.target_train);
    const EvalResult test = evaluate(model, pair.target_test);
    row.train_acc = train.accuracy;
    row.test_acc = test.accuracy;
    row.mean_loss = mean_loss;
    row.selected_ratio = selected_ratio;
    row.per_class_train = train.per_class;
    return row;
}

} // namespace

AdaptOutcome adapt(const nn::ModelParams& source_model, const synth::DomainPair& pair,
                   const AdaptConfig& cfg) {
    cfg.validate();
    const Mat& X = pair.target_train.inputs;
    const int n_t = X.rows;
    if (n_t == 0) throw std::invalid_argument("adapt: empty target-train split");
    const int K = source_model.class_count;

    AdaptOutcome out;
    out.model = source_model;
    out.report.rows.push_back(make_row(0, out.model, pair, 0.0, 1.0));
    out.report.final_per_class_test = evaluate(out.model, pair.target_test).per_class;
    if (cfg.epochs == 0) return out;

    const augment::AugmentContext actx{cfg.augment, augment::per_dim_std(X)};
    calib::MemoryBank bank = calib::bank_init(out.model, X, actx, cfg.seed);
    nn::OptState opt = nn::make_opt_state(out.model, cfg.momentum, cfg.weight_decay);

    const int steps_per_epoch = (n_t + cfg.batch_size - 1) / cfg.batch_size;
    const long total_steps = static_cast<long>(cfg.epochs) * steps_per_epoch;
    long step = 0;

    // carried across refreshes: empty-class prototypes keep their last value
    calib::Prototypes protos;
    protos.eta = Mat(K, source_model.feature_dim);
    protos.valid.assign(K, 0);
    Vec wdiv(K, 1.0);

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        if ((epoch - 1) % cfg.refresh_every_epochs == 0) {
            if (cfg.use_class_weights) {
                try {
                    wdiv = calib::class_weights(calib::class_counts(bank, cfg.tau));
                } catch (const calib::EmptyCountsError&) {
                    wdiv.assign(K, 1.0);  // fully-unconfident bank
                }
            }
            if (cfg.use_proto_gate) {
                const calib::Prototypes fresh = calib::compute_prototypes(bank);
                for (int c = 0; c < K; ++c)
                    if (fresh.valid[c]) {
                        std::copy(fresh.eta.row(c).begin(), fresh.eta.row(c).end(), protos.eta.row(c).begin());
                        protos.valid[c] = 1;
                    }
            }
        }
        bool any_proto = false;
        for (char v : protos.valid) any_proto |= v != 0;

        const std::vector<int> order = shuffled_indices(n_t, cfg.seed, static_cast<uint64_t>(epoch));
        double loss_sum = 0.0;
        long selected = 0;

        for (int start = 0; start < n_t; start += cfg.batch_size) {
            const int bs = std::min(cfg.batch_size, n_t - start);
            nn::Batch weak_view;
            weak_view.inputs = Mat(bs, X.cols);
            weak_view.sample_indices.assign(order.begin() + start, order.begin() + start + bs);
            const std::vector<int>& idx = weak_view.sample_indices;

            Mat strong_x;
            if (cfg.use_cr) strong_x = Mat(bs, X.cols);
            for (int b = 0; b < bs; ++b) {
                RngStream wr(cfg.seed, kTagWeakView, static_cast<uint64_t>(idx[b]),
                             static_cast<uint64_t>(epoch));
                const Vec wv = augment::weak_augment(actx, X.row(idx[b]), wr);
                std::copy(wv.begin(), wv.end(), weak_view.inputs.row(b).begin());
                if (cfg.use_cr) {
                    RngStream sr(cfg.seed, kTagStrongView, static_cast<uint64_t>(idx[b]),
                                 static_cast<uint64_t>(epoch));
                    const Vec sv = augment::strong_augment(actx, X.row(idx[b]), sr);
                    std::copy(sv.begin(), sv.end(), strong_x.row(b).begin());
                }
            }

            const nn::Forward weak_fwd = nn::forward(out.model, weak_view.inputs);
            if (!all_finite(weak_fwd.logits)) throw NumericError("adapt: non-finite forward pass", step);
            const Mat weak_probs = nn::softmax(weak_fwd.logits);
            calib::bank_update(bank, idx, weak_probs, weak_fwd.features);

            std::vector<pseudo::SoftPseudoLabel> labels(bs);
            Vec xis(bs, 1.0), wds(bs, 1.0), wps(bs, 1.0);
            for (int b = 0; b < bs; ++b) {
                labels[b] = cfg.hard_labels ? pseudo::hard_label(weak_probs.row(b))
                                            : pseudo::sharpen(weak_fwd.logits.row(b), cfg.temperature);
                if (cfg.use_sampling) {
                    const double xi = cfg.use_sharpened_confidence
                                          ? pseudo::selection_probability(labels[b].probs)
                                          : pseudo::selection_probability(weak_probs.row(b));
                    RngStream sel(cfg.seed, kTagSelect, static_cast<uint64_t>(idx[b]),
                                  static_cast<uint64_t>(epoch));
                    xis[b] = pseudo::decide(xi, cfg.selection_mode, sel, cfg.selection_threshold).weight;
                }
                if (cfg.use_class_weights) wds[b] = wdiv[labels[b].predicted_class];
                if (cfg.use_proto_gate && any_proto)
                    wps[b] = calib::proto_agreement(weak_fwd.features.row(b), weak_probs.row(b), protos,
                                                    cfg.proto_distance);
                if (xis[b] * wps[b] > 0.0) ++selected;
            }

            // supervised branch: strong view under CR, the weak view itself
            // under vanilla self-training
            nn::Forward strong_fwd;
            const Mat& train_x = cfg.use_cr ? strong_x : weak_view.inputs;
            if (cfg.use_cr) {
                strong_fwd = nn::forward(out.model, strong_x);
                if (!all_finite(strong_fwd.logits))
                    throw NumericError("adapt: non-finite forward pass", step);
            }
            const Mat branch_probs = cfg.use_cr ? nn::softmax(strong_fwd.logits) : weak_probs;

            Vec losses(bs);
            for (int b = 0; b < bs; ++b)
                losses[b] = pseudo::consistency_loss(labels[b], branch_probs.row(b));
            double batch_loss = pseudo::weighted_batch_loss(losses, xis, wds, wps);

            Mat grad(bs, K);
            for (int b = 0; b < bs; ++b) {
                const double coeff = xis[b] * wds[b] * wps[b] / bs;
                for (int k = 0; k < K; ++k)
                    grad(b, k) = coeff * (branch_probs(b, k) - labels[b].probs[k]);
            }
            if (cfg.use_div_loss) {
                Vec mean(K, 0.0);
                for (int b = 0; b < bs; ++b)
                    for (int k = 0; k < K; ++k) mean[k] += branch_probs(b, k);
                for (double& m : mean) m /= bs;
                batch_loss += cfg.div_weight * calib::diversity_loss(mean);
                const Mat dg = calib::diversity_loss_logit_grad(branch_probs);
                for (int b = 0; b < bs; ++b)
                    for (int k = 0; k < K; ++k) grad(b, k) += cfg.div_weight * dg(b, k);
            }
            if (!std::isfinite(batch_loss)) throw NumericError("adapt: non-finite loss", step);

            const nn::Gradients grads = nn::backward(out.model, train_x, grad);
            const double lr = nn::lr_at_progress(cfg.gamma0, static_cast<double>(step) / total_steps);
            nn::sgd_momentum_step(out.model, grads, opt, lr);
            if (!params_finite(out.model)) throw NumericError("adapt: non-finite parameters", step);
            loss_sum += batch_loss * bs;
            ++step;
        }
        out.report.rows.push_back(
            make_row(epoch, out.model, pair, loss_sum / n_t, static_cast<double>(selected) / n_t));
    }
    out.report.final_per_class_test = evaluate(out.model, pair.target_test).per_class;
    return out;
}

AdaptConfig make_variant(const AdaptConfig& base, bool cr, bool ss, bool cw, bool pc) {
    AdaptConfig cfg = base;
    cfg.use_cr = cr;
    cfg.vanilla_self_training = !cr;
    cfg.use_sampling = ss;
    cfg.use_class_weights = cw;
    cfg.use_proto_gate = pc;
    return cfg;
}

std::vector<AblationRow> run_ablation(const synth::DomainPair& pair,
                                      const std::map<uint64_t, nn::ModelParams>& models,
                                      const AdaptConfig& base, const std::vector<uint64_t>& seeds) {
    struct Row {
        const char* label;
        bool cr, ss, cw, pc;
    };
    // Table layout: source-only plus the five toggle combinations.
    static constexpr Row kRows[] = {
        {"source_only", false, false, false, false},
        {"cr", true, false, false, false},
        {"cr_ss", true, true, false, false},
        {"cr_ss_pc", true, true, false, true},
        {"cr_ss_cw", true, true, true, false},
        {"full", true, true, true, true},
    };
    std::vector<AblationRow> out;
    for (uint64_t seed : seeds) {
        const auto it = models.find(seed);
        if (it == models.end()) throw std::invalid_argument("run_ablation: missing model for seed");
        for (const Row& r : kRows) {
            AblationRow row;
            row.label = r.label;
            row.seed = seed;
            if (std::string(r.label) == "source_only") {
                row.cfg = base;
                row.cfg.seed = seed;
                row.cfg.epochs = 0;
            } else {
                row.cfg = make_variant(base, r.cr, r.ss, r.cw, r.pc);
                row.cfg.seed = seed;
            }
            row.report = adapt(it->second, pair, row.cfg).report;
            out.push_back(std::move(row));
        }
    }
    return out;
}

} // namespace sfda::engine
