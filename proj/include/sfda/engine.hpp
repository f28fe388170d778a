#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "sfda/augment.hpp"
#include "sfda/calib.hpp"
#include "sfda/nn.hpp"
#include "sfda/pseudo.hpp"
#include "sfda/synthdata.hpp"

namespace sfda::engine {

// Every hyperparameter and toggle of the adaptation pipeline. Defaults match
// the project's config-file defaults.
struct AdaptConfig {
    int epochs = 30;
    int batch_size = 64;
    double gamma0 = 4e-4;
    double momentum = 0.9;
    double weight_decay = 1e-3;
    double temperature = 0.5;
    double tau = 0.8;
    pseudo::SelectionMode selection_mode = pseudo::SelectionMode::expectation;
    double selection_threshold = 0.8;
    bool use_sharpened_confidence = false;  // xi from sharpened instead of plain weak probs
    bool use_cr = true;          // false switches to vanilla self-training
    bool use_sampling = true;
    bool use_class_weights = true;
    bool use_proto_gate = true;
    bool vanilla_self_training = false;  // must equal !use_cr
    bool hard_labels = false;
    bool use_div_loss = false;   // replaces class weighting by beta * L_div
    double div_weight = 0.1;
    int refresh_every_epochs = 1;
    calib::Distance proto_distance = calib::Distance::cosine;
    uint64_t seed = 0;
    augment::AugmentConfig augment;

    void validate() const;
};

struct EpochRow {
    int epoch = 0;  // 0 is the pre-adaptation state
    double train_acc = 0.0;
    double test_acc = 0.0;
    double mean_loss = 0.0;
    double selected_ratio = 1.0;  // fraction of samples with non-zero effective weight
    Vec per_class_train;          // recall in percent
};

struct RunReport {
    std::vector<EpochRow> rows;
    Vec final_per_class_test;

    double final_train_acc() const { return rows.back().train_acc; }
    double final_test_acc() const { return rows.back().test_acc; }
    double drop_abs() const { return final_train_acc() - final_test_acc(); }
    double drop_rel() const {
        const double t = final_train_acc();
        return t > 0.0 ? 100.0 * drop_abs() / t : 0.0;
    }
};

// Columns: epoch,train_acc,test_acc,mean_loss,selected_ratio,
//          train_class_recall_<c> for c in 0..K-1. Values at 17 significant
// digits for bit-stable re-runs.
void write_report_csv(const RunReport& report, std::ostream& out);

struct EvalResult {
    double accuracy = 0.0;  // percent
    Vec per_class;          // recall percent; 0 for absent classes
};

// Top-1 accuracy on raw inputs (never augmented).
EvalResult evaluate(const nn::ModelParams& model, const synth::LabeledSet& split);

struct PretrainConfig {
    int epochs = 40;
    int batch_size = 64;
    double gamma0 = 0.05;
    double momentum = 0.9;
    double weight_decay = 1e-3;
    double label_smoothing = 0.1;
    double holdout_fraction = 0.1;  // tail of the source split held out for source-test accuracy
    uint64_t seed = 0;
};

struct PretrainResult {
    nn::ModelParams model;
    double source_train_acc = 0.0;
    double source_test_acc = 0.0;
};

PretrainResult pretrain_source(const synth::DomainPair& pair, const std::vector<int>& arch,
                               const PretrainConfig& cfg);

struct AdaptOutcome {
    nn::ModelParams model;
    RunReport report;
};

// The adaptation loop: per epoch refresh class stats and prototypes from the
// bank, per batch build weak/strong views, update the bank from the weak
// pass, form sharpened pseudo-labels (treated as constants), apply selection
// and calibration weights, and step SGD through the supervised branch only.
AdaptOutcome adapt(const nn::ModelParams& source_model, const synth::DomainPair& pair,
                   const AdaptConfig& cfg);

// Copy of base with the four pipeline toggles replaced (vanilla flag kept
// consistent with use_cr).
AdaptConfig make_variant(const AdaptConfig& base, bool cr, bool ss, bool cw, bool pc);

struct AblationRow {
    std::string label;
    AdaptConfig cfg;
    uint64_t seed = 0;
    RunReport report;
};

// Source-only plus the five toggle combinations, per seed, sharing the
// per-seed pretrained checkpoint.
std::vector<AblationRow> run_ablation(const synth::DomainPair& pair,
                                      const std::map<uint64_t, nn::ModelParams>& models,
                                      const AdaptConfig& base, const std::vector<uint64_t>& seeds);

} // namespace sfda::engine
