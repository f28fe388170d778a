#include "sfda/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "sfda/errors.hpp"

namespace sfda::cli {

namespace {

constexpr double kPi = 3.14159265358979323846;

// key -> default; empty default marks a required key
const std::vector<std::pair<std::string, std::string>>& schema() {
    static const std::vector<std::pair<std::string, std::string>> s = {
        {"seed", ""},
        {"data.class_count", "4"},
        {"data.input_dim", "2"},
        {"data.mean_radius", "1.0"},
        {"data.mean_phase_deg", "180"},
        {"data.class_cov_scale", "0.15"},
        {"data.rotation_deg", "30"},
        {"data.translation", "0.3,-0.2"},
        {"data.scale", "1.1"},
        {"data.target_class_weights", "uniform"},
        {"data.n_source", "4000"},
        {"data.n_target_train", "2000"},
        {"data.n_target_test", "2000"},
        {"data.standardize", "true"},
        {"model.hidden", "32,32"},
        {"pretrain.epochs", "40"},
        {"pretrain.batch_size", "64"},
        {"pretrain.gamma0", "0.05"},
        {"pretrain.label_smoothing", "0.1"},
        {"pretrain.holdout_fraction", "0.1"},
        {"adapt.epochs", "30"},
        {"adapt.batch_size", "64"},
        {"adapt.gamma0", "4e-4"},
        {"adapt.momentum", "0.9"},
        {"adapt.weight_decay", "1e-3"},
        {"pseudo.temperature", "0.5"},
        {"selection.mode", "expectation"},
        {"selection.threshold", "0.8"},
        {"selection.use_sharpened_confidence", "false"},
        {"calib.tau", "0.8"},
        {"calib.refresh_every_epochs", "1"},
        {"calib.distance", "cosine"},
        {"ablation.use_cr", "true"},
        {"ablation.use_sampling", "true"},
        {"ablation.use_class_weights", "true"},
        {"ablation.use_proto_gate", "true"},
        {"baseline.vanilla_self_training", "false"},
        {"baseline.hard_labels", "false"},
        {"baseline.use_div_loss", "false"},
        {"baseline.div_weight", "0.1"},
        {"augment.weak_noise_sigma", "0.05"},
        {"augment.strong_ops_per_sample", "2"},
        {"augment.strong_magnitude", "0.5"},
        {"augment.op_pool", "noise,mask,scale,rotate"},
    };
    return s;
}

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

double to_double(const std::string& key, const std::string& v) {
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0' || !std::isfinite(x))
        throw ConfigError("config key " + key + ": expected a number, got '" + v + "'");
    return x;
}

long long to_int(const std::string& key, const std::string& v) {
    char* end = nullptr;
    const long long x = std::strtoll(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0')
        throw ConfigError("config key " + key + ": expected an integer, got '" + v + "'");
    return x;
}

uint64_t to_u64(const std::string& key, const std::string& v) {
    char* end = nullptr;
    const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0')
        throw ConfigError("config key " + key + ": expected an unsigned integer, got '" + v + "'");
    return x;
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("config key " + key + ": expected true/false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(v);
    while (std::getline(in, cur, ',')) {
        cur = trim(cur);
        if (!cur.empty()) out.push_back(cur);
    }
    return out;
}

} // namespace

std::map<std::string, std::string> parse_kv_string(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        if (kv.count(key)) throw ConfigError("duplicate config key: " + key);
        kv[key] = value;
    }
    return kv;
}

std::map<std::string, std::string> parse_kv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_kv_string(buf.str());
}

std::vector<int> ExperimentConfig::arch() const {
    std::vector<int> a{data.input_dim};
    a.insert(a.end(), hidden.begin(), hidden.end());
    a.push_back(data.class_count);
    return a;
}

ExperimentConfig resolve_config(const std::map<std::string, std::string>& raw) {
    std::map<std::string, std::string> resolved;
    for (const auto& [key, def] : schema()) {
        const auto it = raw.find(key);
        if (it != raw.end()) {
            resolved[key] = it->second;
        } else if (!def.empty()) {
            resolved[key] = def;
        } else {
            throw ConfigError("missing required config key: " + key);
        }
    }
    for (const auto& kv : raw)
        if (!resolved.count(kv.first)) throw ConfigError("unknown config key: " + kv.first);

    auto get = [&](const char* key) -> const std::string& { return resolved.at(key); };

    ExperimentConfig cfg;
    cfg.seed = to_u64("seed", get("seed"));

    cfg.data.class_count = static_cast<int>(to_int("data.class_count", get("data.class_count")));
    cfg.data.input_dim = static_cast<int>(to_int("data.input_dim", get("data.input_dim")));
    cfg.data.class_cov_scale = to_double("data.class_cov_scale", get("data.class_cov_scale"));
    cfg.data.rotation_angle = to_double("data.rotation_deg", get("data.rotation_deg")) * kPi / 180.0;
    cfg.data.scale = to_double("data.scale", get("data.scale"));
    cfg.data.n_source = static_cast<int>(to_int("data.n_source", get("data.n_source")));
    cfg.data.n_target_train = static_cast<int>(to_int("data.n_target_train", get("data.n_target_train")));
    cfg.data.n_target_test = static_cast<int>(to_int("data.n_target_test", get("data.n_target_test")));
    cfg.data.seed = cfg.seed;
    if (cfg.data.class_count < 2) throw ConfigError("config key data.class_count: must be >= 2");
    if (cfg.data.input_dim < 1) throw ConfigError("config key data.input_dim: must be >= 1");
    cfg.data.class_means = synth::DomainShiftSpec::circle_means(
        cfg.data.class_count, cfg.data.input_dim, to_double("data.mean_radius", get("data.mean_radius")),
        to_double("data.mean_phase_deg", get("data.mean_phase_deg")) * kPi / 180.0);

    for (const auto& item : split_list(get("data.translation")))
        cfg.data.translation.push_back(to_double("data.translation", item));
    if (static_cast<int>(cfg.data.translation.size()) != cfg.data.input_dim)
        throw ConfigError("config key data.translation: expected " + std::to_string(cfg.data.input_dim) +
                          " comma-separated values");

    const std::string weights = get("data.target_class_weights");
    if (weights == "uniform") {
        cfg.data.target_class_weights.assign(cfg.data.class_count, 1.0 / cfg.data.class_count);
    } else {
        for (const auto& item : split_list(weights))
            cfg.data.target_class_weights.push_back(to_double("data.target_class_weights", item));
        if (static_cast<int>(cfg.data.target_class_weights.size()) != cfg.data.class_count)
            throw ConfigError("config key data.target_class_weights: expected 'uniform' or " +
                              std::to_string(cfg.data.class_count) + " values");
    }
    cfg.data_standardize = to_bool("data.standardize", get("data.standardize"));

    for (const auto& item : split_list(get("model.hidden"))) {
        const long long width = to_int("model.hidden", item);
        if (width < 1) throw ConfigError("config key model.hidden: widths must be >= 1");
        cfg.hidden.push_back(static_cast<int>(width));
    }

    cfg.pretrain.epochs = static_cast<int>(to_int("pretrain.epochs", get("pretrain.epochs")));
    cfg.pretrain.batch_size = static_cast<int>(to_int("pretrain.batch_size", get("pretrain.batch_size")));
    cfg.pretrain.gamma0 = to_double("pretrain.gamma0", get("pretrain.gamma0"));
    cfg.pretrain.label_smoothing = to_double("pretrain.label_smoothing", get("pretrain.label_smoothing"));
    cfg.pretrain.holdout_fraction = to_double("pretrain.holdout_fraction", get("pretrain.holdout_fraction"));
    cfg.pretrain.momentum = to_double("adapt.momentum", get("adapt.momentum"));
    cfg.pretrain.weight_decay = to_double("adapt.weight_decay", get("adapt.weight_decay"));
    cfg.pretrain.seed = cfg.seed;
    if (cfg.pretrain.epochs < 1) throw ConfigError("config key pretrain.epochs: must be >= 1");
    if (cfg.pretrain.holdout_fraction <= 0.0 || cfg.pretrain.holdout_fraction >= 1.0)
        throw ConfigError("config key pretrain.holdout_fraction: must be in (0,1)");

    engine::AdaptConfig& a = cfg.adapt;
    a.epochs = static_cast<int>(to_int("adapt.epochs", get("adapt.epochs")));
    a.batch_size = static_cast<int>(to_int("adapt.batch_size", get("adapt.batch_size")));
    a.gamma0 = to_double("adapt.gamma0", get("adapt.gamma0"));
    a.momentum = to_double("adapt.momentum", get("adapt.momentum"));
    a.weight_decay = to_double("adapt.weight_decay", get("adapt.weight_decay"));
    a.temperature = to_double("pseudo.temperature", get("pseudo.temperature"));
    a.tau = to_double("calib.tau", get("calib.tau"));
    try {
        a.selection_mode = pseudo::parse_selection_mode(get("selection.mode"));
        a.proto_distance = calib::parse_distance(get("calib.distance"));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config key: ") + e.what());
    }
    a.selection_threshold = to_double("selection.threshold", get("selection.threshold"));
    a.use_sharpened_confidence =
        to_bool("selection.use_sharpened_confidence", get("selection.use_sharpened_confidence"));
    a.refresh_every_epochs =
        static_cast<int>(to_int("calib.refresh_every_epochs", get("calib.refresh_every_epochs")));
    a.use_cr = to_bool("ablation.use_cr", get("ablation.use_cr"));
    a.use_sampling = to_bool("ablation.use_sampling", get("ablation.use_sampling"));
    a.use_class_weights = to_bool("ablation.use_class_weights", get("ablation.use_class_weights"));
    a.use_proto_gate = to_bool("ablation.use_proto_gate", get("ablation.use_proto_gate"));
    a.vanilla_self_training =
        to_bool("baseline.vanilla_self_training", get("baseline.vanilla_self_training"));
    a.hard_labels = to_bool("baseline.hard_labels", get("baseline.hard_labels"));
    a.use_div_loss = to_bool("baseline.use_div_loss", get("baseline.use_div_loss"));
    a.div_weight = to_double("baseline.div_weight", get("baseline.div_weight"));
    a.seed = cfg.seed;
    a.augment.weak_noise_sigma = to_double("augment.weak_noise_sigma", get("augment.weak_noise_sigma"));
    a.augment.strong_ops_per_sample =
        static_cast<int>(to_int("augment.strong_ops_per_sample", get("augment.strong_ops_per_sample")));
    a.augment.strong_magnitude = to_double("augment.strong_magnitude", get("augment.strong_magnitude"));
    a.augment.op_pool = split_list(get("augment.op_pool"));
    a.validate();

    try {
        cfg.data.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }

    cfg.resolved = std::move(resolved);
    return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    return resolve_config(parse_kv_file(path));
}

std::string serialize_resolved(const std::map<std::string, std::string>& resolved) {
    std::ostringstream out;
    for (const auto& [key, value] : resolved) out << key << " = " << value << "\n";
    return out.str();
}

} // namespace sfda::cli
