#include "sfda/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "json.hpp"

#include "sfda/config.hpp"
#include "sfda/engine.hpp"
#include "sfda/errors.hpp"
#include "sfda/rng.hpp"

namespace sfda::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt_hash(uint64_t h) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "fnv1a:%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_value(const std::string& axis, const std::string& v) {
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0')
        throw ConfigError("sweep: bad value '" + v + "' for axis " + axis);
    return x;
}

std::string hash_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("missing input file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string bytes = buf.str();
    return fmt_hash(fnv1a64(std::span<const char>(bytes.data(), bytes.size())));
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write: " + path.string());
    out << text;
}

void write_manifest(const fs::path& out_dir, const std::string& command, const ExperimentConfig* cfg,
                    const json& inputs, const std::string& dataset_hash,
                    const std::vector<uint64_t>& seeds, const std::vector<std::string>& outputs) {
    json m;
    m["tool"] = kToolVersion;
    m["command"] = command;
    if (cfg) {
        json c = json::object();
        for (const auto& [k, v] : cfg->resolved) c[k] = v;
        m["config"] = c;
    }
    m["inputs"] = inputs;
    m["dataset_spec_hash"] = dataset_hash;
    m["seeds"] = seeds;
    m["outputs"] = outputs;
    write_text(out_dir / "manifest.json", m.dump(2) + "\n");
    if (cfg) write_text(out_dir / "resolved.cfg", serialize_resolved(cfg->resolved));
}

std::vector<uint64_t> effective_seeds(const ExperimentConfig& cfg, const std::vector<uint64_t>& seeds) {
    return seeds.empty() ? std::vector<uint64_t>{cfg.seed} : seeds;
}

// model_path may be a checkpoint file (shared across seeds) or a directory
// holding model_seed<k>.ckpt files.
std::string checkpoint_for_seed(const std::string& model_path, uint64_t seed) {
    if (fs::is_directory(model_path))
        return (fs::path(model_path) / ("model_seed" + std::to_string(seed) + ".ckpt")).string();
    return model_path;
}

json eval_json(const engine::EvalResult& train, const engine::EvalResult& test) {
    json j;
    j["train_acc"] = train.accuracy;
    j["test_acc"] = test.accuracy;
    j["drop"] = train.accuracy - test.accuracy;
    j["drop_rel"] = train.accuracy > 0.0 ? 100.0 * (train.accuracy - test.accuracy) / train.accuracy : 0.0;
    j["per_class_train"] = train.per_class;
    j["per_class_test"] = test.per_class;
    return j;
}

int guarded(const char* command, const std::function<int()>& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        std::cerr << command << ": config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const InputError& e) {
        std::cerr << command << ": input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const NumericError& e) {
        std::cerr << command << ": numeric failure at step " << e.step << ": " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << command << ": error: " << e.what() << "\n";
        return kExitConfig;
    }
}

} // namespace

std::vector<uint64_t> parse_seed_list(const std::string& csv) {
    std::vector<uint64_t> out;
    std::istringstream in(csv);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (item.empty()) continue;
        char* end = nullptr;
        const unsigned long long v = std::strtoull(item.c_str(), &end, 10);
        if (end == item.c_str() || *end != '\0') throw ConfigError("invalid seed list entry: " + item);
        out.push_back(v);
    }
    return out;
}

int cmd_gen(const std::string& config_path, const std::string& out_dir) {
    return guarded("gen", [&] {
        const ExperimentConfig cfg = load_experiment_config(config_path);
        fs::create_directories(out_dir);
        synth::DomainPair pair = synth::generate(cfg.data);
        if (cfg.data_standardize) pair = synth::standardize(pair);
        for (const std::string& w : pair.warnings) std::cerr << "gen: warning: " << w << "\n";
        const std::string resolved_text = serialize_resolved(cfg.resolved);
        const std::string spec_hash =
            fmt_hash(fnv1a64(std::span<const char>(resolved_text.data(), resolved_text.size())));
        synth::save_dataset(pair, spec_hash, (fs::path(out_dir) / "dataset.txt").string());
        write_manifest(out_dir, "gen", &cfg, json{{"config", config_path}}, spec_hash, {cfg.seed},
                       {"dataset.txt"});
        std::cout << "gen: wrote dataset.txt (" << pair.source.size() << " source, "
                  << pair.target_train.size() << " target-train, " << pair.target_test.size()
                  << " target-test)\n";
        return kExitOk;
    });
}

int cmd_pretrain(const std::string& config_path, const std::string& data_path,
                 const std::string& out_dir, const std::vector<uint64_t>& seeds) {
    return guarded("pretrain", [&] {
        const ExperimentConfig cfg = load_experiment_config(config_path);
        const synth::LoadedDataset data = synth::load_dataset(data_path);
        fs::create_directories(out_dir);
        std::vector<std::string> outputs;
        for (uint64_t seed : effective_seeds(cfg, seeds)) {
            engine::PretrainConfig pc = cfg.pretrain;
            pc.seed = seed;
            const engine::PretrainResult res = engine::pretrain_source(data.pair, cfg.arch(), pc);
            const std::string ckpt = "model_seed" + std::to_string(seed) + ".ckpt";
            nn::save_checkpoint(res.model, (fs::path(out_dir) / ckpt).string());
            json j;
            j["tool"] = kToolVersion;
            j["seed"] = seed;
            j["source_train_acc"] = res.source_train_acc;
            j["source_test_acc"] = res.source_test_acc;
            const std::string summary = "pretrain_summary_seed" + std::to_string(seed) + ".json";
            write_text(fs::path(out_dir) / summary, j.dump(2) + "\n");
            outputs.push_back(ckpt);
            outputs.push_back(summary);
            std::cout << "pretrain: seed " << seed << " source train acc " << res.source_train_acc
                      << " source test acc " << res.source_test_acc << "\n";
        }
        write_manifest(out_dir, "pretrain", &cfg, json{{"config", config_path}, {"data", data_path}},
                       hash_file(data_path), effective_seeds(cfg, seeds), outputs);
        return kExitOk;
    });
}

int cmd_adapt(const std::string& config_path, const std::string& data_path,
              const std::string& model_path, const std::string& out_dir,
              const std::vector<uint64_t>& seeds) {
    return guarded("adapt", [&] {
        const ExperimentConfig cfg = load_experiment_config(config_path);
        const synth::LoadedDataset data = synth::load_dataset(data_path);
        fs::create_directories(out_dir);
        std::vector<std::string> outputs;
        for (uint64_t seed : effective_seeds(cfg, seeds)) {
            const nn::ModelParams model = nn::load_checkpoint(checkpoint_for_seed(model_path, seed));
            engine::AdaptConfig ac = cfg.adapt;
            ac.seed = seed;
            const engine::AdaptOutcome res = engine::adapt(model, data.pair, ac);

            const std::string ckpt = "adapted_seed" + std::to_string(seed) + ".ckpt";
            nn::save_checkpoint(res.model, (fs::path(out_dir) / ckpt).string());
            const std::string csv = "report_seed" + std::to_string(seed) + ".csv";
            std::ostringstream csv_text;
            engine::write_report_csv(res.report, csv_text);
            write_text(fs::path(out_dir) / csv, csv_text.str());

            json j;
            j["tool"] = kToolVersion;
            j["seed"] = seed;
            json c = json::object();
            for (const auto& [k, v] : cfg.resolved) c[k] = v;
            j["config"] = c;
            j["initial"] = {{"train_acc", res.report.rows.front().train_acc},
                            {"test_acc", res.report.rows.front().test_acc}};
            j["final"] = {{"train_acc", res.report.final_train_acc()},
                          {"test_acc", res.report.final_test_acc()},
                          {"per_class_train", res.report.rows.back().per_class_train},
                          {"per_class_test", res.report.final_per_class_test}};
            j["drop"] = res.report.drop_abs();
            j["drop_rel"] = res.report.drop_rel();
            const std::string summary = "summary_seed" + std::to_string(seed) + ".json";
            write_text(fs::path(out_dir) / summary, j.dump(2) + "\n");
            outputs.insert(outputs.end(), {ckpt, csv, summary});
            std::cout << "adapt: seed " << seed << " train acc "
                      << res.report.rows.front().train_acc << " -> " << res.report.final_train_acc()
                      << ", test acc " << res.report.rows.front().test_acc << " -> "
                      << res.report.final_test_acc() << "\n";
        }
        write_manifest(out_dir, "adapt", &cfg,
                       json{{"config", config_path}, {"data", data_path}, {"model", model_path}},
                       hash_file(data_path), effective_seeds(cfg, seeds), outputs);
        return kExitOk;
    });
}

int cmd_eval(const std::string& data_path, const std::string& model_path, const std::string& out_dir) {
    return guarded("eval", [&] {
        const synth::LoadedDataset data = synth::load_dataset(data_path);
        const nn::ModelParams model = nn::load_checkpoint(model_path);
        fs::create_directories(out_dir);
        const engine::EvalResult train = engine::evaluate(model, data.pair.target_train);
        const engine::EvalResult test = engine::evaluate(model, data.pair.target_test);
        json j = eval_json(train, test);
        j["tool"] = kToolVersion;
        write_text(fs::path(out_dir) / "eval.json", j.dump(2) + "\n");
        write_manifest(out_dir, "eval", nullptr, json{{"data", data_path}, {"model", model_path}},
                       hash_file(data_path), {}, {"eval.json"});
        std::cout << "eval: train acc " << train.accuracy << ", test acc " << test.accuracy << ", drop "
                  << train.accuracy - test.accuracy << "\n";
        return kExitOk;
    });
}

namespace {

void write_ablation_csv(const std::vector<engine::AblationRow>& rows, std::ostream& out) {
    const size_t K = rows.empty() ? 0 : rows.front().report.rows.back().per_class_train.size();
    out << "label,use_cr,use_sampling,use_class_weights,use_proto_gate,seed,train_acc,test_acc,"
           "drop,drop_rel,min_train_class_recall";
    for (size_t c = 0; c < K; ++c) out << ",train_class_recall_" << c;
    out << "\n";
    for (const auto& r : rows) {
        const Vec& pc = r.report.rows.back().per_class_train;
        const double min_recall = *std::min_element(pc.begin(), pc.end());
        const bool source_only = r.label == "source_only";
        out << r.label << ',' << (source_only ? 0 : r.cfg.use_cr) << ','
            << (source_only ? 0 : r.cfg.use_sampling) << ',' << (source_only ? 0 : r.cfg.use_class_weights)
            << ',' << (source_only ? 0 : r.cfg.use_proto_gate) << ',' << r.seed << ','
            << fmt_g17(r.report.final_train_acc()) << ',' << fmt_g17(r.report.final_test_acc()) << ','
            << fmt_g17(r.report.drop_abs()) << ',' << fmt_g17(r.report.drop_rel()) << ','
            << fmt_g17(min_recall);
        for (double v : pc) out << ',' << fmt_g17(v);
        out << "\n";
    }
}

} // namespace

int cmd_ablate(const std::string& config_path, const std::string& data_path,
               const std::string& model_path, const std::string& out_dir,
               const std::vector<uint64_t>& seeds) {
    return guarded("ablate", [&] {
        const ExperimentConfig cfg = load_experiment_config(config_path);
        const synth::LoadedDataset data = synth::load_dataset(data_path);
        fs::create_directories(out_dir);
        const std::vector<uint64_t> run_seeds = effective_seeds(cfg, seeds);
        std::map<uint64_t, nn::ModelParams> models;
        for (uint64_t seed : run_seeds)
            models.emplace(seed, nn::load_checkpoint(checkpoint_for_seed(model_path, seed)));
        const auto rows = engine::run_ablation(data.pair, models, cfg.adapt, run_seeds);
        std::ostringstream csv;
        write_ablation_csv(rows, csv);
        write_text(fs::path(out_dir) / "ablation.csv", csv.str());
        write_manifest(out_dir, "ablate", &cfg,
                       json{{"config", config_path}, {"data", data_path}, {"model", model_path}},
                       hash_file(data_path), run_seeds, {"ablation.csv"});
        std::cout << "ablate: " << rows.size() << " rows (" << run_seeds.size() << " seeds x 6 configurations)\n";
        return kExitOk;
    });
}

int cmd_sweep(const std::string& config_path, const std::string& data_path,
              const std::string& model_path, const std::string& out_dir, const std::string& axis_spec,
              const std::vector<uint64_t>& seeds) {
    return guarded("sweep", [&] {
        const size_t eq = axis_spec.find('=');
        if (eq == std::string::npos)
            throw ConfigError("sweep: expected --sweep key=v1,v2,..., got '" + axis_spec + "'");
        const std::string axis = axis_spec.substr(0, eq);
        std::vector<std::string> values;
        {
            std::istringstream in(axis_spec.substr(eq + 1));
            std::string item;
            while (std::getline(in, item, ','))
                if (!item.empty()) values.push_back(item);
        }
        if (values.empty()) throw ConfigError("sweep: no values given for axis " + axis);
        const bool axis_threshold = axis == "selection.threshold";
        const bool axis_div = axis == "baseline.div_weight";
        const bool axis_tau = axis == "calib.tau";
        const bool axis_seed = axis == "seed";
        if (!axis_threshold && !axis_div && !axis_tau && !axis_seed)
            throw ConfigError("sweep: unknown sweep axis: " + axis);

        const ExperimentConfig cfg = load_experiment_config(config_path);
        if (axis_threshold && cfg.adapt.selection_mode != pseudo::SelectionMode::threshold)
            throw ConfigError("sweep: axis selection.threshold requires selection.mode = threshold");
        if (axis_div && !cfg.adapt.use_div_loss)
            throw ConfigError("sweep: axis baseline.div_weight requires baseline.use_div_loss = true");
        const synth::LoadedDataset data = synth::load_dataset(data_path);
        fs::create_directories(out_dir);

        const std::vector<uint64_t> run_seeds =
            axis_seed ? std::vector<uint64_t>{0} : effective_seeds(cfg, seeds);

        std::ostringstream csv;
        csv << "axis,value,seed,train_acc,test_acc,drop,drop_rel,min_train_class_recall\n";
        std::vector<uint64_t> manifest_seeds;
        for (const std::string& value : values) {
            for (uint64_t seed : run_seeds) {
                engine::AdaptConfig ac = cfg.adapt;
                uint64_t effective_seed = seed;
                if (axis_threshold) ac.selection_threshold = parse_value(axis, value);
                if (axis_div) ac.div_weight = parse_value(axis, value);
                if (axis_tau) ac.tau = parse_value(axis, value);
                if (axis_seed) {
                    const std::vector<uint64_t> parsed = parse_seed_list(value);
                    if (parsed.size() != 1) throw ConfigError("sweep: bad seed value: " + value);
                    effective_seed = parsed[0];
                }
                ac.seed = effective_seed;
                ac.validate();
                manifest_seeds.push_back(effective_seed);
                const nn::ModelParams model =
                    nn::load_checkpoint(checkpoint_for_seed(model_path, effective_seed));
                const engine::AdaptOutcome res = engine::adapt(model, data.pair, ac);
                const Vec& pc = res.report.rows.back().per_class_train;
                csv << axis << ',' << value << ',' << effective_seed << ','
                    << fmt_g17(res.report.final_train_acc()) << ',' << fmt_g17(res.report.final_test_acc())
                    << ',' << fmt_g17(res.report.drop_abs()) << ',' << fmt_g17(res.report.drop_rel()) << ','
                    << fmt_g17(*std::min_element(pc.begin(), pc.end())) << "\n";
            }
        }
        write_text(fs::path(out_dir) / "sweep.csv", csv.str());
        write_manifest(out_dir, "sweep", &cfg,
                       json{{"config", config_path}, {"data", data_path}, {"model", model_path},
                            {"sweep", axis_spec}},
                       hash_file(data_path), manifest_seeds, {"sweep.csv"});
        std::cout << "sweep: " << values.size() * run_seeds.size() << " rows over axis " << axis << "\n";
        return kExitOk;
    });
}

} // namespace sfda::cli
