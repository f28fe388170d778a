#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sfda/engine.hpp"
#include "sfda/synthdata.hpp"

namespace sfda::cli {

// Flat `key = value` config with dotted namespaces and '#' comments. Every
// key has a default except `seed`; unknown keys are rejected so typos fail
// loudly with the offending key named.
struct ExperimentConfig {
    uint64_t seed = 0;
    synth::DomainShiftSpec data;
    bool data_standardize = true;
    std::vector<int> hidden;  // extractor widths; last entry is the feature dim
    engine::PretrainConfig pretrain;
    engine::AdaptConfig adapt;

    // every key with its final value, defaults materialized
    std::map<std::string, std::string> resolved;

    std::vector<int> arch() const;
};

std::map<std::string, std::string> parse_kv_file(const std::string& path);
std::map<std::string, std::string> parse_kv_string(const std::string& text);

ExperimentConfig resolve_config(const std::map<std::string, std::string>& raw);
ExperimentConfig load_experiment_config(const std::string& path);

// Canonical serialization of the resolved key-value map (sorted keys); this
// is what re-runs consume to reproduce a run bit-for-bit.
std::string serialize_resolved(const std::map<std::string, std::string>& resolved);

} // namespace sfda::cli
