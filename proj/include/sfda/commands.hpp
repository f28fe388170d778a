#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sfda::cli {

inline constexpr const char* kToolVersion = "sfda 1.0.0";

// Exit codes shared by every command:
//   0 success, 2 config error, 3 missing/corrupt input, 4 numeric failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitInput = 3;
inline constexpr int kExitNumeric = 4;

int cmd_gen(const std::string& config_path, const std::string& out_dir);

int cmd_pretrain(const std::string& config_path, const std::string& data_path,
                 const std::string& out_dir, const std::vector<uint64_t>& seeds);

int cmd_adapt(const std::string& config_path, const std::string& data_path,
              const std::string& model_path, const std::string& out_dir,
              const std::vector<uint64_t>& seeds);

int cmd_eval(const std::string& data_path, const std::string& model_path, const std::string& out_dir);

int cmd_ablate(const std::string& config_path, const std::string& data_path,
               const std::string& model_path, const std::string& out_dir,
               const std::vector<uint64_t>& seeds);

// axis_spec is "key=v1,v2,..." with key one of selection.threshold,
// baseline.div_weight, calib.tau, seed.
int cmd_sweep(const std::string& config_path, const std::string& data_path,
              const std::string& model_path, const std::string& out_dir, const std::string& axis_spec,
              const std::vector<uint64_t>& seeds);

std::vector<uint64_t> parse_seed_list(const std::string& csv);

} // namespace sfda::cli
