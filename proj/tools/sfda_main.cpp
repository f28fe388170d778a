#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "sfda/commands.hpp"
#include "sfda/errors.hpp"

namespace {

constexpr const char* kFooter = R"(File formats:
  dataset.txt         columnar text; header then `split label x0 x1 ...` rows
  *.ckpt              versioned text checkpoints (arrays at 17 significant digits)
  report_seed<k>.csv  columns: epoch,train_acc,test_acc,mean_loss,selected_ratio,
                      train_class_recall_0..K-1
  ablation.csv        columns: label,use_cr,use_sampling,use_class_weights,
                      use_proto_gate,seed,train_acc,test_acc,drop,drop_rel,
                      min_train_class_recall,train_class_recall_0..K-1
  sweep.csv           columns: axis,value,seed,train_acc,test_acc,drop,drop_rel,
                      min_train_class_recall
  manifest.json       tool version, resolved config, input paths, dataset hash,
                      seed list, emitted files; re-running a command with the
                      emitted resolved.cfg and the same inputs reproduces every
                      numeric output bit-for-bit on the same platform

Exit codes: 0 success, 2 config error, 3 missing/corrupt input, 4 numeric failure.
)";

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"sfda: a source-free domain adaptation laboratory on synthetic domain shifts"};
    app.footer(kFooter);
    app.require_subcommand(1);

    std::string config, data, model, out, seeds_csv, sweep_spec;

    auto add_config = [&](CLI::App* sub) {
        sub->add_option("--config", config, "experiment config file")->required();
    };
    auto add_out = [&](CLI::App* sub) {
        sub->add_option("--out", out, "output directory")->required();
    };
    auto add_seeds = [&](CLI::App* sub) {
        sub->add_option("--seeds", seeds_csv, "comma-separated seed list (default: config seed)");
    };

    CLI::App* gen = app.add_subcommand("gen", "generate a source/target dataset pair");
    add_config(gen);
    add_out(gen);

    CLI::App* pretrain = app.add_subcommand("pretrain", "train the source model");
    add_config(pretrain);
    pretrain->add_option("--data", data, "dataset file")->required();
    add_out(pretrain);
    add_seeds(pretrain);

    CLI::App* adapt = app.add_subcommand("adapt", "adapt a source checkpoint to the target domain");
    add_config(adapt);
    adapt->add_option("--data", data, "dataset file")->required();
    adapt->add_option("--model", model, "checkpoint file, or directory with model_seed<k>.ckpt")->required();
    add_out(adapt);
    add_seeds(adapt);

    CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on target train/test splits");
    eval->add_option("--data", data, "dataset file")->required();
    eval->add_option("--model", model, "checkpoint file")->required();
    add_out(eval);

    CLI::App* ablate = app.add_subcommand("ablate", "run the 6-row module ablation table");
    add_config(ablate);
    ablate->add_option("--data", data, "dataset file")->required();
    ablate->add_option("--model", model, "checkpoint file, or directory with model_seed<k>.ckpt")->required();
    add_out(ablate);
    add_seeds(ablate);

    CLI::App* sweep = app.add_subcommand("sweep", "sweep one config axis");
    add_config(sweep);
    sweep->add_option("--data", data, "dataset file")->required();
    sweep->add_option("--model", model, "checkpoint file, or directory with model_seed<k>.ckpt")->required();
    add_out(sweep);
    add_seeds(sweep);
    sweep->add_option("--sweep", sweep_spec,
                      "axis spec key=v1,v2,... with key one of selection.threshold, "
                      "baseline.div_weight, calib.tau, seed")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : sfda::cli::kExitConfig;
    }

    std::vector<uint64_t> seeds;
    try {
        seeds = sfda::cli::parse_seed_list(seeds_csv);
    } catch (const sfda::ConfigError& e) {
        std::cerr << "sfda: " << e.what() << "\n";
        return sfda::cli::kExitConfig;
    }

    if (gen->parsed()) return sfda::cli::cmd_gen(config, out);
    if (pretrain->parsed()) return sfda::cli::cmd_pretrain(config, data, out, seeds);
    if (adapt->parsed()) return sfda::cli::cmd_adapt(config, data, model, out, seeds);
    if (eval->parsed()) return sfda::cli::cmd_eval(data, model, out);
    if (ablate->parsed()) return sfda::cli::cmd_ablate(config, data, model, out, seeds);
    if (sweep->parsed()) return sfda::cli::cmd_sweep(config, data, model, out, sweep_spec, seeds);
    return sfda::cli::kExitConfig;
}
