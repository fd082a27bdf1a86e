// Command-line driver: generate -> extract -> tss -> train -> ensemble ->
// compare, all steered by one key=value config file (flags override keys).

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hwad/errors.hpp"
#include "hwad/experiment.hpp"

namespace {

struct GlobalOpts {
  std::string config_path;
  std::vector<std::string> overrides;  // key=value
  std::string output_dir;
  std::string seed;
};

hwad::cli::ExperimentConfig resolve_config(const GlobalOpts& opts) {
  hwad::cli::ExperimentConfig cfg;
  if (!opts.config_path.empty()) {
    cfg = hwad::cli::load_config_file(opts.config_path);
  }
  for (const auto& kv : opts.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw hwad::ConfigError("--set expects key=value, got '" + kv + "'");
    }
    hwad::cli::apply_override(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!opts.output_dir.empty()) hwad::cli::apply_override(cfg, "output_dir", opts.output_dir);
  if (!opts.seed.empty()) hwad::cli::apply_override(cfg, "seed_base", opts.seed);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"handwriting-based cohort study pipeline"};
  app.require_subcommand(1);

  GlobalOpts opts;
  app.add_option("-c,--config", opts.config_path, "experiment config file");
  app.add_option("--set", opts.overrides, "override a config key (key=value)");
  app.add_option("-o,--output", opts.output_dir, "output directory override");
  app.add_option("--seed", opts.seed, "seed_base override");

  app.add_subcommand("generate", "write a synthetic cohort (subjects.csv, recordings.csv)");
  app.add_subcommand("extract", "extract stroke features (features.csv)");
  app.add_subcommand("tss", "temporal-stability surface over the (ws, stride) grid");

  std::string model;
  int ws = 0, stride = 0;
  auto* train = app.add_subcommand("train", "train + cross-validate one model cell");
  train->add_option("--model", model, "rnn | lstm | gru (default: config model.cell)");
  train->add_option("--ws", ws, "window size (default: whole grid)");
  train->add_option("--stride", stride, "stride (default: whole grid)");

  auto* evaluate = app.add_subcommand("evaluate", "re-evaluate stored checkpoints");
  evaluate->add_option("--model", model, "model name");
  evaluate->add_option("--ws", ws, "window size")->required();
  evaluate->add_option("--stride", stride, "stride")->required();

  std::string strategy;
  auto* ensemble = app.add_subcommand("ensemble", "stroke-level ensemble baselines");
  ensemble->add_option("--strategy", strategy, "mv | wmv | ranking | stacking | all");

  std::vector<std::string> compare_files;
  auto* compare = app.add_subcommand("compare", "merge result files into one table");
  compare->add_option("files", compare_files, "results JSON files (default: output results dir)");

  std::string report_file;
  auto* report = app.add_subcommand("report", "pretty-print one results JSON");
  report->add_option("file", report_file, "results JSON file")->required();

  auto* schema = app.add_subcommand("config-schema", "print the config file schema");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (schema->parsed()) {
      std::cout << hwad::cli::config_schema_help();
      return 0;
    }
    const hwad::cli::ExperimentConfig cfg = resolve_config(opts);
    if (app.get_subcommand("generate")->parsed()) {
      hwad::cli::cmd_generate(cfg);
    } else if (app.get_subcommand("extract")->parsed()) {
      hwad::cli::cmd_extract(cfg);
    } else if (app.get_subcommand("tss")->parsed()) {
      hwad::cli::cmd_tss(cfg);
    } else if (train->parsed()) {
      hwad::cli::cmd_train(cfg, model, ws, stride);
    } else if (evaluate->parsed()) {
      hwad::cli::cmd_evaluate(cfg, model, ws, stride);
    } else if (ensemble->parsed()) {
      hwad::cli::cmd_ensemble(cfg, strategy);
    } else if (compare->parsed()) {
      hwad::cli::cmd_compare(cfg, compare_files);
    } else if (report->parsed()) {
      hwad::cli::cmd_report(report_file);
    }
  } catch (const hwad::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const hwad::NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const hwad::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
