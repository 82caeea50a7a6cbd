#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "screeval/cli.hpp"

namespace {

// Flags shared by every subcommand. Values are kept as text and applied on
// top of the config file.
const char* const kFlags[][2] = {
    {"exams", "exams table (CSV)"},
    {"findings", "findings table (CSV)"},
    {"scores", "image scores table (CSV)"},
    {"pathology", "pathology table (CSV)"},
    {"in-dir", "directory holding exams.csv, findings.csv, scores.csv, pathology.csv"},
    {"out-dir", "output directory"},
    {"threshold", "operating point in [0,1] (default 0.10)"},
    {"seed", "top-level random seed"},
    {"threads", "worker threads (default: all cores)"},
    {"axes", "comma-separated stratification axes, or 'all'"},
    {"bootstrap-resamples", "bootstrap resamples per subgroup (default 2000)"},
    {"permutations", "permutations per AUROC comparison (default 10000)"},
    {"significance", "write pairwise AUROC comparisons (true/false)"},
    {"histogram-bins", "histogram bins over [0,1] (default 50)"},
    {"diagnostic-followup-days", "recall diagnostic window in days (default 183)"},
    {"interval-cancer-days", "interval cancer window in days (default 365)"},
    {"negative-followup-min-days", "earliest negative follow-up day (default 0)"},
    {"negative-followup-max-days", "latest negative follow-up day (default 365)"},
    {"blueprint", "synth: blueprint JSON file"},
    {"preset", "synth: 'default' or 'paper-replica'"},
    {"n-patients", "synth: override the blueprint patient count"},
};

struct Flags {
  std::string config;
  std::map<std::string, std::string> values;
};

void add_flags(CLI::App* cmd, Flags& flags) {
  cmd->add_option("--config", flags.config, "key = value config file; flags override it");
  for (const auto& [name, help] : kFlags) {
    cmd->add_option(std::string("--") + name, flags.values[name], help);
  }
}

screeval::RunConfig resolve(const CLI::App* cmd, const Flags& flags) {
  screeval::RunConfig cfg;
  if (!flags.config.empty()) screeval::apply_config_file(cfg, flags.config);
  for (const auto& [name, value] : flags.values) {
    if (cmd->get_option(std::string("--") + name)->count() > 0) screeval::apply_setting(cfg, name, value);
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"screeval: label screening exams and evaluate a malignancy model by subgroup"};
  app.require_subcommand(1);

  Flags flags;
  auto* validate = app.add_subcommand("validate", "parse and validate the input tables");
  auto* label = app.add_subcommand("label", "assign outcome labels to screening exams");
  auto* evaluate = app.add_subcommand("evaluate", "label, evaluate by subgroup and write the report");
  auto* synth = app.add_subcommand("synth", "generate a synthetic cohort with its ground-truth ledger");
  for (auto* cmd : {validate, label, evaluate, synth}) add_flags(cmd, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : screeval::kExitInput;
  }

  screeval::RunConfig cfg;
  const CLI::App* chosen = app.get_subcommands().front();
  try {
    cfg = resolve(chosen, flags);
  } catch (const screeval::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return screeval::exit_code_for(e.code());
  }

  screeval::CommandResult result;
  if (chosen == validate) {
    result = screeval::cmd_validate(cfg);
  } else if (chosen == label) {
    result = screeval::cmd_label(cfg);
  } else if (chosen == evaluate) {
    result = screeval::cmd_evaluate(cfg);
  } else {
    result = screeval::cmd_synth(cfg);
  }
  if (result.exit_code != 0) std::cerr << "error: " << result.message << "\n";
  return result.exit_code;
}
