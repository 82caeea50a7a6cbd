#pragma once

// Pipeline commands behind the `screeval` binary: validate, label, evaluate,
// synth. Settings come from an optional key = value config file, overridden
// by command-line flags.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "screeval/ingest.hpp"
#include "screeval/labeler.hpp"
#include "screeval/metrics.hpp"
#include "screeval/parallel.hpp"
#include "screeval/report.hpp"
#include "screeval/stratify.hpp"
#include "screeval/synth.hpp"

namespace screeval {

enum ExitCode : int { kExitOk = 0, kExitRuntime = 1, kExitInput = 2 };

inline int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::FileNotFound:
    case ErrorCode::HeaderMismatch:
    case ErrorCode::UnknownAxis:
    case ErrorCode::InfeasibleBlueprint:
    case ErrorCode::InvalidConfig: return kExitInput;
    default: return kExitRuntime;
  }
}

inline std::vector<Axis> default_axes() {
  return {Axis::Race,        Axis::Ethnicity,        Axis::Age,
          Axis::Density,     Axis::CancerType,       Axis::FindingType,
          Axis::PathologySubtype, Axis::BiradsDescriptor};
}

struct RunConfig {
  std::filesystem::path exams, findings, scores, pathology;
  std::filesystem::path out_dir = "screeval_out";
  double threshold = 0.10;
  uint64_t seed = 0;
  bool seed_set = false;
  unsigned threads = default_threads();
  TemporalWindows windows;
  size_t bootstrap_resamples = 2000;
  size_t permutations = 10000;
  bool significance = false;
  std::vector<Axis> axes = default_axes();
  size_t histogram_bins = 50;
  std::filesystem::path blueprint;
  std::string preset;
  std::optional<uint64_t> n_patients;

  CohortPaths inputs() const { return {exams, findings, scores, pathology}; }

  BootstrapConfig bootstrap() const {
    BootstrapConfig b;
    b.n_resamples = bootstrap_resamples;
    b.seed = derive_seed(seed, hash_key("bootstrap"));
    b.threads = threads;
    return b;
  }

  PermutationConfig permutation() const {
    PermutationConfig p;
    p.n_permutations = permutations;
    p.seed = derive_seed(seed, hash_key("permutation"));
    p.threads = threads;
    return p;
  }

  void validate() const {
    if (!(threshold >= 0.0 && threshold <= 1.0)) {
      throw Error(ErrorCode::InvalidConfig, "threshold must lie in [0,1]");
    }
    if (!windows.valid()) throw Error(ErrorCode::InvalidConfig, "invalid temporal windows");
    if (bootstrap_resamples < 1) throw Error(ErrorCode::InvalidConfig, "bootstrap_resamples must be >= 1");
    if (histogram_bins < 1) throw Error(ErrorCode::InvalidConfig, "histogram_bins must be >= 1");
  }
};

inline std::vector<Axis> parse_axes(std::string_view text) {
  std::vector<Axis> out;
  size_t start = 0;
  while (start <= text.size()) {
    size_t end = text.find(',', start);
    if (end == std::string_view::npos) end = text.size();
    auto item = text.substr(start, end - start);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (item == "all") {
      for (auto a : default_axes()) out.push_back(a);
    } else if (!item.empty()) {
      out.push_back(parse_axis(item));
    }
    start = end + 1;
  }
  return out;
}

// Applies one setting by name. Names match the long flags with '-' or '_'.
inline void apply_setting(RunConfig& cfg, std::string key, const std::string& value) {
  std::replace(key.begin(), key.end(), '-', '_');
  auto number = [&](auto& slot) {
    using T = std::remove_reference_t<decltype(slot)>;
    if constexpr (std::is_floating_point_v<T>) {
      auto v = parse_double(value);
      if (!v) throw Error(ErrorCode::InvalidConfig, key + ": expected a number, got '" + value + "'");
      slot = *v;
    } else {
      auto v = parse_int<T>(value);
      if (!v) throw Error(ErrorCode::InvalidConfig, key + ": expected an integer, got '" + value + "'");
      slot = *v;
    }
  };
  auto boolean = [&](bool& slot) {
    if (value == "true" || value == "1") {
      slot = true;
    } else if (value == "false" || value == "0") {
      slot = false;
    } else {
      throw Error(ErrorCode::InvalidConfig, key + ": expected true or false, got '" + value + "'");
    }
  };

  if (key == "exams") {
    cfg.exams = value;
  } else if (key == "findings") {
    cfg.findings = value;
  } else if (key == "scores") {
    cfg.scores = value;
  } else if (key == "pathology") {
    cfg.pathology = value;
  } else if (key == "in_dir") {
    const auto paths = CohortPaths::in_directory(value);
    cfg.exams = paths.exams;
    cfg.findings = paths.findings;
    cfg.scores = paths.scores;
    cfg.pathology = paths.pathology;
  } else if (key == "out_dir") {
    cfg.out_dir = value;
  } else if (key == "threshold") {
    number(cfg.threshold);
  } else if (key == "seed") {
    number(cfg.seed);
    cfg.seed_set = true;
  } else if (key == "threads") {
    number(cfg.threads);
    if (cfg.threads == 0) cfg.threads = default_threads();
  } else if (key == "bootstrap_resamples") {
    number(cfg.bootstrap_resamples);
  } else if (key == "permutations") {
    number(cfg.permutations);
  } else if (key == "significance") {
    boolean(cfg.significance);
  } else if (key == "axes") {
    cfg.axes = parse_axes(value);
  } else if (key == "histogram_bins") {
    number(cfg.histogram_bins);
  } else if (key == "diagnostic_followup_days") {
    number(cfg.windows.diagnostic_followup_days);
  } else if (key == "interval_cancer_days") {
    number(cfg.windows.interval_cancer_days);
  } else if (key == "negative_followup_min_days") {
    number(cfg.windows.negative_followup_min_days);
  } else if (key == "negative_followup_max_days") {
    number(cfg.windows.negative_followup_max_days);
  } else if (key == "blueprint") {
    cfg.blueprint = value;
  } else if (key == "preset") {
    cfg.preset = value;
  } else if (key == "n_patients") {
    uint64_t n = 0;
    number(n);
    cfg.n_patients = n;
  } else {
    throw Error(ErrorCode::InvalidConfig, "unknown setting '" + key + "'");
  }
}

// `key = value` lines; '#' starts a comment.
inline std::vector<std::pair<std::string, std::string>> read_config_text(std::istream& in,
                                                                         const std::string& source) {
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  size_t lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::InvalidConfig, source + ":" + std::to_string(lineno) + ": expected key = value");
    }
    out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return out;
}

inline void apply_config_file(RunConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::FileNotFound, "cannot open config '" + path.string() + "'");
  for (const auto& [k, v] : read_config_text(in, path.string())) apply_setting(cfg, k, v);
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

struct CommandResult {
  int exit_code = kExitOk;
  std::string message;
};

namespace detail {

inline void require_inputs(const RunConfig& cfg) {
  const std::pair<const char*, const std::filesystem::path*> inputs[] = {
      {"exams", &cfg.exams}, {"findings", &cfg.findings}, {"scores", &cfg.scores}, {"pathology", &cfg.pathology}};
  for (const auto& [name, path] : inputs) {
    if (path->empty()) throw Error(ErrorCode::InvalidConfig, std::string("missing --") + name + " input");
  }
}

inline void write_error_file(const std::filesystem::path& dir, const std::string& message) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) return;
  std::ofstream out(dir / "errors.txt", std::ios::binary | std::ios::trunc);
  out << message << '\n';
}

inline void remove_error_file(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::remove(dir / "errors.txt", ec);
}

template <typename Fn>
CommandResult guarded(const RunConfig& cfg, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    write_error_file(cfg.out_dir, e.what());
    return {exit_code_for(e.code()), e.what()};
  } catch (const std::exception& e) {
    write_error_file(cfg.out_dir, e.what());
    return {kExitRuntime, e.what()};
  }
}

inline void write_validation(const RawCohort& raw, const ValidationReport& report,
                             const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_table(validation_table(report), dir);
  write_table(rejects_table(raw), dir);
}

}  // namespace detail

inline CommandResult cmd_validate(const RunConfig& cfg, std::ostream& out = std::cout) {
  return detail::guarded(cfg, [&]() -> CommandResult {
    cfg.validate();
    detail::require_inputs(cfg);
    const RawCohort raw = parse_cohort(cfg.inputs());
    const ValidationReport report = validate_cohort(raw);
    detail::write_validation(raw, report, cfg.out_dir);
    detail::remove_error_file(cfg.out_dir);
    out << "exams " << raw.exams.size() << ", findings " << raw.findings.size() << ", pathology "
        << raw.pathology.size() << ", scores " << raw.scores.size() << ", rejected rows " << raw.rejects.size()
        << "\n";
    out << "validation issues " << report.issues.size() << ", invalid exams " << report.invalid_exams.size()
        << ", unscored screening exams " << report.unscored_exams.size() << "\n";
    return {};
  });
}

struct PipelineState {
  RawCohort raw;
  ValidationReport validation;
  LabeledCohort labeled;
};

inline PipelineState run_labeling(const RunConfig& cfg) {
  cfg.validate();
  detail::require_inputs(cfg);
  PipelineState s;
  s.raw = parse_cohort(cfg.inputs());
  s.validation = validate_cohort(s.raw);
  s.labeled = label_cohort(s.raw, s.validation, cfg.windows, cfg.threads);
  return s;
}

inline void write_labels(const PipelineState& s, const std::filesystem::path& dir) {
  detail::write_validation(s.raw, s.validation, dir);
  write_table(labels_table(s.labeled), dir);
  write_table(label_counts_table(s.labeled), dir);
  std::string log;
  for (const auto& line : s.labeled.log) log += line + "\n";
  write_text(dir / "label_log.txt", log);
}

inline CommandResult cmd_label(const RunConfig& cfg, std::ostream& out = std::cout) {
  return detail::guarded(cfg, [&]() -> CommandResult {
    const PipelineState s = run_labeling(cfg);
    write_labels(s, cfg.out_dir);
    detail::remove_error_file(cfg.out_dir);
    for (const auto& [label, n] : s.labeled.label_counts) out << to_token(label) << " " << n << "\n";
    return {};
  });
}

// Pairwise AUROC differences between the evaluable groups of each axis.
inline Table significance_table(const LabeledCohort& cohort, std::span<const Axis> axes,
                                const PermutationConfig& cfg) {
  Table t{"significance", {"axis", "group_a", "group_b", "auc_a", "auc_b", "p_value"}, {}};
  for (Axis axis : axes) {
    std::vector<std::pair<Subgroup, std::array<std::vector<double>, 2>>> groups;
    for (auto& g : derive_subgroups(cohort, axis)) {
      std::array<std::vector<double>, 2> split;
      for (size_t i : g.members) (cohort.exams[i].positive() ? split[0] : split[1]).push_back(cohort.exams[i].score());
      if (split[0].empty() || split[1].empty()) continue;
      groups.emplace_back(std::move(g), std::move(split));
    }
    for (size_t a = 0; a < groups.size(); ++a) {
      for (size_t b = a + 1; b < groups.size(); ++b) {
        PermutationConfig local = cfg;
        local.seed = derive_seed(cfg.seed, hash_key(groups[a].first.spec.key() + "|" + groups[b].first.spec.key()));
        const auto& [pa, na] = groups[a].second;
        const auto& [pb, nb] = groups[b].second;
        t.rows.push_back({std::string(to_token(axis)), groups[a].first.spec.selector, groups[b].first.spec.selector,
                          auroc(pa, na), auroc(pb, nb), compare_auc(pa, na, pb, nb, local)});
      }
    }
  }
  return t;
}

inline CommandResult cmd_evaluate(const RunConfig& cfg, std::ostream& out = std::cout) {
  return detail::guarded(cfg, [&]() -> CommandResult {
    const PipelineState s = run_labeling(cfg);
    write_labels(s, cfg.out_dir);
    const auto results = evaluate_axes(s.labeled, cfg.axes, cfg.bootstrap(), cfg.threshold);
    ReportBundle report = build_report(s.labeled, results, cfg.threshold, cfg.histogram_bins);
    if (cfg.significance) report.tables.push_back(significance_table(s.labeled, cfg.axes, cfg.permutation()));
    write_report(report, cfg.out_dir);
    const auto overall = std::find_if(results.begin(), results.end(),
                                      [](const SubgroupResult& r) { return r.spec.axis == Axis::Overall; });
    if (overall == results.end() || overall->n_total == 0) {
      detail::write_error_file(cfg.out_dir, "no binary-class exams");
      return {kExitRuntime, "no binary-class exams"};
    }
    detail::remove_error_file(cfg.out_dir);
    out << render_metrics_row(*overall) << "\n";
    return {};
  });
}

inline CommandResult cmd_synth(const RunConfig& cfg, std::ostream& out = std::cout) {
  return detail::guarded(cfg, [&]() -> CommandResult {
    GeneratedCohort generated;
    if (cfg.preset == "paper-replica") {
      generated = paper_replica_cohort(cfg.seed);
    } else {
      CohortBlueprint bp;
      if (!cfg.blueprint.empty()) {
        bp = load_blueprint(cfg.blueprint);
      } else if (!cfg.preset.empty() && cfg.preset != "default") {
        throw Error(ErrorCode::InvalidConfig, "unknown preset '" + cfg.preset + "'");
      }
      if (cfg.seed_set) bp.seed = cfg.seed;
      if (cfg.n_patients) bp.n_patients = *cfg.n_patients;
      generated = generate_cohort(bp);
    }
    std::filesystem::create_directories(cfg.out_dir);
    write_generated(generated, cfg.out_dir);
    detail::remove_error_file(cfg.out_dir);
    out << "wrote " << generated.cohort.exams.size() << " exams (" << generated.ledger.size()
        << " screening) to " << cfg.out_dir.string() << "\n";
    return {};
  });
}

}  // namespace screeval
