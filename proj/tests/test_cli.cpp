#include <gtest/gtest.h>

#include <fstream>
#include <map>
#include <sstream>

#include "fixtures.hpp"
#include "screeval/cli.hpp"

using namespace screeval;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> tree(const std::filesystem::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file()) out[std::filesystem::relative(entry.path(), dir).string()] = slurp(entry.path());
  }
  return out;
}

// Writes a generated cohort under `name` and returns a config reading it.
RunConfig config_for(const std::string& name, const CohortBlueprint& bp) {
  const auto root = fixture::scratch_dir(name);
  write_cohort(generate_cohort(bp).cohort, root / "in");
  RunConfig cfg;
  apply_setting(cfg, "in-dir", (root / "in").string());
  cfg.out_dir = root / "out";
  cfg.bootstrap_resamples = 100;
  cfg.threads = 2;
  return cfg;
}

CohortBlueprint small_blueprint() {
  CohortBlueprint bp;
  bp.seed = 21;
  bp.n_patients = 1500;
  bp.label_weights[OutcomeLabel::ScreenDetectedCancer] = 20000;
  bp.label_weights[OutcomeLabel::IntervalCancer] = 3000;
  bp.label_weights[OutcomeLabel::Excluded] = 2000;
  return bp;
}

}  // namespace

TEST(CliSettings, ApplySettingAcceptsBothSpellings) {
  RunConfig cfg;
  apply_setting(cfg, "threshold", "0.25");
  apply_setting(cfg, "bootstrap-resamples", "300");
  apply_setting(cfg, "bootstrap_resamples", "400");
  apply_setting(cfg, "interval-cancer-days", "200");
  apply_setting(cfg, "significance", "true");
  apply_setting(cfg, "axes", "race, density");
  apply_setting(cfg, "seed", "9");
  EXPECT_DOUBLE_EQ(cfg.threshold, 0.25);
  EXPECT_EQ(cfg.bootstrap_resamples, 400u);
  EXPECT_EQ(cfg.windows.interval_cancer_days, 200);
  EXPECT_TRUE(cfg.significance);
  EXPECT_EQ(cfg.axes, (std::vector<Axis>{Axis::Race, Axis::Density}));
  EXPECT_EQ(cfg.seed, 9u);
  EXPECT_TRUE(cfg.seed_set);
}

TEST(CliSettings, BadSettings) {
  RunConfig cfg;
  auto code_of = [&](const char* key, const char* value) {
    try {
      apply_setting(cfg, key, value);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::Internal;
  };
  EXPECT_EQ(code_of("colour", "red"), ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of("threshold", "high"), ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of("threads", "-2"), ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of("significance", "maybe"), ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of("axes", "race,shoe_size"), ErrorCode::UnknownAxis);
  EXPECT_EQ(exit_code_for(ErrorCode::UnknownAxis), kExitInput);

  RunConfig bad;
  bad.threshold = 1.5;
  EXPECT_THROW(bad.validate(), Error);
  bad.threshold = 0.1;
  bad.windows.negative_followup_min_days = 500;
  EXPECT_THROW(bad.validate(), Error);
}

TEST(CliSettings, ParseAxes) {
  EXPECT_EQ(parse_axes("all"), default_axes());
  EXPECT_EQ(parse_axes("age,cancer_type"), (std::vector<Axis>{Axis::Age, Axis::CancerType}));
  EXPECT_TRUE(parse_axes("").empty());
  EXPECT_THROW(parse_axes("age,,nope"), Error);
}

TEST(CliSettings, ConfigFileThenFlags) {
  std::istringstream text(
      "# comment\n"
      "threshold = 0.3   # trailing\n"
      "\n"
      "out_dir = somewhere\n"
      "histogram-bins=20\n");
  RunConfig cfg;
  for (const auto& [k, v] : read_config_text(text, "inline")) apply_setting(cfg, k, v);
  EXPECT_DOUBLE_EQ(cfg.threshold, 0.3);
  EXPECT_EQ(cfg.out_dir, "somewhere");
  EXPECT_EQ(cfg.histogram_bins, 20u);
  apply_setting(cfg, "threshold", "0.4");
  EXPECT_DOUBLE_EQ(cfg.threshold, 0.4);

  std::istringstream broken("threshold 0.3\n");
  try {
    read_config_text(broken, "broken.conf");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidConfig);
    EXPECT_NE(std::string(e.what()).find("broken.conf:1"), std::string::npos);
  }

  const auto dir = fixture::scratch_dir("cli_conf");
  std::ofstream(dir / "run.conf") << "seed = 5\nthreads = 3\n";
  RunConfig from_file;
  apply_config_file(from_file, dir / "run.conf");
  EXPECT_EQ(from_file.seed, 5u);
  EXPECT_EQ(from_file.threads, 3u);
  EXPECT_THROW(apply_config_file(from_file, dir / "missing.conf"), Error);
}

TEST(CliCommands, MissingColumnIsAnInputError) {
  RunConfig cfg = config_for("cli_header", small_blueprint());
  std::ofstream(cfg.scores, std::ios::trunc) << "exam_id,image_id\nE1,I1\n";
  std::ostringstream out;
  const auto r = cmd_evaluate(cfg, out);
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.message.find("malignancy_score"), std::string::npos) << r.message;
  EXPECT_NE(slurp(cfg.out_dir / "errors.txt").find("malignancy_score"), std::string::npos);
}

TEST(CliCommands, MissingInputsAndFiles) {
  RunConfig cfg;
  cfg.out_dir = fixture::scratch_dir("cli_missing");
  std::ostringstream out;
  EXPECT_EQ(cmd_validate(cfg, out).exit_code, 2);
  cfg.exams = cfg.findings = cfg.scores = cfg.pathology = cfg.out_dir / "nothing.csv";
  const auto r = cmd_label(cfg, out);
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_TRUE(std::filesystem::exists(cfg.out_dir / "errors.txt"));
}

TEST(CliCommands, NoBinaryClassExamsIsARuntimeError) {
  CohortBlueprint bp;
  bp.seed = 4;
  bp.n_patients = 50;
  for (auto& [label, w] : bp.label_weights) w = label == OutcomeLabel::Excluded ? 1.0 : 0.0;
  RunConfig cfg = config_for("cli_empty", bp);
  std::ostringstream out;
  const auto r = cmd_evaluate(cfg, out);
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.message.find("no binary-class exams"), std::string::npos) << r.message;
  EXPECT_TRUE(std::filesystem::exists(cfg.out_dir / "errors.txt"));
}

TEST(CliCommands, ThresholdZeroRecallsEverything) {
  RunConfig cfg = config_for("cli_zero", small_blueprint());
  cfg.threshold = 0.0;
  cfg.axes = {Axis::Race};
  std::ostringstream out;
  const auto r = cmd_evaluate(cfg, out);
  ASSERT_EQ(r.exit_code, 0) << r.message;
  EXPECT_NE(out.str().find("recall 1.00"), std::string::npos) << out.str();
  EXPECT_NE(out.str().find("fnr 0.00"), std::string::npos) << out.str();
  EXPECT_FALSE(std::filesystem::exists(cfg.out_dir / "errors.txt"));
}

TEST(CliCommands, EvaluateIsIdempotent) {
  RunConfig cfg = config_for("cli_idem", small_blueprint());
  cfg.significance = true;
  cfg.permutations = 200;
  cfg.axes = {Axis::Race, Axis::CancerType, Axis::FindingType};
  std::ostringstream first, second;
  ASSERT_EQ(cmd_evaluate(cfg, first).exit_code, 0);
  const auto a = tree(cfg.out_dir);
  ASSERT_EQ(cmd_evaluate(cfg, second).exit_code, 0);
  const auto b = tree(cfg.out_dir);
  EXPECT_EQ(first.str(), second.str());
  ASSERT_EQ(a.size(), b.size());
  for (const auto& [name, bytes] : a) EXPECT_EQ(bytes, b.at(name)) << name;
  EXPECT_TRUE(a.count("table_metrics.csv"));
  EXPECT_TRUE(a.count("significance.csv"));
  EXPECT_TRUE(a.count("labels.csv"));
}

TEST(CliCommands, ValidateReportsCorruption) {
  CohortBlueprint bp = small_blueprint();
  const auto root = fixture::scratch_dir("cli_validate");
  write_cohort(corrupt_cohort(generate_cohort(bp).cohort, 0.05, 8), root / "in");
  RunConfig cfg;
  apply_setting(cfg, "in_dir", (root / "in").string());
  cfg.out_dir = root / "out";
  std::ostringstream out;
  ASSERT_EQ(cmd_validate(cfg, out).exit_code, 0);
  EXPECT_NE(out.str().find("validation issues"), std::string::npos);
  EXPECT_EQ(out.str().find("validation issues 0,"), std::string::npos);
  for (const auto& entry : std::filesystem::directory_iterator(cfg.out_dir)) {
    EXPECT_GT(std::filesystem::file_size(entry.path()), 0u) << entry.path();
  }
}

TEST(CliCommands, LabelWritesCounts) {
  RunConfig cfg = config_for("cli_label", small_blueprint());
  std::ostringstream out;
  ASSERT_EQ(cmd_label(cfg, out).exit_code, 0);
  EXPECT_NE(out.str().find("SCREEN_NEGATIVE"), std::string::npos);
  EXPECT_TRUE(std::filesystem::exists(cfg.out_dir / "label_log.txt"));
}

TEST(CliCommands, SynthWritesLedgerAndRespectsOverrides) {
  const auto root = fixture::scratch_dir("cli_synth");
  std::ofstream(root / "bp.json") << R"({"n_patients": 40, "seed": 3})";
  RunConfig cfg;
  cfg.blueprint = root / "bp.json";
  cfg.out_dir = root / "a";
  std::ostringstream out;
  ASSERT_EQ(cmd_synth(cfg, out).exit_code, 0) << out.str();
  EXPECT_TRUE(std::filesystem::exists(cfg.out_dir / "ledger.csv"));
  EXPECT_NE(out.str().find("40 screening"), std::string::npos) << out.str();

  apply_setting(cfg, "n-patients", "10");
  apply_setting(cfg, "seed", "3");
  cfg.out_dir = root / "b";
  std::ostringstream again;
  ASSERT_EQ(cmd_synth(cfg, again).exit_code, 0);
  EXPECT_NE(again.str().find("10 screening"), std::string::npos) << again.str();

  cfg.blueprint.clear();
  cfg.preset = "mystery";
  EXPECT_EQ(cmd_synth(cfg, again).exit_code, 2);

  std::ofstream(root / "bad.json") << R"({"windows": {"interval_cancer_days": 0}})";
  cfg.preset.clear();
  cfg.blueprint = root / "bad.json";
  EXPECT_EQ(cmd_synth(cfg, again).exit_code, 2);
}
