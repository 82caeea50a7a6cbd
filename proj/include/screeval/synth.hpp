#pragma once

// Synthetic cohorts with known ground truth.
//
// Every screening exam starts an episode whose follow-up exams and pathology
// are laid out so linkage and labeling reproduce the intended label. Episodes
// of one patient are spaced beyond every temporal window, so they never
// interact.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "screeval/ingest.hpp"
#include "screeval/labeler.hpp"
#include "screeval/linkage.hpp"
#include "screeval/rng.hpp"
#include "screeval/stratify.hpp"

namespace screeval {

// ---------------------------------------------------------------------------
// Score model
// ---------------------------------------------------------------------------

struct ScoreComponent {
  enum class Kind { Beta, Point };
  double weight = 1.0;
  Kind kind = Kind::Beta;
  double a = 1.0, b = 1.0;   // Beta shape
  double lo = 0.0, hi = 1.0;  // Beta support after scaling
  double value = 0.0;         // Point mass location
};

using ScoreMixture = std::vector<ScoreComponent>;
using ScoreModel = std::map<OutcomeLabel, ScoreMixture>;

inline void check_mixture(const ScoreMixture& m, std::string_view name) {
  auto fail = [&](const std::string& why) {
    throw Error(ErrorCode::InvalidConfig, "score model for " + std::string(name) + ": " + why);
  };
  if (m.empty()) fail("no components");
  double total = 0.0;
  for (const auto& c : m) {
    if (!(c.weight >= 0.0)) fail("negative weight");
    total += c.weight;
    if (c.kind == ScoreComponent::Kind::Point) {
      if (!(c.value >= 0.0 && c.value <= 1.0)) fail("point mass outside [0,1]");
    } else {
      if (!(c.a > 0.0 && c.b > 0.0)) fail("beta shape must be positive");
      if (!(c.lo >= 0.0 && c.hi <= 1.0 && c.lo <= c.hi)) fail("support outside [0,1]");
    }
  }
  if (!(total > 0.0)) fail("weights sum to zero");
}

inline double sample_score(const ScoreMixture& mixture, Rng& rng) {
  double total = 0.0;
  for (const auto& c : mixture) total += c.weight;
  double pick = rng.uniform() * total;
  const ScoreComponent* chosen = &mixture.back();
  for (const auto& c : mixture) {
    if (pick < c.weight) {
      chosen = &c;
      break;
    }
    pick -= c.weight;
  }
  if (chosen->kind == ScoreComponent::Kind::Point) return chosen->value;
  return std::clamp(chosen->lo + (chosen->hi - chosen->lo) * rng.beta(chosen->a, chosen->b), chosen->lo,
                    chosen->hi);
}

// n draws for one label; the stream depends only on (seed, label).
inline std::vector<double> sample_scores(OutcomeLabel label, const ScoreModel& model, uint64_t seed, size_t n) {
  auto it = model.find(label);
  if (it == model.end()) {
    throw Error(ErrorCode::InvalidConfig, "no score model for " + std::string(to_token(label)));
  }
  check_mixture(it->second, to_token(label));
  Rng rng(derive_seed(seed, enum_index(label)));
  std::vector<double> out(n);
  for (auto& v : out) v = sample_score(it->second, rng);
  return out;
}

// ---------------------------------------------------------------------------
// Blueprint
// ---------------------------------------------------------------------------

template <typename E>
using Weights = std::map<E, double>;

struct CohortBlueprint {
  uint64_t n_patients = 1000;
  int min_screens_per_patient = 1;
  int max_screens_per_patient = 1;
  uint64_t seed = 0;

  Weights<OutcomeLabel> label_weights{{OutcomeLabel::ScreenNegative, 142638},
                                      {OutcomeLabel::DiagnosticNegative, 15407},
                                      {OutcomeLabel::BiopsyProvenBenign, 3931},
                                      {OutcomeLabel::IntervalCancer, 105},
                                      {OutcomeLabel::ScreenDetectedCancer, 1368},
                                      {OutcomeLabel::Excluded, 0}};
  Weights<ExclusionReason> exclusion_weights{{ExclusionReason::NoFollowup, 1},
                                             {ExclusionReason::AbnormalNoDiagnostic, 1},
                                             {ExclusionReason::Birads45NoBiopsy, 1},
                                             {ExclusionReason::InvalidBirads, 1},
                                             {ExclusionReason::NonBreastCancer, 1}};
  double missing_score_rate = 0.0;

  Weights<Race> race{{Race::Black, 75635}, {Race::White, 70763}, {Race::Asian, 8602},
                     {Race::Other, 1472}, {Race::Unknown, 6977}};
  Weights<Ethnicity> ethnicity{{Ethnicity::NotHispanicOrLatino, 135556},
                               {Ethnicity::HispanicOrLatino, 4799},
                               {Ethnicity::Unknown, 23094}};
  Weights<Density> density{{Density::A, 17931}, {Density::B, 67228}, {Density::C, 68522},
                           {Density::D, 9041}, {Density::Unknown, 727}};
  Weights<AgeBin> age{{AgeBin::Under50, 38073}, {AgeBin::From50To75, 110697}, {AgeBin::From75, 14679}};

  // Probability that a screen of the given label shows each finding type.
  std::map<OutcomeLabel, std::map<FindingType, double>> finding_mix{
      {OutcomeLabel::ScreenNegative,
       {{FindingType::Mass, 0.016}, {FindingType::Asymmetry, 0.005},
        {FindingType::ArchDistortion, 0.0003}, {FindingType::Calcification, 0.011}}},
      {OutcomeLabel::DiagnosticNegative,
       {{FindingType::Mass, 0.18}, {FindingType::Asymmetry, 0.567},
        {FindingType::ArchDistortion, 0.092}, {FindingType::Calcification, 0.143}}},
      {OutcomeLabel::BiopsyProvenBenign,
       {{FindingType::Mass, 0.18}, {FindingType::Asymmetry, 0.382},
        {FindingType::ArchDistortion, 0.09}, {FindingType::Calcification, 0.443}}},
      {OutcomeLabel::IntervalCancer,
       {{FindingType::Mass, 0.0}, {FindingType::Asymmetry, 0.029},
        {FindingType::ArchDistortion, 0.0}, {FindingType::Calcification, 0.019}}},
      {OutcomeLabel::ScreenDetectedCancer,
       {{FindingType::Mass, 0.173}, {FindingType::Asymmetry, 0.393},
        {FindingType::ArchDistortion, 0.156}, {FindingType::Calcification, 0.458}}},
      {OutcomeLabel::Excluded,
       {{FindingType::Mass, 0.05}, {FindingType::Asymmetry, 0.1},
        {FindingType::ArchDistortion, 0.02}, {FindingType::Calcification, 0.05}}},
  };
  Weights<Severity> benign_pathology{{Severity::Benign, 3135}, {Severity::Borderline, 35}, {Severity::HighRisk, 761}};
  double invasive_fraction = 914.0 / 1368.0;

  ScoreModel score_model = default_score_model();
  TemporalWindows windows;

  static ScoreMixture two_region(double above, double a_lo, double b_lo, double a_hi, double b_hi) {
    return {{1.0 - above, ScoreComponent::Kind::Beta, a_lo, b_lo, 0.0, 0.0999999, 0.0},
            {above, ScoreComponent::Kind::Beta, a_hi, b_hi, 0.1, 1.0, 0.0}};
  }

  static ScoreModel default_score_model() {
    return {{OutcomeLabel::ScreenNegative, two_region(0.0652, 1.0, 3.0, 1.0, 4.0)},
            {OutcomeLabel::DiagnosticNegative, two_region(0.0959, 1.0, 3.0, 1.0, 4.0)},
            {OutcomeLabel::BiopsyProvenBenign, two_region(0.1877, 1.0, 3.0, 1.0, 4.0)},
            {OutcomeLabel::IntervalCancer, two_region(0.3143, 1.5, 2.0, 1.2, 3.5)},
            {OutcomeLabel::ScreenDetectedCancer, two_region(0.7325, 1.5, 1.5, 1.5, 3.0)},
            {OutcomeLabel::Excluded, two_region(0.1, 1.0, 3.0, 1.0, 4.0)}};
  }
};

// Throws InfeasibleBlueprint / InvalidConfig for blueprints that cannot be
// generated as specified.
inline void check_blueprint(const CohortBlueprint& bp) {
  auto bad = [](const std::string& why) { throw Error(ErrorCode::InvalidConfig, "blueprint: " + why); };
  auto infeasible = [](const std::string& why) {
    throw Error(ErrorCode::InfeasibleBlueprint, "infeasible blueprint: " + why);
  };
  auto check_weights = [&](const auto& weights, std::string_view name) {
    double total = 0.0;
    for (const auto& [_, w] : weights) {
      if (!(w >= 0.0)) bad(std::string(name) + " weights must be non-negative");
      total += w;
    }
    if (!(total > 0.0)) bad(std::string(name) + " weights must have a positive total");
  };
  if (bp.min_screens_per_patient < 1 || bp.max_screens_per_patient < bp.min_screens_per_patient) {
    bad("screens_per_patient must satisfy 1 <= min <= max");
  }
  if (!bp.windows.valid()) bad("invalid temporal windows");
  if (!(bp.missing_score_rate >= 0.0 && bp.missing_score_rate <= 1.0)) bad("missing_score_rate outside [0,1]");
  if (!(bp.invasive_fraction >= 0.0 && bp.invasive_fraction <= 1.0)) bad("invasive_fraction outside [0,1]");
  check_weights(bp.label_weights, "label");
  check_weights(bp.race, "race");
  check_weights(bp.ethnicity, "ethnicity");
  check_weights(bp.density, "density");
  check_weights(bp.age, "age");
  check_weights(bp.benign_pathology, "benign_pathology");
  for (const auto& [s, _] : bp.benign_pathology) {
    if (s != Severity::Benign && s != Severity::Borderline && s != Severity::HighRisk) {
      bad("benign_pathology accepts BENIGN, BORDERLINE and HIGH_RISK only");
    }
  }
  for (const auto& [label, mix] : bp.finding_mix) {
    for (const auto& [_, p] : mix) {
      if (!(p >= 0.0 && p <= 1.0)) bad("finding_mix probabilities must lie in [0,1]");
    }
  }
  auto weight = [&](OutcomeLabel l) {
    auto it = bp.label_weights.find(l);
    return it == bp.label_weights.end() ? 0.0 : it->second;
  };
  for (const auto& [label, w] : bp.label_weights) {
    if (w > 0.0) {
      auto it = bp.score_model.find(label);
      if (it == bp.score_model.end()) bad("no score model for " + std::string(to_token(label)));
      check_mixture(it->second, to_token(label));
    }
  }
  const auto& win = bp.windows;
  const bool recall_possible = win.diagnostic_followup_days >= 1;
  if (weight(OutcomeLabel::IntervalCancer) > 0.0 && win.interval_cancer_days < 1) {
    infeasible("INTERVAL_CANCER weight > 0 with an interval window of 0 days");
  }
  for (auto l : {OutcomeLabel::DiagnosticNegative, OutcomeLabel::BiopsyProvenBenign,
                 OutcomeLabel::ScreenDetectedCancer}) {
    if (weight(l) > 0.0 && !recall_possible) {
      infeasible(std::string(to_token(l)) + " weight > 0 with a diagnostic window of 0 days");
    }
  }
  if (weight(OutcomeLabel::ScreenNegative) > 0.0 &&
      win.negative_followup_max_days < std::max(1, win.negative_followup_min_days)) {
    infeasible("SCREEN_NEGATIVE weight > 0 but the follow-up window holds no day after the screen");
  }
  if (weight(OutcomeLabel::Excluded) > 0.0) {
    check_weights(bp.exclusion_weights, "exclusion");
    for (const auto& [reason, w] : bp.exclusion_weights) {
      if (w <= 0.0) continue;
      if (reason == ExclusionReason::MissingScores) bad("MISSING_SCORES is controlled by missing_score_rate");
      if (reason == ExclusionReason::Birads45NoBiopsy && !recall_possible) {
        infeasible("BIRADS45_NO_BIOPSY needs a diagnostic window of at least 1 day");
      }
      if (reason == ExclusionReason::NonBreastCancer && !recall_possible && win.interval_cancer_days < 1) {
        infeasible("NON_BREAST_CANCER needs a diagnostic or interval window of at least 1 day");
      }
    }
  }
}

namespace detail {

template <typename E>
Weights<E> weights_from_json(const nlohmann::json& j, std::string_view what) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, std::string(what) + " must be an object");
  Weights<E> out;
  for (const auto& [key, value] : j.items()) {
    auto e = parse_token<E>(key);
    if (!e) throw Error(ErrorCode::InvalidConfig, "unknown " + std::string(what) + " key '" + key + "'");
    if (!value.is_number()) throw Error(ErrorCode::InvalidConfig, std::string(what) + " values must be numbers");
    out[*e] = value.template get<double>();
  }
  return out;
}

inline ScoreMixture mixture_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw Error(ErrorCode::InvalidConfig, "score_model entries must be arrays");
  ScoreMixture out;
  for (const auto& c : j) {
    ScoreComponent comp;
    comp.weight = c.value("weight", 1.0);
    const std::string kind = c.value("kind", "beta");
    if (kind == "point") {
      comp.kind = ScoreComponent::Kind::Point;
      comp.value = c.at("value").get<double>();
    } else if (kind == "beta") {
      comp.a = c.at("a").get<double>();
      comp.b = c.at("b").get<double>();
      comp.lo = c.value("lo", 0.0);
      comp.hi = c.value("hi", 1.0);
    } else {
      throw Error(ErrorCode::InvalidConfig, "unknown score component kind '" + kind + "'");
    }
    out.push_back(comp);
  }
  return out;
}

}  // namespace detail

// Reads a blueprint document. Missing keys keep their defaults.
inline CohortBlueprint blueprint_from_json(const nlohmann::json& j) {
  CohortBlueprint bp;
  try {
    if (j.contains("n_patients")) bp.n_patients = j.at("n_patients").get<uint64_t>();
    if (j.contains("seed")) bp.seed = j.at("seed").get<uint64_t>();
    if (j.contains("screens_per_patient")) {
      const auto& s = j.at("screens_per_patient");
      if (s.is_array()) {
        bp.min_screens_per_patient = s.at(0).get<int>();
        bp.max_screens_per_patient = s.at(1).get<int>();
      } else {
        bp.min_screens_per_patient = bp.max_screens_per_patient = s.get<int>();
      }
    }
    if (j.contains("label_weights")) {
      bp.label_weights = detail::weights_from_json<OutcomeLabel>(j.at("label_weights"), "label_weights");
    }
    if (j.contains("exclusion_weights")) {
      bp.exclusion_weights =
          detail::weights_from_json<ExclusionReason>(j.at("exclusion_weights"), "exclusion_weights");
    }
    if (j.contains("missing_score_rate")) bp.missing_score_rate = j.at("missing_score_rate").get<double>();
    if (j.contains("invasive_fraction")) bp.invasive_fraction = j.at("invasive_fraction").get<double>();
    if (j.contains("demographics")) {
      const auto& d = j.at("demographics");
      if (d.contains("race")) bp.race = detail::weights_from_json<Race>(d.at("race"), "race");
      if (d.contains("ethnicity")) {
        bp.ethnicity = detail::weights_from_json<Ethnicity>(d.at("ethnicity"), "ethnicity");
      }
      if (d.contains("density")) bp.density = detail::weights_from_json<Density>(d.at("density"), "density");
      if (d.contains("age")) bp.age = detail::weights_from_json<AgeBin>(d.at("age"), "age");
    }
    if (j.contains("finding_mix")) {
      for (const auto& [label_key, mix] : j.at("finding_mix").items()) {
        auto label = parse_token<OutcomeLabel>(label_key);
        if (!label) throw Error(ErrorCode::InvalidConfig, "unknown finding_mix label '" + label_key + "'");
        bp.finding_mix[*label] = detail::weights_from_json<FindingType>(mix, "finding_mix");
      }
    }
    if (j.contains("benign_pathology")) {
      bp.benign_pathology = detail::weights_from_json<Severity>(j.at("benign_pathology"), "benign_pathology");
    }
    if (j.contains("score_model")) {
      for (const auto& [label_key, mix] : j.at("score_model").items()) {
        auto label = parse_token<OutcomeLabel>(label_key);
        if (!label) throw Error(ErrorCode::InvalidConfig, "unknown score_model label '" + label_key + "'");
        bp.score_model[*label] = detail::mixture_from_json(mix);
      }
    }
    if (j.contains("windows")) {
      const auto& w = j.at("windows");
      bp.windows.diagnostic_followup_days = w.value("diagnostic_followup_days", bp.windows.diagnostic_followup_days);
      bp.windows.interval_cancer_days = w.value("interval_cancer_days", bp.windows.interval_cancer_days);
      bp.windows.negative_followup_min_days =
          w.value("negative_followup_min_days", bp.windows.negative_followup_min_days);
      bp.windows.negative_followup_max_days =
          w.value("negative_followup_max_days", bp.windows.negative_followup_max_days);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("blueprint: ") + e.what());
  }
  return bp;
}

inline CohortBlueprint load_blueprint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::FileNotFound, "cannot open blueprint '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, "blueprint '" + path.string() + "': " + e.what());
  }
  return blueprint_from_json(j);
}

// ---------------------------------------------------------------------------
// Ground truth
// ---------------------------------------------------------------------------

struct GroundTruthEntry {
  std::string exam_id;
  std::string patient_id;
  OutcomeLabel label = OutcomeLabel::Excluded;
  BinaryClass binary_class = BinaryClass::NotApplicable;
  std::optional<ExclusionReason> exclusion_reason;
  Severity final_severity = Severity::NoPathology;
  std::optional<std::string> subtype;
  FindingTypeSet finding_types;
  Race race = Race::Unknown;
  Ethnicity ethnicity = Ethnicity::Unknown;
  Density density = Density::Unknown;
  int age_at_exam = 0;
  std::optional<double> exam_score;

  bool operator==(const GroundTruthEntry&) const = default;
};

using GroundTruthLedger = std::vector<GroundTruthEntry>;  // ordered by exam_id

// The ledger view of a labeled exam, for equality against the generator.
inline GroundTruthEntry ledger_entry(const LabeledExam& e) {
  GroundTruthEntry g;
  g.exam_id = e.exam_id;
  g.patient_id = e.patient_id;
  g.label = e.label;
  g.binary_class = e.binary_class;
  g.exclusion_reason = e.exclusion_reason;
  g.final_severity = e.final_pathology.severity;
  g.subtype = e.final_pathology.subtype;
  g.finding_types = e.finding_types;
  g.race = e.race;
  g.ethnicity = e.ethnicity;
  g.density = e.density;
  g.age_at_exam = e.age_at_exam;
  g.exam_score = e.exam_score;
  return g;
}

inline void write_ledger(const GroundTruthLedger& ledger, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::FileNotFound, "cannot write '" + path.string() + "'");
  csv::write_row(out, {"exam_id", "patient_id", "label", "binary_class", "exclusion_reason", "final_severity",
                       "subtype", "finding_types", "race", "ethnicity", "density", "age_bin", "exam_score"});
  for (const auto& g : ledger) {
    csv::write_row(out, {g.exam_id, g.patient_id, std::string(to_token(g.label)),
                         std::string(to_token(g.binary_class)), detail::optional_text(g.exclusion_reason),
                         std::string(to_token(g.final_severity)), g.subtype.value_or(""),
                         g.finding_types.to_string(), std::string(to_token(g.race)),
                         std::string(to_token(g.ethnicity)), std::string(to_token(g.density)),
                         std::string(to_token(age_bin(g.age_at_exam))),
                         g.exam_score ? format_double(*g.exam_score) : std::string()});
  }
}

struct GeneratedCohort {
  RawCohort cohort;
  GroundTruthLedger ledger;
};

// ---------------------------------------------------------------------------
// Episode construction
// ---------------------------------------------------------------------------

// Everything needed to lay out one screening episode.
struct ScreenPlan {
  OutcomeLabel label = OutcomeLabel::ScreenNegative;
  std::optional<ExclusionReason> reason;  // for Excluded
  Race race = Race::Unknown;
  Ethnicity ethnicity = Ethnicity::Unknown;
  Density density = Density::Unknown;
  int age = 60;
  FindingTypeSet finding_types;
  std::optional<double> score;  // nullopt: no images scored
  Severity severity = Severity::NoPathology;
  std::optional<std::string> subtype;
};

inline constexpr std::array<std::string_view, 4> kInvasiveSubtypes{"IDC-NOS", "ILC", "IMC", "INVASIVE-OTHER"};
inline constexpr std::array<double, 4> kInvasiveSubtypeWeights{0.74, 0.11, 0.09, 0.06};
inline constexpr std::array<std::string_view, 2> kNonInvasiveSubtypes{"DCIS-NOS", "DCIS-PAPILLARY"};
inline constexpr std::array<double, 2> kNonInvasiveSubtypeWeights{0.89, 0.11};

class CohortBuilder {
 public:
  explicit CohortBuilder(TemporalWindows windows) : windows_(windows) {}

  std::string new_patient() { return format_id("P", ++patients_, 7); }

  // Days from one screen to the next screen of the same patient: past every
  // window, so episodes never see each other.
  int episode_gap(Rng& rng) const {
    const int reach = std::max({windows_.diagnostic_followup_days + 31, windows_.interval_cancer_days,
                                windows_.negative_followup_max_days});
    return reach + 1 + rng.between(0, 180);
  }

  // Lays out the exam, its follow-ups, pathology and scores; returns the
  // ledger entry. `screen_id` is used verbatim when given.
  const GroundTruthEntry& add_episode(const std::string& patient_id, Date date, const ScreenPlan& plan, Rng& rng,
                                      std::optional<std::string> screen_id = std::nullopt) {
    const std::string exam_id = screen_id ? *screen_id : format_id("S", ++screens_, 8);
    cohort_.exams.push_back({exam_id, patient_id, date, ExamType::Screening, plan.density, plan.race,
                             plan.ethnicity, plan.age});

    GroundTruthEntry g;
    g.exam_id = exam_id;
    g.patient_id = patient_id;
    g.label = plan.label;
    g.binary_class = binary_class_of(plan.label);
    g.exclusion_reason = plan.reason;
    g.finding_types = plan.finding_types;
    g.race = plan.race;
    g.ethnicity = plan.ethnicity;
    g.density = plan.density;
    g.age_at_exam = plan.age;
    g.exam_score = plan.score;
    if (plan.label != OutcomeLabel::Excluded && !plan.score) g.exclusion_reason = ExclusionReason::MissingScores;

    const int D = windows_.diagnostic_followup_days;
    const int I = windows_.interval_cancer_days;
    const int follow_lo = std::max(1, windows_.negative_followup_min_days);
    const int follow_hi = windows_.negative_followup_max_days;
    auto normal_birads = [&] { return rng.bernoulli(0.5) ? Birads::B1 : Birads::B2; };
    auto suspicious = [&] { return rng.bernoulli(0.7) ? Birads::B4 : Birads::B5; };

    auto screen_findings = [&](bool abnormal) {
      add_screen_findings(exam_id, plan.finding_types, abnormal, rng, normal_birads);
    };

    switch (plan.label) {
      case OutcomeLabel::ScreenNegative:
        screen_findings(false);
        add_diagnostic(patient_id, date, rng.between(follow_lo, follow_hi), plan, normal_birads(), rng);
        break;
      case OutcomeLabel::DiagnosticNegative: {
        screen_findings(true);
        const int visits = rng.bernoulli(0.2) ? 2 : 1;
        for (int v = 0; v < visits; ++v) {
          const auto b = static_cast<Birads>(rng.between(1, 3));
          add_diagnostic(patient_id, date, rng.between(1, D), plan, b, rng);
        }
        break;
      }
      case OutcomeLabel::BiopsyProvenBenign: {
        screen_findings(true);
        const int day = rng.between(1, D);
        const auto finding = add_diagnostic(patient_id, date, day, plan, suspicious(), rng);
        const Date biopsy_date = date.plus_days(day + rng.between(0, 14));
        add_pathology(finding, Procedure::Biopsy, plan.severity, plan.subtype, biopsy_date);
        if (plan.severity == Severity::HighRisk && rng.bernoulli(0.5)) {
          add_pathology(finding, Procedure::Resection, Severity::Benign, std::nullopt,
                        biopsy_date.plus_days(rng.between(7, 60)));
        }
        g.final_severity = plan.severity;
        g.subtype = plan.subtype;
        break;
      }
      case OutcomeLabel::ScreenDetectedCancer: {
        screen_findings(true);
        const int day = rng.between(1, D);
        const auto finding = add_diagnostic(patient_id, date, day, plan, suspicious(), rng);
        add_cancer_chain(finding, date.plus_days(day), plan, rng);
        g.final_severity = plan.severity;
        g.subtype = plan.subtype;
        break;
      }
      case OutcomeLabel::IntervalCancer: {
        screen_findings(false);
        const int day = rng.between(1, I);
        const auto finding = add_diagnostic(patient_id, date, day, plan, suspicious(), rng);
        add_cancer_chain(finding, date.plus_days(day), plan, rng);
        g.final_severity = plan.severity;
        g.subtype = plan.subtype;
        break;
      }
      case OutcomeLabel::Excluded:
        switch (*plan.reason) {
          case ExclusionReason::NoFollowup:
            screen_findings(false);
            if (follow_lo > 1 && rng.bernoulli(0.5)) {
              add_diagnostic(patient_id, date, rng.between(1, follow_lo - 1), plan, normal_birads(), rng);
            }
            break;
          case ExclusionReason::AbnormalNoDiagnostic:
            screen_findings(true);
            if (rng.bernoulli(0.5)) {
              add_diagnostic(patient_id, date, D + rng.between(1, 30), plan,
                             static_cast<Birads>(rng.between(1, 5)), rng);
            }
            break;
          case ExclusionReason::Birads45NoBiopsy:
            screen_findings(true);
            add_diagnostic(patient_id, date, rng.between(1, D), plan, suspicious(), rng);
            break;
          case ExclusionReason::NonBreastCancer: {
            const bool recall = D >= 1 && (I < 1 || rng.bernoulli(0.5));
            screen_findings(recall);
            const int day = rng.between(1, recall ? D : I);
            const auto finding = add_diagnostic(patient_id, date, day, plan, suspicious(), rng);
            add_pathology(finding, Procedure::Biopsy, Severity::NonBreastCancer, std::string("LYMPHOMA"),
                          date.plus_days(day + rng.between(0, 14)));
            break;
          }
          case ExclusionReason::InvalidBirads: {
            screen_findings(false);
            FindingRecord f = blank_finding(exam_id);
            f.birads = static_cast<Birads>(rng.between(3, 5));
            cohort_.findings.push_back(f);
            break;
          }
          case ExclusionReason::MissingScores:
            throw Error(ErrorCode::Internal, "MISSING_SCORES is not an episode shape");
        }
        break;
    }

    if (plan.score) add_scores(exam_id, *plan.score, rng);
    ledger_.push_back(std::move(g));
    return ledger_.back();
  }

  GeneratedCohort finish() {
    std::sort(ledger_.begin(), ledger_.end(),
              [](const GroundTruthEntry& a, const GroundTruthEntry& b) { return a.exam_id < b.exam_id; });
    return {std::move(cohort_), std::move(ledger_)};
  }

  static std::string format_id(const char* prefix, uint64_t n, int width) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s%0*llu", prefix, width, static_cast<unsigned long long>(n));
    return buf;
  }

 private:
  FindingRecord blank_finding(const std::string& exam_id) {
    FindingRecord f;
    f.finding_id = format_id("F", ++findings_, 8);
    f.exam_id = exam_id;
    f.laterality = static_cast<Laterality>(findings_ % 3);
    return f;
  }

  template <typename E>
  static E pick_enum(Rng& rng) {
    const auto values = enum_values<E>();
    return values[rng.below(values.size())];
  }

  void describe(FindingRecord& f, FindingType type, Rng& rng) {
    switch (type) {
      case FindingType::Mass:
        f.has_mass = true;
        f.mass_shape = pick_enum<MassShape>(rng);
        f.mass_margin = pick_enum<MassMargin>(rng);
        break;
      case FindingType::Asymmetry:
        f.has_asymmetry = true;
        if (rng.bernoulli(0.8)) f.asymmetry_type = pick_enum<AsymmetryType>(rng);
        break;
      case FindingType::ArchDistortion: f.has_arch_distortion = true; break;
      case FindingType::Calcification:
        f.has_calcification = true;
        f.calc_morphology = pick_enum<CalcMorphology>(rng);
        f.calc_distribution = pick_enum<CalcDistribution>(rng);
        break;
    }
  }

  template <typename NormalBirads>
  void add_screen_findings(const std::string& exam_id, FindingTypeSet types, bool abnormal, Rng& rng,
                           NormalBirads&& normal_birads) {
    bool any = false;
    for (auto t : enum_values<FindingType>()) {
      if (!types.contains(t)) continue;
      FindingRecord f = blank_finding(exam_id);
      f.birads = abnormal ? Birads::B0 : normal_birads();
      describe(f, t, rng);
      cohort_.findings.push_back(f);
      any = true;
    }
    if (!any) {
      FindingRecord f = blank_finding(exam_id);
      f.birads = abnormal ? Birads::B0 : normal_birads();
      cohort_.findings.push_back(f);
    }
  }

  // One diagnostic exam `day` days after the screen with a single finding;
  // returns the finding id.
  std::string add_diagnostic(const std::string& patient_id, Date screen_date, int day, const ScreenPlan& plan,
                             Birads birads, Rng& rng) {
    const std::string exam_id = format_id("D", ++diagnostics_, 8);
    cohort_.exams.push_back({exam_id, patient_id, screen_date.plus_days(day), ExamType::Diagnostic,
                             plan.density, plan.race, plan.ethnicity, plan.age});
    FindingRecord f = blank_finding(exam_id);
    f.birads = birads;
    std::vector<FindingType> present;
    for (auto t : enum_values<FindingType>()) {
      if (plan.finding_types.contains(t)) present.push_back(t);
    }
    if (!present.empty()) describe(f, present[rng.below(present.size())], rng);
    cohort_.findings.push_back(f);
    return f.finding_id;
  }

  void add_pathology(const std::string& finding_id, Procedure procedure, Severity severity,
                     std::optional<std::string> subtype, Date date) {
    cohort_.pathology.push_back({finding_id, procedure, severity, std::move(subtype), date});
  }

  // Biopsy (optionally upgraded at resection) ending in plan.severity.
  void add_cancer_chain(const std::string& finding, Date diagnostic_date, const ScreenPlan& plan, Rng& rng) {
    const Date biopsy_date = diagnostic_date.plus_days(rng.between(0, 14));
    const Date resection_date = biopsy_date.plus_days(rng.between(7, 60));
    const double u = rng.uniform();
    if (u < 0.1) {
      add_pathology(finding, Procedure::Biopsy, Severity::HighRisk, std::string("ADH"), biopsy_date);
      add_pathology(finding, Procedure::Resection, plan.severity, plan.subtype, resection_date);
    } else if (u < 0.2 && plan.severity == Severity::InvasiveCancer) {
      add_pathology(finding, Procedure::Biopsy, Severity::NonInvasiveCancer, std::string("DCIS-NOS"),
                    biopsy_date);
      add_pathology(finding, Procedure::Resection, plan.severity, plan.subtype, resection_date);
    } else {
      add_pathology(finding, Procedure::Biopsy, plan.severity, plan.subtype, biopsy_date);
      if (rng.bernoulli(0.5)) {
        add_pathology(finding, Procedure::Resection, plan.severity, plan.subtype, resection_date);
      }
    }
  }

  // 1-4 images whose maximum is exactly `score`.
  void add_scores(const std::string& exam_id, double score, Rng& rng) {
    const int images = rng.between(1, 4);
    const int top = rng.between(0, images - 1);
    for (int i = 0; i < images; ++i) {
      const double s = i == top ? score : score * rng.uniform();
      cohort_.scores.push_back({exam_id, format_id("I", ++images_, 9), s});
    }
  }

  TemporalWindows windows_;
  RawCohort cohort_;
  GroundTruthLedger ledger_;
  uint64_t patients_ = 0, screens_ = 0, diagnostics_ = 0, findings_ = 0, images_ = 0;
};

// ---------------------------------------------------------------------------
// Blueprint-driven generation
// ---------------------------------------------------------------------------

template <typename E>
E draw(const Weights<E>& weights, Rng& rng) {
  double total = 0.0;
  for (const auto& [_, w] : weights) total += w;
  double pick = rng.uniform() * total;
  E last = weights.begin()->first;
  for (const auto& [value, w] : weights) {
    if (w <= 0.0) continue;
    last = value;
    if (pick < w) return value;
    pick -= w;
  }
  return last;
}

inline int draw_age(AgeBin bin, Rng& rng) {
  switch (bin) {
    case AgeBin::Under50: return rng.between(35, 49);
    case AgeBin::From50To75: return rng.between(50, 74);
    case AgeBin::From75: return rng.between(75, 90);
  }
  return 60;
}

inline std::string draw_subtype(Severity severity, Rng& rng) {
  auto pick = [&](auto names, auto weights) {
    double u = rng.uniform();
    for (size_t i = 0; i < names.size(); ++i) {
      if (u < weights[i]) return std::string(names[i]);
      u -= weights[i];
    }
    return std::string(names.back());
  };
  if (severity == Severity::InvasiveCancer) return pick(kInvasiveSubtypes, kInvasiveSubtypeWeights);
  return pick(kNonInvasiveSubtypes, kNonInvasiveSubtypeWeights);
}

inline ScreenPlan draw_plan(const CohortBlueprint& bp, Race race, Ethnicity ethnicity, Rng& rng) {
  ScreenPlan p;
  p.label = draw(bp.label_weights, rng);
  if (p.label == OutcomeLabel::Excluded) p.reason = draw(bp.exclusion_weights, rng);
  p.race = race;
  p.ethnicity = ethnicity;
  p.density = draw(bp.density, rng);
  p.age = draw_age(draw(bp.age, rng), rng);
  if (auto it = bp.finding_mix.find(p.label); it != bp.finding_mix.end()) {
    for (const auto& [type, prob] : it->second) {
      if (rng.bernoulli(prob)) p.finding_types.insert(type);
    }
  }
  if (p.label == OutcomeLabel::BiopsyProvenBenign) {
    p.severity = draw(bp.benign_pathology, rng);
    if (p.severity == Severity::HighRisk) p.subtype = "ADH";
  } else if (p.label == OutcomeLabel::ScreenDetectedCancer || p.label == OutcomeLabel::IntervalCancer) {
    p.severity = rng.bernoulli(bp.invasive_fraction) ? Severity::InvasiveCancer : Severity::NonInvasiveCancer;
    p.subtype = draw_subtype(p.severity, rng);
  }
  auto model = bp.score_model.find(p.label);
  if (model == bp.score_model.end()) model = bp.score_model.find(OutcomeLabel::ScreenNegative);
  const double score = model == bp.score_model.end() ? rng.uniform() : sample_score(model->second, rng);
  if (!rng.bernoulli(bp.missing_score_rate)) p.score = score;
  return p;
}

// Patients draw from independent streams derive_seed(seed, patient index),
// so any patient's episodes depend only on the blueprint and its index.
inline GeneratedCohort generate_cohort(const CohortBlueprint& bp) {
  check_blueprint(bp);
  CohortBuilder builder(bp.windows);
  const Date origin = Date::from_ymd(2014, 1, 1);
  for (uint64_t i = 0; i < bp.n_patients; ++i) {
    Rng rng(derive_seed(bp.seed, i));
    const std::string patient = builder.new_patient();
    const Race race = draw(bp.race, rng);
    const Ethnicity ethnicity = draw(bp.ethnicity, rng);
    const int screens = rng.between(bp.min_screens_per_patient, bp.max_screens_per_patient);
    Date date = origin.plus_days(static_cast<int>(rng.below(730)));
    for (int s = 0; s < screens; ++s) {
      const ScreenPlan plan = draw_plan(bp, race, ethnicity, rng);
      builder.add_episode(patient, date, plan, rng);
      date = date.plus_days(builder.episode_gap(rng));
    }
  }
  return builder.finish();
}

inline void write_generated(const GeneratedCohort& g, const std::filesystem::path& dir) {
  write_cohort(g.cohort, dir);
  write_ledger(g.ledger, dir / "ledger.csv");
}

// ---------------------------------------------------------------------------
// Corruption for validation tests
// ---------------------------------------------------------------------------

// Mutates roughly `rate` of the rows: flips exam types, rewrites BI-RADS,
// breaks foreign keys, moves pathology before its exam, pushes scores out of
// range.
inline RawCohort corrupt_cohort(RawCohort raw, double rate, uint64_t seed) {
  Rng rng(seed);
  std::unordered_map<std::string, Date> finding_date;
  {
    std::unordered_map<std::string, Date> exam_date;
    for (const auto& e : raw.exams) exam_date.emplace(e.exam_id, e.exam_date);
    for (const auto& f : raw.findings) {
      if (auto it = exam_date.find(f.exam_id); it != exam_date.end()) finding_date.emplace(f.finding_id, it->second);
    }
  }
  for (auto& e : raw.exams) {
    if (rng.bernoulli(rate)) {
      e.exam_type = e.exam_type == ExamType::Screening ? ExamType::Diagnostic : ExamType::Screening;
    }
  }
  for (auto& f : raw.findings) {
    if (!rng.bernoulli(rate)) continue;
    if (rng.bernoulli(0.8)) {
      f.birads = static_cast<Birads>(rng.between(0, 5));
    } else {
      f.exam_id = "X" + f.exam_id;
    }
  }
  for (auto& p : raw.pathology) {
    if (!rng.bernoulli(rate)) continue;
    auto it = finding_date.find(p.finding_id);
    if (it != finding_date.end() && rng.bernoulli(0.7)) {
      p.result_date = it->second.plus_days(-rng.between(1, 30));
    } else {
      p.finding_id = "X" + p.finding_id;
    }
  }
  for (auto& s : raw.scores) {
    if (!rng.bernoulli(rate)) continue;
    if (rng.bernoulli(0.5)) {
      s.exam_id = "X" + s.exam_id;
    } else {
      s.malignancy_score = 1.0 + rng.uniform();
    }
  }
  return raw;
}

// ---------------------------------------------------------------------------
// Paper replica
// ---------------------------------------------------------------------------

namespace replica {

// Per outcome column: n, exams scoring >= 0.1, and demographic / finding
// counts by category.
struct Column {
  OutcomeLabel label;
  uint64_t n;
  uint64_t above;
  std::array<uint64_t, 5> race;       // Black, White, Asian, Other, Unknown
  std::array<uint64_t, 3> ethnicity;  // NotHispanic, Hispanic, Unknown
  std::array<uint64_t, 3> age;        // <50, 50-75, >=75
  std::array<uint64_t, 4> density;    // A-D; remainder Unknown
  std::array<uint64_t, 4> findings;   // Mass, Asymmetry, ArchDistortion, Calcification
  std::array<uint64_t, 4> findings_above;
};

inline constexpr std::array<Column, 3> kNegativeColumns{{
    {OutcomeLabel::ScreenNegative, 142638, 9297, {65851, 62422, 7497, 1191, 5677}, {118669, 3990, 19979},
     {30717, 98571, 13350}, {16498, 59414, 58557, 7782}, {2269, 753, 38, 1507}, {351, 46, 4, 154}},
    {OutcomeLabel::DiagnosticNegative, 15407, 1477, {7019, 6288, 838, 220, 1042}, {12369, 657, 2381},
     {5775, 8693, 939}, {1006, 5676, 7533, 948}, {2775, 8731, 1419, 2204}, {287, 788, 229, 332}},
    {OutcomeLabel::BiopsyProvenBenign, 3931, 738, {2069, 1381, 201, 50, 230}, {3191, 125, 615},
     {1371, 2364, 196}, {327, 1479, 1793, 253}, {707, 1503, 352, 1741}, {114, 265, 111, 514}},
}};

inline constexpr Column kIntervalColumn{OutcomeLabel::IntervalCancer, 105, 33, {43, 53, 5, 1, 3}, {96, 0, 9},
                                        {28, 71, 6}, {0, 26, 71, 7}, {0, 3, 0, 2}, {0, 1, 0, 1}};

inline constexpr Column kCancerColumn{OutcomeLabel::ScreenDetectedCancer, 1368, 1002, {653, 619, 61, 10, 25},
                                      {1231, 27, 110}, {182, 998, 188}, {100, 633, 568, 51},
                                      {236, 538, 214, 627}, {200, 420, 178, 414}};

struct CancerSplit {
  Severity severity;
  uint64_t n;
  uint64_t above;
  std::array<uint64_t, 4> findings;
  std::array<uint64_t, 4> findings_above;
};

inline constexpr std::array<CancerSplit, 2> kCancerSplits{{
    {Severity::InvasiveCancer, 914, 754, {205, 456, 192, 250}, {180, 377, 166, 206}},
    {Severity::NonInvasiveCancer, 454, 248, {31, 82, 22, 377}, {20, 43, 12, 208}},
}};

inline constexpr std::array<uint64_t, 3> kBenignSeverity{3135, 35, 761};  // Benign, Borderline, HighRisk
inline constexpr uint64_t kIntervalInvasive = 70;

// Category list of exact size n: counts[i] copies of values[i], remainder
// filled with `rest`, then shuffled.
template <typename E, size_t K>
std::vector<E> exact_column(const std::array<uint64_t, K>& counts, std::array<E, K> values, E rest, uint64_t n,
                            Rng& rng) {
  std::vector<E> out;
  out.reserve(n);
  for (size_t i = 0; i < K; ++i) out.insert(out.end(), counts[i], values[i]);
  if (out.size() > n) throw Error(ErrorCode::Internal, "replica column overflows its total");
  out.resize(n, rest);
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

// Picks exactly k of the given indices.
inline std::vector<size_t> choose(std::vector<size_t> pool, uint64_t k, Rng& rng) {
  if (k > pool.size()) throw Error(ErrorCode::Internal, "replica selection larger than its pool");
  for (size_t i = 0; i < k; ++i) std::swap(pool[i], pool[i + rng.below(pool.size() - i)]);
  pool.resize(k);
  return pool;
}

inline const ScoreMixture& above_model(bool positive) {
  static const ScoreMixture neg{{1.0, ScoreComponent::Kind::Beta, 1.0, 4.0, 0.1, 1.0, 0.0}};
  static const ScoreMixture pos{{1.0, ScoreComponent::Kind::Beta, 1.5, 3.0, 0.1, 1.0, 0.0}};
  return positive ? pos : neg;
}

inline const ScoreMixture& below_model(bool positive) {
  static const ScoreMixture neg{{1.0, ScoreComponent::Kind::Beta, 1.0, 3.0, 0.0, 0.0999999, 0.0}};
  static const ScoreMixture pos{{1.0, ScoreComponent::Kind::Beta, 1.5, 1.5, 0.0, 0.0999999, 0.0}};
  return positive ? pos : neg;
}

// Plans for one column. `above` marks the exams scoring >= 0.1 and finding
// types are placed so each type has its exact count above and below.
inline void fill_column(std::vector<ScreenPlan>& plans, const Column& c, std::span<const Severity> severities,
                        bool positive, Rng& rng) {
  const auto race = exact_column(c.race, std::array{Race::Black, Race::White, Race::Asian, Race::Other, Race::Unknown},
                                 Race::Unknown, c.n, rng);
  const auto eth = exact_column(
      c.ethnicity, std::array{Ethnicity::NotHispanicOrLatino, Ethnicity::HispanicOrLatino, Ethnicity::Unknown},
      Ethnicity::Unknown, c.n, rng);
  const auto age = exact_column(c.age, std::array{AgeBin::Under50, AgeBin::From50To75, AgeBin::From75},
                                AgeBin::From50To75, c.n, rng);
  const auto density = exact_column(c.density, std::array{Density::A, Density::B, Density::C, Density::D},
                                    Density::Unknown, c.n, rng);
  std::vector<size_t> order(c.n);
  std::iota(order.begin(), order.end(), size_t{0});
  const auto above_idx = choose(order, c.above, rng);
  std::vector<bool> above(c.n, false);
  for (size_t i : above_idx) above[i] = true;

  std::vector<ScreenPlan> column(c.n);
  for (size_t i = 0; i < c.n; ++i) {
    auto& p = column[i];
    p.label = c.label;
    p.race = race[i];
    p.ethnicity = eth[i];
    p.age = draw_age(age[i], rng);
    p.density = density[i];
    p.severity = severities.empty() ? Severity::NoPathology : severities[i];
    p.score = sample_score(above[i] ? above_model(positive) : below_model(positive), rng);
  }
  std::vector<size_t> hi, lo;
  for (size_t i = 0; i < c.n; ++i) (above[i] ? hi : lo).push_back(i);
  for (auto t : enum_values<FindingType>()) {
    const size_t k = enum_index(t);
    for (size_t i : choose(hi, c.findings_above[k], rng)) column[i].finding_types.insert(t);
    for (size_t i : choose(lo, c.findings[k] - c.findings_above[k], rng)) column[i].finding_types.insert(t);
  }
  plans.insert(plans.end(), column.begin(), column.end());
}

}  // namespace replica

// Screen plans reproducing the published cohort: label sizes, threshold
// crossings at 0.1, demographic and finding counts per outcome, cancer types
// and benign pathology. Order is fixed by label; scores are seeded.
inline std::vector<ScreenPlan> paper_replica_plans(uint64_t seed) {
  using namespace replica;
  Rng rng(derive_seed(seed, hash_key("paper-replica")));
  std::vector<ScreenPlan> plans;
  plans.reserve(163449);

  for (const auto& c : kNegativeColumns) {
    std::vector<Severity> severities;
    if (c.label == OutcomeLabel::BiopsyProvenBenign) {
      severities = exact_column(kBenignSeverity, std::array{Severity::Benign, Severity::Borderline, Severity::HighRisk},
                                Severity::Benign, c.n, rng);
    }
    fill_column(plans, c, severities, false, rng);
  }
  for (auto& p : plans) {
    if (p.severity == Severity::HighRisk) p.subtype = "ADH";
  }

  {
    std::vector<Severity> severities(kIntervalColumn.n, Severity::NonInvasiveCancer);
    std::fill_n(severities.begin(), kIntervalInvasive, Severity::InvasiveCancer);
    std::shuffle(severities.begin(), severities.end(), rng);
    const size_t start = plans.size();
    fill_column(plans, kIntervalColumn, severities, true, rng);
    for (size_t i = start; i < plans.size(); ++i) plans[i].subtype = draw_subtype(plans[i].severity, rng);
  }

  // Screen-detected cancers: demographics over the whole column, then the
  // invasive / non-invasive split with its own threshold and finding counts.
  {
    const size_t start = plans.size();
    std::vector<Severity> severities(kCancerColumn.n, Severity::NonInvasiveCancer);
    fill_column(plans, kCancerColumn, severities, true, rng);
    for (size_t i = start; i < plans.size(); ++i) {
      plans[i].finding_types = {};
      plans[i].score.reset();
    }
    std::vector<size_t> free(kCancerColumn.n);
    std::iota(free.begin(), free.end(), start);
    std::shuffle(free.begin(), free.end(), rng);
    size_t cursor = 0;
    for (const auto& split : kCancerSplits) {
      std::vector<size_t> members(free.begin() + cursor, free.begin() + cursor + split.n);
      cursor += split.n;
      const auto hi_list = choose(members, split.above, rng);
      std::set<size_t> hi_set(hi_list.begin(), hi_list.end());
      std::vector<size_t> hi, lo;
      for (size_t i : members) {
        auto& p = plans[i];
        p.severity = split.severity;
        p.subtype = draw_subtype(split.severity, rng);
        const bool above = hi_set.contains(i);
        p.score = sample_score(above ? above_model(true) : below_model(true), rng);
        (above ? hi : lo).push_back(i);
      }
      for (auto t : enum_values<FindingType>()) {
        const size_t k = enum_index(t);
        for (size_t i : choose(hi, split.findings_above[k], rng)) plans[i].finding_types.insert(t);
        for (size_t i : choose(lo, split.findings[k] - split.findings_above[k], rng)) {
          plans[i].finding_types.insert(t);
        }
      }
    }
  }
  return plans;
}

// Labeled population straight from the plans, without building exams.
// Descriptors are not populated.
inline LabeledCohort population_from_plans(std::span<const ScreenPlan> plans) {
  LabeledCohort out;
  out.exams.reserve(plans.size());
  for (auto label : enum_values<OutcomeLabel>()) out.label_counts[label] = 0;
  for (auto reason : enum_values<ExclusionReason>()) out.exclusion_counts[reason] = 0;
  for (size_t i = 0; i < plans.size(); ++i) {
    const auto& p = plans[i];
    LabeledExam e;
    e.exam_id = CohortBuilder::format_id("S", i + 1, 8);
    e.patient_id = CohortBuilder::format_id("P", i + 1, 7);
    e.label = p.label;
    e.binary_class = binary_class_of(p.label);
    e.exclusion_reason = p.reason;
    if (p.label != OutcomeLabel::Excluded && !p.score) e.exclusion_reason = ExclusionReason::MissingScores;
    if (p.label == OutcomeLabel::BiopsyProvenBenign || p.label == OutcomeLabel::ScreenDetectedCancer ||
        p.label == OutcomeLabel::IntervalCancer) {
      e.final_pathology.severity = p.severity;
      e.final_pathology.subtype = p.subtype;
      if (is_cancer(p.severity) && p.subtype) e.cancer_subtypes = {*p.subtype};
    }
    e.finding_types = p.finding_types;
    e.exam_score = p.score;
    e.race = p.race;
    e.ethnicity = p.ethnicity;
    e.density = p.density;
    e.age_at_exam = p.age;
    ++out.label_counts[e.label];
    if (e.exclusion_reason) ++out.exclusion_counts[*e.exclusion_reason];
    out.exams.push_back(std::move(e));
  }
  return out;
}

// The replica as raw tables: one patient per screen, ids S00000001... in
// plan order.
inline GeneratedCohort paper_replica_cohort(uint64_t seed) {
  const auto plans = paper_replica_plans(seed);
  CohortBuilder builder(TemporalWindows{});
  Rng rng(derive_seed(seed, hash_key("paper-replica-episodes")));
  const Date origin = Date::from_ymd(2014, 1, 1);
  for (size_t i = 0; i < plans.size(); ++i) {
    const std::string patient = builder.new_patient();
    builder.add_episode(patient, origin.plus_days(static_cast<int>(rng.below(1460))), plans[i], rng);
  }
  return builder.finish();
}

inline LabeledCohort paper_replica_population(uint64_t seed) {
  return population_from_plans(paper_replica_plans(seed));
}

}  // namespace screeval
