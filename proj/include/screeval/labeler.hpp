#pragma once

// Exam-level outcome labels for screening exams.
//
// Each screening exam receives exactly one of five outcome labels or an
// exclusion reason:
//
//   normal screen (only BI-RADS 1/2 findings)
//     cancer on an owned diagnostic within the interval window -> IntervalCancer
//     any later exam inside the negative follow-up window      -> ScreenNegative
//     otherwise                                                -> Excluded(NoFollowup)
//   abnormal screen (any BI-RADS 0 finding)
//     no recall diagnostic within the diagnostic window        -> Excluded(AbnormalNoDiagnostic)
//     most severe diagnostic BI-RADS 1-3                       -> DiagnosticNegative
//     BI-RADS 4/5 without pathology                            -> Excluded(Birads45NoBiopsy)
//     benign / borderline / high-risk final pathology          -> BiopsyProvenBenign
//     invasive / non-invasive cancer final pathology           -> ScreenDetectedCancer
//   non-breast cancer anywhere on the pathway                  -> Excluded(NonBreastCancer)
//   invalid or inconsistent assessments                        -> Excluded(InvalidBirads)
//
// Labeled exams without a model score keep their label but carry the
// MissingScores exclusion so they drop out of evaluation only.

#include <algorithm>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "screeval/ingest.hpp"
#include "screeval/linkage.hpp"
#include "screeval/parallel.hpp"
#include "screeval/records.hpp"

namespace screeval {

enum class OutcomeLabel {
  ScreenNegative,
  DiagnosticNegative,
  BiopsyProvenBenign,
  ScreenDetectedCancer,
  IntervalCancer,
  Excluded,
};

enum class BinaryClass { Negative = 0, Positive = 1, NotApplicable };

enum class ExclusionReason {
  NoFollowup,
  AbnormalNoDiagnostic,
  Birads45NoBiopsy,
  InvalidBirads,
  NonBreastCancer,
  MissingScores,
};

enum class ScreenAssessment { Normal, Abnormal, Invalid };

template <>
struct EnumTraits<OutcomeLabel> {
  static constexpr std::array<std::pair<OutcomeLabel, std::string_view>, 6> values{{
      {OutcomeLabel::ScreenNegative, "SCREEN_NEGATIVE"},
      {OutcomeLabel::DiagnosticNegative, "DIAGNOSTIC_NEGATIVE"},
      {OutcomeLabel::BiopsyProvenBenign, "BIOPSY_PROVEN_BENIGN"},
      {OutcomeLabel::ScreenDetectedCancer, "SCREEN_DETECTED_CANCER"},
      {OutcomeLabel::IntervalCancer, "INTERVAL_CANCER"},
      {OutcomeLabel::Excluded, "EXCLUDED"},
  }};
};

template <>
struct EnumTraits<BinaryClass> {
  static constexpr std::array<std::pair<BinaryClass, std::string_view>, 3> values{{
      {BinaryClass::Negative, "0"},
      {BinaryClass::Positive, "1"},
      {BinaryClass::NotApplicable, "NA"},
  }};
};

template <>
struct EnumTraits<ExclusionReason> {
  static constexpr std::array<std::pair<ExclusionReason, std::string_view>, 6> values{{
      {ExclusionReason::NoFollowup, "NO_FOLLOWUP"},
      {ExclusionReason::AbnormalNoDiagnostic, "ABNORMAL_NO_DIAGNOSTIC"},
      {ExclusionReason::Birads45NoBiopsy, "BIRADS45_NO_BIOPSY"},
      {ExclusionReason::InvalidBirads, "INVALID_BIRADS"},
      {ExclusionReason::NonBreastCancer, "NON_BREAST_CANCER"},
      {ExclusionReason::MissingScores, "MISSING_SCORES"},
  }};
};

template <>
struct EnumTraits<ScreenAssessment> {
  static constexpr std::array<std::pair<ScreenAssessment, std::string_view>, 3> values{{
      {ScreenAssessment::Normal, "NORMAL"},
      {ScreenAssessment::Abnormal, "ABNORMAL"},
      {ScreenAssessment::Invalid, "INVALID"},
  }};
};

constexpr BinaryClass binary_class_of(OutcomeLabel label) {
  switch (label) {
    case OutcomeLabel::ScreenNegative:
    case OutcomeLabel::DiagnosticNegative:
    case OutcomeLabel::BiopsyProvenBenign: return BinaryClass::Negative;
    case OutcomeLabel::ScreenDetectedCancer: return BinaryClass::Positive;
    default: return BinaryClass::NotApplicable;
  }
}

struct LabeledExam {
  std::string exam_id;
  std::string patient_id;
  OutcomeLabel label = OutcomeLabel::Excluded;
  BinaryClass binary_class = BinaryClass::NotApplicable;
  std::optional<ExclusionReason> exclusion_reason;
  FinalPathology final_pathology;
  std::vector<std::string> cancer_subtypes;
  FindingTypeSet finding_types;
  std::vector<Descriptor> descriptors;  // distinct, sorted; includes Generic
  std::optional<double> exam_score;
  Race race = Race::Unknown;
  Ethnicity ethnicity = Ethnicity::Unknown;
  Density density = Density::Unknown;
  int age_at_exam = 0;

  // In the binary evaluation population: negative or positive class, scored,
  // and not excluded for any reason.
  bool evaluable() const {
    return binary_class != BinaryClass::NotApplicable && !exclusion_reason && exam_score;
  }

  double score() const { return exam_score.value_or(0.0); }
  bool positive() const { return binary_class == BinaryClass::Positive; }

  // Pathology reached through the recall pathway; NoPathology for every label
  // that did not go through biopsy.
  Severity screen_detected_pathology() const {
    if (label == OutcomeLabel::BiopsyProvenBenign || label == OutcomeLabel::ScreenDetectedCancer) {
      return final_pathology.severity;
    }
    return Severity::NoPathology;
  }

  bool operator==(const LabeledExam&) const = default;
};

struct LabeledCohort {
  std::vector<LabeledExam> exams;  // ordered by exam_id
  std::map<OutcomeLabel, size_t> label_counts;
  std::map<ExclusionReason, size_t> exclusion_counts;
  std::vector<std::string> log;  // inconsistencies resolved as exclusions
};

// Most severe screening assessment. BI-RADS 3/4/5 or an empty finding list is
// not a legal screening outcome and wins over BI-RADS 0.
inline ScreenAssessment aggregate_exam_assessment(std::span<const Birads> assessments) {
  if (assessments.empty()) return ScreenAssessment::Invalid;
  bool any_recall = false;
  for (Birads b : assessments) {
    if (b >= Birads::B3) return ScreenAssessment::Invalid;
    if (b == Birads::B0) any_recall = true;
  }
  return any_recall ? ScreenAssessment::Abnormal : ScreenAssessment::Normal;
}

inline ScreenAssessment aggregate_exam_assessment(std::span<const FindingRecord* const> findings) {
  std::vector<Birads> assessments;
  assessments.reserve(findings.size());
  for (const auto* f : findings) assessments.push_back(f->birads);
  return aggregate_exam_assessment(assessments);
}

// Everything assign_label needs beyond the screen and its follow-ups.
struct LabelContext {
  const CohortIndex& index;
  const ValidationReport& validation;
  const std::unordered_map<std::string, double>& scores;
};

struct LabelDecision {
  LabeledExam exam;
  std::optional<std::string> note;  // set when inconsistent input forced an exclusion
};

inline LabelDecision assign_label(const LabelContext& ctx, const ExamRecord& screen,
                                  const FollowupSet& followups) {
  LabelDecision decision;
  LabeledExam& out = decision.exam;
  out.exam_id = screen.exam_id;
  out.patient_id = screen.patient_id;
  out.race = screen.race;
  out.ethnicity = screen.ethnicity;
  out.density = screen.density;
  out.age_at_exam = screen.age_at_exam;
  if (auto it = ctx.scores.find(screen.exam_id); it != ctx.scores.end()) out.exam_score = it->second;

  const auto screen_findings = ctx.index.findings(screen.exam_id);
  bool screen_pathology = false;
  for (const auto* f : screen_findings) {
    out.finding_types |= f->finding_types();
    for (const auto& d : descriptors_of(*f)) out.descriptors.push_back(d);
    if (!ctx.index.pathology(f->finding_id).empty()) screen_pathology = true;
  }
  std::sort(out.descriptors.begin(), out.descriptors.end());
  out.descriptors.erase(std::unique(out.descriptors.begin(), out.descriptors.end()),
                        out.descriptors.end());

  auto set_label = [&](OutcomeLabel label) {
    out.label = label;
    out.binary_class = binary_class_of(label);
    if (!out.exam_score) out.exclusion_reason = ExclusionReason::MissingScores;
    return decision;
  };
  auto exclude = [&](ExclusionReason reason, const char* note = nullptr) {
    out.label = OutcomeLabel::Excluded;
    out.binary_class = BinaryClass::NotApplicable;
    out.exclusion_reason = reason;
    if (note) decision.note = screen.exam_id + ": " + note;
    return decision;
  };

  if (ctx.validation.invalid_exams.contains(screen.exam_id)) {
    return exclude(ExclusionReason::InvalidBirads);
  }
  const ScreenAssessment assessment = aggregate_exam_assessment(screen_findings);
  if (assessment == ScreenAssessment::Invalid) return exclude(ExclusionReason::InvalidBirads);
  if (screen_pathology) {
    return exclude(ExclusionReason::InvalidBirads,
                   "pathology attached to a screening finding without a diagnostic exam");
  }

  if (assessment == ScreenAssessment::Normal) {
    const ExamPathology interval = resolve_exam_pathology(followups.interval_diagnostics);
    if (interval.final.non_breast_cancer) return exclude(ExclusionReason::NonBreastCancer);
    if (is_cancer(interval.final.severity)) {
      out.final_pathology = interval.final;
      out.cancer_subtypes = interval.cancer_subtypes;
      return set_label(OutcomeLabel::IntervalCancer);
    }
    if (followups.any_followup_within_window) return set_label(OutcomeLabel::ScreenNegative);
    return exclude(ExclusionReason::NoFollowup);
  }

  if (followups.diagnostics.empty()) return exclude(ExclusionReason::AbnormalNoDiagnostic);
  std::optional<Birads> worst;
  for (const auto& d : followups.diagnostics) {
    if (ctx.validation.invalid_exams.contains(d.exam_id)) {
      return exclude(ExclusionReason::InvalidBirads, "recall diagnostic has invalid BI-RADS");
    }
    auto b = d.max_birads();
    if (b && (!worst || *b > *worst)) worst = b;
  }
  if (!worst) return exclude(ExclusionReason::InvalidBirads, "recall diagnostic has no findings");

  const ExamPathology pathology = resolve_exam_pathology(followups.diagnostics);
  if (*worst <= Birads::B3) {
    if (pathology.any_pathology) {
      return exclude(ExclusionReason::InvalidBirads,
                     "pathology on a recall pathway with diagnostic BI-RADS 1-3");
    }
    return set_label(OutcomeLabel::DiagnosticNegative);
  }
  if (!pathology.any_pathology) return exclude(ExclusionReason::Birads45NoBiopsy);
  if (pathology.final.non_breast_cancer) return exclude(ExclusionReason::NonBreastCancer);

  out.final_pathology = pathology.final;
  switch (pathology.final.severity) {
    case Severity::InvasiveCancer:
    case Severity::NonInvasiveCancer:
      out.cancer_subtypes = pathology.cancer_subtypes;
      return set_label(OutcomeLabel::ScreenDetectedCancer);
    case Severity::Benign:
    case Severity::Borderline:
    case Severity::HighRisk: return set_label(OutcomeLabel::BiopsyProvenBenign);
    default:
      out.final_pathology = {};
      return exclude(ExclusionReason::Birads45NoBiopsy,
                     "BI-RADS 4/5 pathway with only non-diagnostic pathology");
  }
}

// Labels every screening exam. Patients are processed independently (in
// parallel when threads > 1) and merged in exam_id order.
inline LabeledCohort label_cohort(const RawCohort& raw, const ValidationReport& validation,
                                  const TemporalWindows& windows, unsigned threads = 1) {
  const CohortIndex index(raw);
  const auto scores = exam_scores(raw);
  const auto timelines = build_timelines(raw);
  const LabelContext ctx{index, validation, scores};

  std::vector<const Timeline*> patients;
  patients.reserve(timelines.size());
  for (const auto& [_, t] : timelines) patients.push_back(&t);

  std::vector<std::vector<LabelDecision>> per_patient(patients.size());
  parallel_for(patients.size(), threads, [&](size_t i) {
    const Timeline& timeline = *patients[i];
    for (const ExamRecord* e : timeline) {
      if (e->exam_type != ExamType::Screening) continue;
      per_patient[i].push_back(assign_label(ctx, *e, match_followups(index, *e, timeline, windows)));
    }
  });

  LabeledCohort out;
  std::vector<LabelDecision> decisions;
  for (auto& list : per_patient) {
    for (auto& d : list) decisions.push_back(std::move(d));
  }
  std::sort(decisions.begin(), decisions.end(), [](const LabelDecision& a, const LabelDecision& b) {
    return a.exam.exam_id < b.exam.exam_id;
  });
  out.exams.reserve(decisions.size());
  for (auto label : enum_values<OutcomeLabel>()) out.label_counts[label] = 0;
  for (auto reason : enum_values<ExclusionReason>()) out.exclusion_counts[reason] = 0;
  for (auto& d : decisions) {
    ++out.label_counts[d.exam.label];
    if (d.exam.exclusion_reason) ++out.exclusion_counts[*d.exam.exclusion_reason];
    if (d.note) out.log.push_back(std::move(*d.note));
    out.exams.push_back(std::move(d.exam));
  }
  return out;
}

}  // namespace screeval
