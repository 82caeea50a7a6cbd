#pragma once

// Per-patient timelines and follow-up resolution for screening exams.

#include <algorithm>
#include <map>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "screeval/common.hpp"
#include "screeval/ingest.hpp"
#include "screeval/records.hpp"

namespace screeval {

struct TemporalWindows {
  int diagnostic_followup_days = 183;
  int interval_cancer_days = 365;
  int negative_followup_min_days = 0;
  int negative_followup_max_days = 365;

  bool valid() const {
    return diagnostic_followup_days >= 0 && interval_cancer_days >= 0 &&
           negative_followup_min_days >= 0 &&
           negative_followup_min_days <= negative_followup_max_days;
  }

  bool operator==(const TemporalWindows&) const = default;
};

// Lookup tables over a RawCohort. Findings are ordered by finding_id and
// pathology by (date, procedure, severity rank, subtype) so results never
// depend on input row order.
class CohortIndex {
 public:
  explicit CohortIndex(const RawCohort& cohort) : cohort_(cohort) {
    for (const auto& e : cohort.exams) exams_.emplace(e.exam_id, &e);
    for (const auto& f : cohort.findings) findings_[f.exam_id].push_back(&f);
    for (auto& [_, list] : findings_) {
      std::sort(list.begin(), list.end(),
                [](auto* a, auto* b) { return a->finding_id < b->finding_id; });
    }
    for (const auto& p : cohort.pathology) pathology_[p.finding_id].push_back(p);
    for (auto& [_, chain] : pathology_) {
      std::sort(chain.begin(), chain.end(), [](const PathologyResult& a, const PathologyResult& b) {
        auto key = [](const PathologyResult& p) {
          return std::tuple(p.result_date, static_cast<int>(p.procedure),
                            severity_rank(p.severity), p.subtype.value_or(""));
        };
        return key(a) < key(b);
      });
    }
  }

  const RawCohort& cohort() const { return cohort_; }

  const ExamRecord* exam(const std::string& exam_id) const {
    auto it = exams_.find(exam_id);
    return it == exams_.end() ? nullptr : it->second;
  }

  std::span<const FindingRecord* const> findings(const std::string& exam_id) const {
    auto it = findings_.find(exam_id);
    if (it == findings_.end()) return {};
    return it->second;
  }

  std::span<const PathologyResult> pathology(const std::string& finding_id) const {
    auto it = pathology_.find(finding_id);
    if (it == pathology_.end()) return {};
    return it->second;
  }

 private:
  const RawCohort& cohort_;
  std::unordered_map<std::string, const ExamRecord*> exams_;
  std::unordered_map<std::string, std::vector<const FindingRecord*>> findings_;
  std::unordered_map<std::string, std::vector<PathologyResult>> pathology_;
};

using Timeline = std::vector<const ExamRecord*>;

// Canonical timeline order: date, then Screening before Diagnostic, then id.
inline bool timeline_before(const ExamRecord& a, const ExamRecord& b) {
  return std::tuple(a.exam_date, static_cast<int>(a.exam_type), std::string_view(a.exam_id)) <
         std::tuple(b.exam_date, static_cast<int>(b.exam_type), std::string_view(b.exam_id));
}

inline std::map<std::string, Timeline> build_timelines(const RawCohort& cohort) {
  std::map<std::string, Timeline> timelines;
  for (const auto& e : cohort.exams) timelines[e.patient_id].push_back(&e);
  for (auto& [_, timeline] : timelines) {
    std::sort(timeline.begin(), timeline.end(),
              [](auto* a, auto* b) { return timeline_before(*a, *b); });
  }
  return timelines;
}

struct FindingPathology {
  std::string finding_id;
  Birads birads = Birads::B1;
  std::vector<PathologyResult> chain;
};

struct LinkedDiagnostic {
  std::string exam_id;
  int days_elapsed = 0;
  std::vector<FindingPathology> findings;

  std::optional<Birads> max_birads() const {
    std::optional<Birads> best;
    for (const auto& f : findings) {
      if (!best || f.birads > *best) best = f.birads;
    }
    return best;
  }

  bool has_pathology() const {
    return std::any_of(findings.begin(), findings.end(),
                       [](const FindingPathology& f) { return !f.chain.empty(); });
  }
};

struct FollowupSet {
  std::string screening_exam_id;
  // Recall diagnostics: owned by this screen, 0 < days <= diagnostic window.
  std::vector<LinkedDiagnostic> diagnostics;
  bool any_followup_within_window = false;
  // Pathology of the recall diagnostics' findings, date ordered.
  std::vector<PathologyResult> pathology_chain;
  // Every diagnostic owned by this screen within the interval-cancer window,
  // including problem evaluations. Consulted only for normal screens.
  std::vector<LinkedDiagnostic> interval_diagnostics;
};

// A diagnostic exam belongs to the nearest screening exam strictly earlier in
// date; no diagnostic is attached to more than one screen.
inline const ExamRecord* owning_screen(std::span<const ExamRecord* const> timeline,
                                       const ExamRecord& diagnostic) {
  const ExamRecord* owner = nullptr;
  for (const ExamRecord* e : timeline) {
    if (e->exam_date >= diagnostic.exam_date) break;
    if (e->exam_type == ExamType::Screening) owner = e;
  }
  return owner;
}

inline FollowupSet match_followups(const CohortIndex& index, const ExamRecord& screen,
                                   std::span<const ExamRecord* const> timeline,
                                   const TemporalWindows& windows) {
  FollowupSet out;
  out.screening_exam_id = screen.exam_id;
  const int earliest_followup = std::max(1, windows.negative_followup_min_days);

  auto link = [&](const ExamRecord& d, int days) {
    LinkedDiagnostic linked{d.exam_id, days, {}};
    for (const FindingRecord* f : index.findings(d.exam_id)) {
      auto chain = index.pathology(f->finding_id);
      linked.findings.push_back({f->finding_id, f->birads, {chain.begin(), chain.end()}});
    }
    return linked;
  };

  for (const ExamRecord* e : timeline) {
    const int days = e->exam_date.days_since(screen.exam_date);
    if (days <= 0) continue;
    if (days >= earliest_followup && days <= windows.negative_followup_max_days) {
      out.any_followup_within_window = true;
    }
    if (e->exam_type != ExamType::Diagnostic) continue;
    if (days > windows.diagnostic_followup_days && days > windows.interval_cancer_days) continue;
    if (owning_screen(timeline, *e) != &screen) continue;
    if (days <= windows.diagnostic_followup_days) out.diagnostics.push_back(link(*e, days));
    if (days <= windows.interval_cancer_days) out.interval_diagnostics.push_back(link(*e, days));
  }

  for (const auto& d : out.diagnostics) {
    for (const auto& f : d.findings) {
      out.pathology_chain.insert(out.pathology_chain.end(), f.chain.begin(), f.chain.end());
    }
  }
  std::stable_sort(out.pathology_chain.begin(), out.pathology_chain.end(),
                   [](const PathologyResult& a, const PathologyResult& b) {
                     return a.result_date < b.result_date;
                   });
  return out;
}

struct FinalPathology {
  Severity severity = Severity::NoPathology;
  std::optional<std::string> subtype;
  std::optional<Severity> upgraded_from;  // biopsy severity superseded by resection
  bool non_breast_cancer = false;         // chain contains a non-breast cancer

  bool operator==(const FinalPathology&) const = default;
};

// Most severe result along one finding's biopsy -> resection chain.
inline FinalPathology resolve_pathology_chain(std::span<const PathologyResult> chain) {
  FinalPathology out;
  std::optional<Severity> biopsy, resection;
  const PathologyResult* best = nullptr;
  for (const auto& p : chain) {
    if (p.severity == Severity::NonBreastCancer) {
      out.non_breast_cancer = true;
      continue;
    }
    if (!best || severity_rank(p.severity) > severity_rank(best->severity)) best = &p;
    auto& slot = p.procedure == Procedure::Biopsy ? biopsy : resection;
    if (!slot || severity_rank(p.severity) > severity_rank(*slot)) slot = p.severity;
  }
  if (best) {
    out.severity = best->severity;
    out.subtype = best->subtype;
  }
  if (biopsy && resection && severity_rank(*resection) > severity_rank(*biopsy)) {
    out.upgraded_from = *biopsy;
  }
  return out;
}

struct ExamPathology {
  FinalPathology final;
  // Distinct subtype codes of findings whose final severity is a cancer.
  std::vector<std::string> cancer_subtypes;
  bool any_pathology = false;
};

// Resolves each finding's chain, then takes the most severe finding.
inline ExamPathology resolve_exam_pathology(std::span<const LinkedDiagnostic> diagnostics) {
  ExamPathology out;
  std::set<std::string> subtypes;
  bool have_best = false;
  for (const auto& d : diagnostics) {
    for (const auto& f : d.findings) {
      if (f.chain.empty()) continue;
      out.any_pathology = true;
      FinalPathology r = resolve_pathology_chain(f.chain);
      out.final.non_breast_cancer |= r.non_breast_cancer;
      if (is_cancer(r.severity) && r.subtype) subtypes.insert(*r.subtype);
      if (!have_best || severity_rank(r.severity) > severity_rank(out.final.severity)) {
        const bool nbc = out.final.non_breast_cancer;
        out.final = r;
        out.final.non_breast_cancer = nbc;
        have_best = true;
      }
    }
  }
  out.cancer_subtypes.assign(subtypes.begin(), subtypes.end());
  return out;
}

}  // namespace screeval
