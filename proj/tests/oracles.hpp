#pragma once

// Slow, obviously-correct reference implementations used as test oracles.
// None of these share code paths with the library beyond the record types.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "screeval/ingest.hpp"
#include "screeval/labeler.hpp"
#include "screeval/linkage.hpp"

namespace oracle {

using namespace screeval;

// AUROC over all positive/negative pairs; ties count one half.
inline double auroc_pairs(const std::vector<double>& pos, const std::vector<double>& neg) {
  double wins = 0.0;
  for (double p : pos) {
    for (double n : neg) {
      if (p > n) {
        wins += 1.0;
      } else if (p == n) {
        wins += 0.5;
      }
    }
  }
  return wins / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

struct Counts {
  long tp = 0, fp = 0, tn = 0, fn = 0;
};

inline Counts count_at(const std::vector<double>& pos, const std::vector<double>& neg, double t) {
  Counts c;
  for (double p : pos) {
    if (p >= t) {
      ++c.tp;
    } else {
      ++c.fn;
    }
  }
  for (double n : neg) {
    if (n >= t) {
      ++c.fp;
    } else {
      ++c.tn;
    }
  }
  return c;
}

// Inverted-CDF quantile: smallest value whose empirical CDF reaches q.
inline double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  for (size_t i = 0; i < v.size(); ++i) {
    if (static_cast<double>(i + 1) / static_cast<double>(v.size()) >= q - 1e-12) return v[i];
  }
  return v.back();
}

// ---------------------------------------------------------------------------
// Validation, one rule at a time.
// ---------------------------------------------------------------------------

struct ValidationFlags {
  std::set<std::pair<ValidationRule, std::string>> issues;  // (rule, subject)
  std::set<std::string> invalid;
  std::set<std::string> unscored;
};

inline ValidationFlags validate(const RawCohort& raw) {
  ValidationFlags out;
  auto exam_by_id = [&](const std::string& id) -> const ExamRecord* {
    for (const auto& e : raw.exams) {
      if (e.exam_id == id) return &e;
    }
    return nullptr;
  };
  auto finding_by_id = [&](const std::string& id) -> const FindingRecord* {
    for (const auto& f : raw.findings) {
      if (f.finding_id == id) return &f;
    }
    return nullptr;
  };

  // duplicate exam ids
  for (size_t i = 0; i < raw.exams.size(); ++i) {
    for (size_t j = 0; j < i; ++j) {
      if (raw.exams[i].exam_id == raw.exams[j].exam_id) {
        out.issues.insert({ValidationRule::DuplicateExamId, raw.exams[i].exam_id});
        out.invalid.insert(raw.exams[i].exam_id);
        break;
      }
    }
  }
  // findings: dangling, descriptor flags, type/assessment
  for (const auto& f : raw.findings) {
    const ExamRecord* e = exam_by_id(f.exam_id);
    if (!e) {
      out.issues.insert({ValidationRule::DanglingFinding, f.finding_id});
      continue;
    }
    const bool descriptor_ok = (!f.mass_shape || f.has_mass) && (!f.mass_margin || f.has_mass) &&
                               (!f.calc_morphology || f.has_calcification) &&
                               (!f.calc_distribution || f.has_calcification) &&
                               (!f.asymmetry_type || f.has_asymmetry);
    if (!descriptor_ok) out.issues.insert({ValidationRule::DescriptorWithoutFlag, f.finding_id});
    const bool screening = e->exam_type == ExamType::Screening;
    const bool bad = screening ? (f.birads == Birads::B3 || f.birads == Birads::B4 || f.birads == Birads::B5)
                               : f.birads == Birads::B0;
    if (bad) {
      out.issues.insert({ValidationRule::InvalidBiradsForExamType, f.finding_id});
      out.invalid.insert(e->exam_id);
    }
  }
  // exams with no findings
  for (const auto& e : raw.exams) {
    bool any = false;
    for (const auto& f : raw.findings) any = any || f.exam_id == e.exam_id;
    if (!any) {
      out.issues.insert({ValidationRule::MissingBirads, e.exam_id});
      out.invalid.insert(e.exam_id);
    }
  }
  // pathology
  for (const auto& p : raw.pathology) {
    const FindingRecord* f = finding_by_id(p.finding_id);
    const ExamRecord* e = f ? exam_by_id(f->exam_id) : nullptr;
    if (!e) {
      out.issues.insert({ValidationRule::DanglingPathology, p.finding_id});
      continue;
    }
    if (p.result_date.days_since(e->exam_date) < 0) {
      out.issues.insert({ValidationRule::PathologyBeforeExam, p.finding_id});
      out.invalid.insert(e->exam_id);
    }
  }
  // scores
  for (const auto& s : raw.scores) {
    if (!exam_by_id(s.exam_id)) {
      out.issues.insert({ValidationRule::DanglingScore, s.image_id});
    } else if (s.malignancy_score < 0.0 || s.malignancy_score > 1.0) {
      out.issues.insert({ValidationRule::ScoreOutOfRange, s.image_id});
    }
  }
  for (const auto& e : raw.exams) {
    if (e.exam_type != ExamType::Screening) continue;
    bool scored = false;
    for (const auto& s : raw.scores) {
      scored = scored || (s.exam_id == e.exam_id && s.malignancy_score >= 0.0 && s.malignancy_score <= 1.0);
    }
    if (!scored) {
      out.issues.insert({ValidationRule::MissingScores, e.exam_id});
      out.unscored.insert(e.exam_id);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Labels straight from the outcome definitions, evaluated per screening exam
// with nested scans over the raw tables.
// ---------------------------------------------------------------------------

struct OracleLabel {
  OutcomeLabel label = OutcomeLabel::Excluded;
  std::optional<ExclusionReason> reason;
  Severity severity = Severity::NoPathology;
};

inline int rank(Severity s) {
  switch (s) {
    case Severity::NoPathology: return 0;
    case Severity::Benign: return 1;
    case Severity::Borderline: return 2;
    case Severity::HighRisk: return 3;
    case Severity::NonInvasiveCancer: return 4;
    case Severity::InvasiveCancer: return 5;
    case Severity::NonBreastCancer: return -1;
  }
  return -1;
}

inline std::map<std::string, OracleLabel> label(const RawCohort& raw, const TemporalWindows& w) {
  const ValidationFlags flags = validate(raw);
  std::map<std::string, OracleLabel> out;

  auto findings_of = [&](const std::string& exam_id) {
    std::vector<const FindingRecord*> v;
    for (const auto& f : raw.findings) {
      if (f.exam_id == exam_id) v.push_back(&f);
    }
    return v;
  };
  auto pathology_of = [&](const std::string& finding_id) {
    std::vector<const PathologyResult*> v;
    for (const auto& p : raw.pathology) {
      if (p.finding_id == finding_id) v.push_back(&p);
    }
    return v;
  };
  // Screen owning a diagnostic: the latest screening exam of the patient dated
  // strictly before it (ties on date broken by larger exam_id).
  auto owner_of = [&](const ExamRecord& d) -> const ExamRecord* {
    const ExamRecord* best = nullptr;
    for (const auto& e : raw.exams) {
      if (e.patient_id != d.patient_id || e.exam_type != ExamType::Screening) continue;
      if (!(e.exam_date < d.exam_date)) continue;
      if (!best || std::tie(e.exam_date, e.exam_id) > std::tie(best->exam_date, best->exam_id)) best = &e;
    }
    return best;
  };

  struct Worst {
    bool any = false;
    bool nbc = false;
    Severity sev = Severity::NoPathology;
  };
  // Most severe per finding chain, then across findings; NBC anywhere flagged.
  auto pathology_over = [&](const std::vector<const ExamRecord*>& exams) {
    Worst w;
    for (const auto* d : exams) {
      for (const auto* f : findings_of(d->exam_id)) {
        for (const auto* p : pathology_of(f->finding_id)) {
          w.any = true;
          if (p->severity == Severity::NonBreastCancer) {
            w.nbc = true;
          } else if (rank(p->severity) > rank(w.sev)) {
            w.sev = p->severity;
          }
        }
      }
    }
    return w;
  };

  for (const auto& s : raw.exams) {
    if (s.exam_type != ExamType::Screening) continue;
    OracleLabel& o = out[s.exam_id];
    auto excl = [&](ExclusionReason r) {
      o.label = OutcomeLabel::Excluded;
      o.reason = r;
      o.severity = Severity::NoPathology;
    };
    const auto fs = findings_of(s.exam_id);
    bool has_b0 = false, has_b3plus = false, screen_path = false;
    for (const auto* f : fs) {
      has_b0 = has_b0 || f->birads == Birads::B0;
      has_b3plus = has_b3plus || static_cast<int>(f->birads) >= 3;
      screen_path = screen_path || !pathology_of(f->finding_id).empty();
    }
    if (flags.invalid.contains(s.exam_id) || fs.empty() || has_b3plus || screen_path) {
      excl(ExclusionReason::InvalidBirads);
      continue;
    }

    std::vector<const ExamRecord*> recall, interval;
    bool followup = false;
    for (const auto& e : raw.exams) {
      if (e.patient_id != s.patient_id) continue;
      const int days = e.exam_date.days_since(s.exam_date);
      if (days <= 0) continue;
      if (days >= std::max(1, w.negative_followup_min_days) && days <= w.negative_followup_max_days) {
        followup = true;
      }
      if (e.exam_type != ExamType::Diagnostic || owner_of(e) != &s) continue;
      if (days <= w.diagnostic_followup_days) recall.push_back(&e);
      if (days <= w.interval_cancer_days) interval.push_back(&e);
    }

    if (!has_b0) {
      const Worst iv = pathology_over(interval);
      if (iv.nbc) {
        excl(ExclusionReason::NonBreastCancer);
      } else if (iv.sev == Severity::InvasiveCancer || iv.sev == Severity::NonInvasiveCancer) {
        o.label = OutcomeLabel::IntervalCancer;
        o.severity = iv.sev;
      } else if (followup) {
        o.label = OutcomeLabel::ScreenNegative;
      } else {
        excl(ExclusionReason::NoFollowup);
      }
    } else if (recall.empty()) {
      excl(ExclusionReason::AbnormalNoDiagnostic);
    } else {
      int worst = -1;
      bool invalid_diag = false;
      for (const auto* d : recall) {
        invalid_diag = invalid_diag || flags.invalid.contains(d->exam_id);
        for (const auto* f : findings_of(d->exam_id)) worst = std::max(worst, static_cast<int>(f->birads));
      }
      const Worst pw = pathology_over(recall);
      if (invalid_diag || worst < 0) {
        excl(ExclusionReason::InvalidBirads);
      } else if (worst <= 3) {
        if (pw.any) {
          excl(ExclusionReason::InvalidBirads);
        } else {
          o.label = OutcomeLabel::DiagnosticNegative;
        }
      } else if (!pw.any) {
        excl(ExclusionReason::Birads45NoBiopsy);
      } else if (pw.nbc) {
        excl(ExclusionReason::NonBreastCancer);
      } else if (pw.sev == Severity::InvasiveCancer || pw.sev == Severity::NonInvasiveCancer) {
        o.label = OutcomeLabel::ScreenDetectedCancer;
        o.severity = pw.sev;
      } else if (pw.sev == Severity::Benign || pw.sev == Severity::Borderline || pw.sev == Severity::HighRisk) {
        o.label = OutcomeLabel::BiopsyProvenBenign;
        o.severity = pw.sev;
      } else {
        excl(ExclusionReason::Birads45NoBiopsy);
      }
    }
    if (o.label != OutcomeLabel::Excluded && flags.unscored.contains(s.exam_id)) {
      o.reason = ExclusionReason::MissingScores;
    }
  }
  return out;
}

}  // namespace oracle
