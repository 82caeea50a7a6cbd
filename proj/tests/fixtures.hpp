#pragma once

// Hand-built and randomized raw cohorts shared by the tests.

#include <filesystem>
#include <string>

#include "screeval/ingest.hpp"
#include "screeval/rng.hpp"
#include "screeval/synth.hpp"

namespace fixture {

using namespace screeval;

inline const Date kOrigin = Date::from_ymd(2016, 3, 1);

// Small fluent builder; dates are day offsets from kOrigin.
class Scenario {
 public:
  Scenario& exam(const std::string& id, int day, ExamType type, const std::string& patient = "P1") {
    ExamRecord e;
    e.exam_id = id;
    e.patient_id = patient;
    e.exam_date = kOrigin.plus_days(day);
    e.exam_type = type;
    e.density = Density::B;
    e.race = Race::White;
    e.ethnicity = Ethnicity::NotHispanicOrLatino;
    e.age_at_exam = 60;
    raw.exams.push_back(e);
    return *this;
  }
  Scenario& screen(const std::string& id, int day, double score = 0.5, const std::string& patient = "P1") {
    exam(id, day, ExamType::Screening, patient);
    raw.scores.push_back({id, id + "-img1", score});
    return *this;
  }
  Scenario& diagnostic(const std::string& id, int day, const std::string& patient = "P1") {
    return exam(id, day, ExamType::Diagnostic, patient);
  }
  Scenario& finding(const std::string& id, const std::string& exam_id, Birads b, bool mass = false) {
    FindingRecord f;
    f.finding_id = id;
    f.exam_id = exam_id;
    f.birads = b;
    f.has_mass = mass;
    raw.findings.push_back(f);
    return *this;
  }
  Scenario& pathology(const std::string& finding_id, Procedure proc, Severity sev, int day,
                      std::optional<std::string> subtype = std::nullopt) {
    raw.pathology.push_back({finding_id, proc, sev, std::move(subtype), kOrigin.plus_days(day)});
    return *this;
  }

  RawCohort raw;
};

// Messy cohorts exercising every labeling branch: same-day exams, several
// screens per patient, out-of-window follow-ups, pathology on screening
// findings, pathology dated before its exam, missing and out-of-range scores.
inline RawCohort random_raw(uint64_t seed, int patients) {
  Rng rng(seed);
  RawCohort raw;
  int exam_n = 0, finding_n = 0, image_n = 0;
  const Severity severities[] = {Severity::NoPathology,      Severity::Benign,         Severity::Borderline,
                                 Severity::HighRisk,         Severity::NonInvasiveCancer, Severity::InvasiveCancer,
                                 Severity::NonBreastCancer};
  for (int p = 0; p < patients; ++p) {
    const std::string patient = "P" + std::to_string(1000 + p);
    const int exams = rng.between(1, 6);
    for (int k = 0; k < exams; ++k) {
      ExamRecord e;
      e.exam_id = "E" + std::to_string(100000 + exam_n++);
      e.patient_id = patient;
      e.exam_date = kOrigin.plus_days(rng.between(0, 600));
      e.exam_type = rng.bernoulli(0.55) ? ExamType::Screening : ExamType::Diagnostic;
      e.density = static_cast<Density>(rng.between(0, 4));
      e.race = static_cast<Race>(rng.between(0, 4));
      e.ethnicity = static_cast<Ethnicity>(rng.between(0, 2));
      e.age_at_exam = rng.between(35, 90);
      const bool screening = e.exam_type == ExamType::Screening;
      const int nf = rng.bernoulli(0.05) ? 0 : rng.between(1, 3);
      for (int j = 0; j < nf; ++j) {
        FindingRecord f;
        f.finding_id = "F" + std::to_string(100000 + finding_n++);
        f.exam_id = e.exam_id;
        f.laterality = static_cast<Laterality>(rng.between(0, 2));
        if (screening) {
          f.birads = rng.bernoulli(0.05) ? static_cast<Birads>(rng.between(3, 5))
                                         : static_cast<Birads>(rng.between(0, 2));
        } else {
          f.birads = rng.bernoulli(0.05) ? Birads::B0 : static_cast<Birads>(rng.between(1, 5));
        }
        f.has_mass = rng.bernoulli(0.3);
        f.has_asymmetry = rng.bernoulli(0.3);
        f.has_arch_distortion = rng.bernoulli(0.1);
        f.has_calcification = rng.bernoulli(0.3);
        if (f.has_mass) f.mass_shape = static_cast<MassShape>(rng.between(0, 3));
        if (f.has_mass && rng.bernoulli(0.5)) f.mass_margin = static_cast<MassMargin>(rng.between(0, 5));
        if (f.has_calcification) f.calc_morphology = static_cast<CalcMorphology>(rng.between(0, 3));
        if (f.has_asymmetry) f.asymmetry_type = static_cast<AsymmetryType>(rng.between(0, 3));
        const double p_path = screening ? 0.03 : (f.birads >= Birads::B4 ? 0.7 : 0.08);
        if (rng.bernoulli(p_path)) {
          const int chain = rng.between(1, 2);
          for (int c = 0; c < chain; ++c) {
            PathologyResult r;
            r.finding_id = f.finding_id;
            r.procedure = c == 0 ? Procedure::Biopsy : Procedure::Resection;
            r.severity = severities[rng.below(7)];
            if (r.severity == Severity::InvasiveCancer) r.subtype = rng.bernoulli(0.5) ? "IDC-NOS" : "ILC";
            if (r.severity == Severity::NonInvasiveCancer) r.subtype = "DCIS-NOS";
            r.result_date = e.exam_date.plus_days(rng.bernoulli(0.03) ? -rng.between(1, 5) : rng.between(0, 40));
            raw.pathology.push_back(r);
          }
        }
        raw.findings.push_back(f);
      }
      if (!rng.bernoulli(0.08)) {
        const int images = rng.between(1, 3);
        for (int i = 0; i < images; ++i) {
          const double s = rng.bernoulli(0.02) ? 1.0 + rng.uniform() : rng.uniform();
          raw.scores.push_back({e.exam_id, "I" + std::to_string(image_n++), s});
        }
      }
      raw.exams.push_back(e);
    }
  }
  return raw;
}

// A valid blueprint with randomized weights, windows and rates. Every label
// and exclusion reason gets weight, so all episode shapes are exercised.
inline CohortBlueprint random_blueprint(uint64_t seed, uint64_t max_patients) {
  Rng rng(derive_seed(seed, 0xb1));
  CohortBlueprint bp;
  bp.seed = seed;
  bp.n_patients = 1 + rng.below(max_patients);
  bp.min_screens_per_patient = rng.between(1, 2);
  bp.max_screens_per_patient = bp.min_screens_per_patient + rng.between(0, 2);
  for (auto& [_, w] : bp.label_weights) w = 0.05 + rng.uniform();
  for (auto& [_, w] : bp.exclusion_weights) w = 0.05 + rng.uniform();
  for (auto& [_, w] : bp.race) w = rng.uniform() + 0.01;
  for (auto& [_, w] : bp.density) w = rng.uniform() + 0.01;
  for (auto& [_, mix] : bp.finding_mix) {
    for (auto& [_, p] : mix) p = rng.uniform();
  }
  bp.missing_score_rate = rng.bernoulli(0.5) ? 0.0 : 0.1 * rng.uniform();
  bp.invasive_fraction = rng.uniform();
  bp.windows.diagnostic_followup_days = rng.between(1, 250);
  bp.windows.interval_cancer_days = rng.between(1, 500);
  bp.windows.negative_followup_min_days = rng.bernoulli(0.5) ? 0 : rng.between(1, 400);
  bp.windows.negative_followup_max_days = std::max(1, bp.windows.negative_followup_min_days) + rng.between(0, 1000);
  return bp;
}

// Fresh, empty scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("screeval_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace fixture
