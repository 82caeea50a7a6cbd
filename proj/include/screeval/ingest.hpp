#pragma once

// Loading, serializing and validating the four cohort tables.
//
// Files: exams.csv, findings.csv, pathology.csv, scores.csv. Each has one
// header row with the snake_case field names below (any column order, extra
// columns ignored). Enums use the uppercase tokens from records.hpp, dates are
// YYYY-MM-DD, booleans are true/false, and an empty field is an absent
// optional. Malformed rows are quarantined in RawCohort::rejects; a missing
// required column aborts the load.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "screeval/common.hpp"
#include "screeval/csv.hpp"
#include "screeval/records.hpp"

namespace screeval {

struct RejectRow {
  std::string file;
  size_t line = 0;
  std::string text;
  std::string reason;

  bool operator==(const RejectRow&) const = default;
};

struct RawCohort {
  std::vector<ExamRecord> exams;
  std::vector<FindingRecord> findings;
  std::vector<PathologyResult> pathology;
  std::vector<ImageScore> scores;
  std::vector<RejectRow> rejects;

  bool operator==(const RawCohort&) const = default;
};

struct CohortPaths {
  std::filesystem::path exams;
  std::filesystem::path findings;
  std::filesystem::path scores;
  std::filesystem::path pathology;

  static CohortPaths in_directory(const std::filesystem::path& dir) {
    return {dir / "exams.csv", dir / "findings.csv", dir / "scores.csv", dir / "pathology.csv"};
  }
};

namespace schema {
inline constexpr std::array<std::string_view, 8> kExamColumns{
    "exam_id", "patient_id", "exam_date", "exam_type",
    "density", "race",       "ethnicity", "age_at_exam"};
inline constexpr std::array<std::string_view, 13> kFindingColumns{
    "finding_id",     "exam_id",          "laterality",          "birads",
    "has_mass",       "has_asymmetry",    "has_arch_distortion", "has_calcification",
    "mass_shape",     "mass_margin",      "calc_morphology",     "calc_distribution",
    "asymmetry_type"};
inline constexpr std::array<std::string_view, 5> kPathologyColumns{
    "finding_id", "procedure", "severity", "subtype", "result_date"};
inline constexpr std::array<std::string_view, 3> kScoreColumns{"exam_id", "image_id",
                                                               "malignancy_score"};
}  // namespace schema

namespace detail {

// Row-level parse failure carrying the reject reason.
struct RowError {
  std::string reason;
};

class RowView {
 public:
  RowView(const std::vector<std::string>& fields, const std::vector<size_t>& columns,
          std::span<const std::string_view> names)
      : fields_(fields), columns_(columns), names_(names) {}

  const std::string& text(size_t i) const { return fields_[columns_[i]]; }

  const std::string& required(size_t i) const {
    const auto& value = text(i);
    if (value.empty()) throw RowError{"empty " + std::string(names_[i])};
    return value;
  }

  template <typename E>
  E token(size_t i) const {
    auto v = parse_token<E>(required(i));
    if (!v) throw RowError{"invalid " + std::string(names_[i]) + " '" + text(i) + "'"};
    return *v;
  }

  template <typename E>
  std::optional<E> optional_token(size_t i) const {
    if (text(i).empty()) return std::nullopt;
    return token<E>(i);
  }

  Date date(size_t i) const {
    auto d = Date::parse(required(i));
    if (!d) throw RowError{"invalid date '" + text(i) + "' in " + std::string(names_[i])};
    return *d;
  }

  bool boolean(size_t i) const {
    const auto& v = required(i);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw RowError{"invalid boolean '" + v + "' in " + std::string(names_[i])};
  }

 private:
  const std::vector<std::string>& fields_;
  const std::vector<size_t>& columns_;
  std::span<const std::string_view> names_;
};

// Reads one table, handing each well-formed row to `on_row`. Any RowError it
// throws moves the row to `rejects`.
inline void read_table(const std::filesystem::path& path,
                       std::span<const std::string_view> names,
                       std::vector<RejectRow>& rejects,
                       const std::function<void(const RowView&)>& on_row) {
  auto reader = csv::Reader::from_file(path.string());
  const std::string file = path.filename().string();
  csv::Record record;
  if (!reader.next(record)) {
    throw Error(ErrorCode::HeaderMismatch, file + ": missing header row");
  }
  const size_t width = record.fields.size();
  std::vector<size_t> columns(names.size());
  for (size_t i = 0; i < names.size(); ++i) {
    auto it = std::find(record.fields.begin(), record.fields.end(), names[i]);
    if (it == record.fields.end()) {
      throw Error(ErrorCode::HeaderMismatch,
                  file + ": missing required column '" + std::string(names[i]) + "'");
    }
    columns[i] = static_cast<size_t>(it - record.fields.begin());
  }
  while (reader.next(record)) {
    try {
      if (record.malformed) throw RowError{"malformed quoting"};
      if (record.fields.size() != width) {
        throw RowError{"expected " + std::to_string(width) + " fields, got " +
                       std::to_string(record.fields.size())};
      }
      on_row(RowView(record.fields, columns, names));
    } catch (const RowError& e) {
      rejects.push_back({file, record.line, record.raw, e.reason});
    }
  }
}

inline std::string bool_text(bool b) { return b ? "true" : "false"; }

template <typename E>
std::string optional_text(const std::optional<E>& v) {
  return v ? std::string(to_token(*v)) : std::string();
}

inline void open_for_write(std::ofstream& out, const std::filesystem::path& path) {
  out.open(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::FileNotFound, "cannot write '" + path.string() + "'");
}

}  // namespace detail

// Parses the four tables. Rows referencing unknown exams or findings are
// rejected so every accepted foreign key resolves.
inline RawCohort parse_cohort(const CohortPaths& paths) {
  RawCohort cohort;
  std::unordered_map<std::string, Date> exam_dates;

  detail::read_table(paths.exams, schema::kExamColumns, cohort.rejects,
                     [&](const detail::RowView& row) {
    ExamRecord exam;
    exam.exam_id = row.required(0);
    exam.patient_id = row.required(1);
    exam.exam_date = row.date(2);
    exam.exam_type = row.token<ExamType>(3);
    exam.density = row.text(4).empty() ? Density::Unknown : row.token<Density>(4);
    exam.race = row.text(5).empty() ? Race::Unknown : row.token<Race>(5);
    exam.ethnicity = row.text(6).empty() ? Ethnicity::Unknown : row.token<Ethnicity>(6);
    auto age = parse_int<int>(row.required(7));
    if (!age) throw detail::RowError{"invalid age_at_exam '" + row.text(7) + "'"};
    if (*age < 0) throw detail::RowError{"negative age_at_exam"};
    exam.age_at_exam = *age;
    if (!exam_dates.emplace(exam.exam_id, exam.exam_date).second) {
      throw detail::RowError{"duplicate exam_id '" + exam.exam_id + "'"};
    }
    cohort.exams.push_back(std::move(exam));
  });

  std::unordered_map<std::string, std::string> finding_exam;
  detail::read_table(paths.findings, schema::kFindingColumns, cohort.rejects,
                     [&](const detail::RowView& row) {
    FindingRecord f;
    f.finding_id = row.required(0);
    f.exam_id = row.required(1);
    f.laterality = row.token<Laterality>(2);
    f.birads = row.token<Birads>(3);
    f.has_mass = row.boolean(4);
    f.has_asymmetry = row.boolean(5);
    f.has_arch_distortion = row.boolean(6);
    f.has_calcification = row.boolean(7);
    f.mass_shape = row.optional_token<MassShape>(8);
    f.mass_margin = row.optional_token<MassMargin>(9);
    f.calc_morphology = row.optional_token<CalcMorphology>(10);
    f.calc_distribution = row.optional_token<CalcDistribution>(11);
    f.asymmetry_type = row.optional_token<AsymmetryType>(12);
    if (!f.descriptors_consistent()) {
      throw detail::RowError{"descriptor without matching finding flag"};
    }
    if (!exam_dates.contains(f.exam_id)) {
      throw detail::RowError{"unknown exam_id '" + f.exam_id + "'"};
    }
    if (!finding_exam.emplace(f.finding_id, f.exam_id).second) {
      throw detail::RowError{"duplicate finding_id '" + f.finding_id + "'"};
    }
    cohort.findings.push_back(std::move(f));
  });

  detail::read_table(paths.pathology, schema::kPathologyColumns, cohort.rejects,
                     [&](const detail::RowView& row) {
    PathologyResult p;
    p.finding_id = row.required(0);
    p.procedure = row.token<Procedure>(1);
    p.severity = row.token<Severity>(2);
    if (!row.text(3).empty()) p.subtype = row.text(3);
    p.result_date = row.date(4);
    auto it = finding_exam.find(p.finding_id);
    if (it == finding_exam.end()) {
      throw detail::RowError{"unknown finding_id '" + p.finding_id + "'"};
    }
    if (p.result_date < exam_dates.at(it->second)) {
      throw detail::RowError{"result_date precedes exam date"};
    }
    cohort.pathology.push_back(std::move(p));
  });

  detail::read_table(paths.scores, schema::kScoreColumns, cohort.rejects,
                     [&](const detail::RowView& row) {
    ImageScore s;
    s.exam_id = row.required(0);
    s.image_id = row.required(1);
    auto value = parse_double(row.required(2));
    if (!value || std::isnan(*value)) {
      throw detail::RowError{"invalid malignancy_score '" + row.text(2) + "'"};
    }
    if (*value < 0.0 || *value > 1.0) throw detail::RowError{"score out of [0,1]"};
    s.malignancy_score = *value;
    if (!exam_dates.contains(s.exam_id)) {
      throw detail::RowError{"unknown exam_id '" + s.exam_id + "'"};
    }
    cohort.scores.push_back(std::move(s));
  });

  return cohort;
}

inline RawCohort parse_cohort(const std::filesystem::path& dir) {
  return parse_cohort(CohortPaths::in_directory(dir));
}

// Writes the four tables (rejects are not serialized).
inline void write_cohort(const RawCohort& cohort, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto paths = CohortPaths::in_directory(dir);
  auto header = [](auto const& names) {
    return std::vector<std::string>(names.begin(), names.end());
  };
  std::ofstream out;

  detail::open_for_write(out, paths.exams);
  csv::write_row(out, header(schema::kExamColumns));
  for (const auto& e : cohort.exams) {
    csv::write_row(out, {e.exam_id, e.patient_id, e.exam_date.to_string(),
                         std::string(to_token(e.exam_type)), std::string(to_token(e.density)),
                         std::string(to_token(e.race)), std::string(to_token(e.ethnicity)),
                         std::to_string(e.age_at_exam)});
  }
  out.close();

  detail::open_for_write(out, paths.findings);
  csv::write_row(out, header(schema::kFindingColumns));
  for (const auto& f : cohort.findings) {
    csv::write_row(out, {f.finding_id, f.exam_id, std::string(to_token(f.laterality)),
                         std::string(to_token(f.birads)), detail::bool_text(f.has_mass),
                         detail::bool_text(f.has_asymmetry),
                         detail::bool_text(f.has_arch_distortion),
                         detail::bool_text(f.has_calcification),
                         detail::optional_text(f.mass_shape), detail::optional_text(f.mass_margin),
                         detail::optional_text(f.calc_morphology),
                         detail::optional_text(f.calc_distribution),
                         detail::optional_text(f.asymmetry_type)});
  }
  out.close();

  detail::open_for_write(out, paths.pathology);
  csv::write_row(out, header(schema::kPathologyColumns));
  for (const auto& p : cohort.pathology) {
    csv::write_row(out, {p.finding_id, std::string(to_token(p.procedure)),
                         std::string(to_token(p.severity)), p.subtype.value_or(""),
                         p.result_date.to_string()});
  }
  out.close();

  detail::open_for_write(out, paths.scores);
  csv::write_row(out, header(schema::kScoreColumns));
  for (const auto& s : cohort.scores) {
    csv::write_row(out, {s.exam_id, s.image_id, format_double(s.malignancy_score)});
  }
}

// Exam-level score: the highest image-level malignancy score.
inline double aggregate_exam_scores(std::string_view exam_id, std::span<const ImageScore> scores) {
  if (scores.empty()) {
    throw Error(ErrorCode::MissingScores, "no image scores for exam '" + std::string(exam_id) + "'");
  }
  double best = scores.front().malignancy_score;
  for (const auto& s : scores) best = std::max(best, s.malignancy_score);
  return best;
}

// One score per scored exam. Exams without in-range image scores are absent.
inline std::unordered_map<std::string, double> exam_scores(const RawCohort& cohort) {
  std::unordered_map<std::string, std::vector<ImageScore>> by_exam;
  for (const auto& s : cohort.scores) {
    if (s.malignancy_score >= 0.0 && s.malignancy_score <= 1.0) by_exam[s.exam_id].push_back(s);
  }
  std::unordered_map<std::string, double> out;
  out.reserve(by_exam.size());
  for (const auto& [exam_id, scores] : by_exam) {
    out.emplace(exam_id, aggregate_exam_scores(exam_id, scores));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

enum class ValidationRule {
  DuplicateExamId,
  InvalidBiradsForExamType,
  MissingBirads,
  DescriptorWithoutFlag,
  DanglingFinding,
  DanglingPathology,
  PathologyBeforeExam,
  DanglingScore,
  ScoreOutOfRange,
  MissingScores,
};

template <>
struct EnumTraits<ValidationRule> {
  static constexpr std::array<std::pair<ValidationRule, std::string_view>, 10> values{{
      {ValidationRule::DuplicateExamId, "DUPLICATE_EXAM_ID"},
      {ValidationRule::InvalidBiradsForExamType, "INVALID_BIRADS_FOR_EXAM_TYPE"},
      {ValidationRule::MissingBirads, "MISSING_BIRADS"},
      {ValidationRule::DescriptorWithoutFlag, "DESCRIPTOR_WITHOUT_FLAG"},
      {ValidationRule::DanglingFinding, "DANGLING_FINDING"},
      {ValidationRule::DanglingPathology, "DANGLING_PATHOLOGY"},
      {ValidationRule::PathologyBeforeExam, "PATHOLOGY_BEFORE_EXAM"},
      {ValidationRule::DanglingScore, "DANGLING_SCORE"},
      {ValidationRule::ScoreOutOfRange, "SCORE_OUT_OF_RANGE"},
      {ValidationRule::MissingScores, "MISSING_SCORES"},
  }};
};

struct ValidationIssue {
  ValidationRule rule;
  std::string subject;  // id of the offending row (exam, finding or image)
  std::string exam_id;  // owning exam when it resolves, else empty
  std::string message;

  auto operator<=>(const ValidationIssue&) const = default;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;  // sorted by (rule, subject, exam_id)
  // Exams whose assessments or pathology are unusable; the labeler excludes
  // them as InvalidBirads.
  std::set<std::string> invalid_exams;
  // Screening exams without image scores; labeled but not evaluated.
  std::set<std::string> unscored_exams;

  bool clean() const { return issues.empty(); }
};

inline ValidationReport validate_cohort(const RawCohort& raw) {
  ValidationReport report;
  auto add = [&](ValidationRule rule, std::string subject, std::string exam_id,
                 std::string message) {
    report.issues.push_back({rule, std::move(subject), std::move(exam_id), std::move(message)});
  };

  std::unordered_map<std::string, const ExamRecord*> exams;
  for (const auto& e : raw.exams) {
    if (!exams.emplace(e.exam_id, &e).second) {
      add(ValidationRule::DuplicateExamId, e.exam_id, e.exam_id, "exam_id appears more than once");
      report.invalid_exams.insert(e.exam_id);
    }
  }

  std::unordered_map<std::string, size_t> finding_count;
  std::unordered_map<std::string, const FindingRecord*> findings;
  for (const auto& f : raw.findings) {
    findings.emplace(f.finding_id, &f);
    auto it = exams.find(f.exam_id);
    if (it == exams.end()) {
      add(ValidationRule::DanglingFinding, f.finding_id, "",
          "finding references unknown exam '" + f.exam_id + "'");
      continue;
    }
    ++finding_count[f.exam_id];
    if (!f.descriptors_consistent()) {
      add(ValidationRule::DescriptorWithoutFlag, f.finding_id, f.exam_id,
          "descriptor set without matching finding flag");
    }
    const auto type = it->second->exam_type;
    const int b = static_cast<int>(f.birads);
    if ((type == ExamType::Screening && b >= 3) || (type == ExamType::Diagnostic && b == 0)) {
      add(ValidationRule::InvalidBiradsForExamType, f.finding_id, f.exam_id,
          "invalid BI-RADS for exam type: " + std::string(to_token(f.birads)) + " on " +
              std::string(to_token(type)));
      report.invalid_exams.insert(f.exam_id);
    }
  }

  for (const auto& e : raw.exams) {
    if (!finding_count.contains(e.exam_id)) {
      add(ValidationRule::MissingBirads, e.exam_id, e.exam_id, "exam has no findings");
      report.invalid_exams.insert(e.exam_id);
    }
  }

  for (const auto& p : raw.pathology) {
    auto f = findings.find(p.finding_id);
    if (f == findings.end() || !exams.contains(f->second->exam_id)) {
      add(ValidationRule::DanglingPathology, p.finding_id, "",
          "pathology references unknown finding '" + p.finding_id + "'");
      continue;
    }
    const auto& exam = *exams.at(f->second->exam_id);
    if (p.result_date < exam.exam_date) {
      add(ValidationRule::PathologyBeforeExam, p.finding_id, exam.exam_id,
          "result_date " + p.result_date.to_string() + " precedes exam date " +
              exam.exam_date.to_string());
      report.invalid_exams.insert(exam.exam_id);
    }
  }

  std::unordered_set<std::string> scored;
  for (const auto& s : raw.scores) {
    if (!exams.contains(s.exam_id)) {
      add(ValidationRule::DanglingScore, s.image_id, "",
          "score references unknown exam '" + s.exam_id + "'");
      continue;
    }
    if (!(s.malignancy_score >= 0.0 && s.malignancy_score <= 1.0)) {
      add(ValidationRule::ScoreOutOfRange, s.image_id, s.exam_id, "score out of [0,1]");
      continue;
    }
    scored.insert(s.exam_id);
  }
  for (const auto& e : raw.exams) {
    if (e.exam_type == ExamType::Screening && !scored.contains(e.exam_id)) {
      add(ValidationRule::MissingScores, e.exam_id, e.exam_id, "screening exam has no scores");
      report.unscored_exams.insert(e.exam_id);
    }
  }

  std::sort(report.issues.begin(), report.issues.end());
  return report;
}

}  // namespace screeval
