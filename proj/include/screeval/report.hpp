#pragma once

// Result tables: demographics by outcome, stratified metrics, score
// distributions, false-negative failure analysis and descriptor strata.
// Every table is written as CSV plus a JSON-lines twin.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "screeval/csv.hpp"
#include "screeval/labeler.hpp"
#include "screeval/metrics.hpp"
#include "screeval/stratify.hpp"

namespace screeval {

using Cell = std::variant<std::monostate, int64_t, double, std::string>;

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

inline std::string cell_text(const Cell& c) {
  struct Visitor {
    std::string operator()(std::monostate) const { return ""; }
    std::string operator()(int64_t v) const { return std::to_string(v); }
    std::string operator()(double v) const { return format_double(v); }
    std::string operator()(const std::string& v) const { return v; }
  };
  return std::visit(Visitor{}, c);
}

inline nlohmann::ordered_json cell_json(const Cell& c) {
  struct Visitor {
    nlohmann::ordered_json operator()(std::monostate) const { return nullptr; }
    nlohmann::ordered_json operator()(int64_t v) const { return v; }
    nlohmann::ordered_json operator()(double v) const { return v; }
    nlohmann::ordered_json operator()(const std::string& v) const { return v; }
  };
  return std::visit(Visitor{}, c);
}

inline Cell optional_cell(const std::optional<double>& v) {
  return v ? Cell{*v} : Cell{};
}

inline void write_csv(const Table& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::FileNotFound, "cannot write '" + path.string() + "'");
  csv::write_row(out, table.columns);
  for (const auto& row : table.rows) {
    std::vector<std::string> fields;
    fields.reserve(row.size());
    for (const auto& c : row) fields.push_back(cell_text(c));
    csv::write_row(out, fields);
  }
}

inline void write_jsonl(const Table& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::FileNotFound, "cannot write '" + path.string() + "'");
  for (const auto& row : table.rows) {
    nlohmann::ordered_json obj = nlohmann::ordered_json::object();
    for (size_t i = 0; i < table.columns.size(); ++i) obj[table.columns[i]] = cell_json(row[i]);
    out << obj.dump() << '\n';
  }
}

// ---------------------------------------------------------------------------
// Demographics by outcome
// ---------------------------------------------------------------------------

// Column order of the demographics table after Overall.
inline constexpr std::array<OutcomeLabel, 5> kOutcomeColumns{
    OutcomeLabel::ScreenNegative, OutcomeLabel::DiagnosticNegative, OutcomeLabel::BiopsyProvenBenign,
    OutcomeLabel::IntervalCancer, OutcomeLabel::ScreenDetectedCancer};

struct DemographicsCell {
  uint64_t n = 0;
  double percent = 0.0;
};

struct DemographicsRow {
  std::string section;
  std::string category;
  std::array<DemographicsCell, 6> cells;  // Overall, then kOutcomeColumns
};

// Counts per category and outcome over every labeled (non-excluded) screening
// exam. Density percentages use the known-density total as denominator;
// finding rows may sum past 100 within a column.
inline std::vector<DemographicsRow> demographics_table(const LabeledCohort& cohort) {
  auto column_of = [](OutcomeLabel label) -> std::optional<size_t> {
    for (size_t i = 0; i < kOutcomeColumns.size(); ++i) {
      if (kOutcomeColumns[i] == label) return i + 1;
    }
    return std::nullopt;
  };

  std::array<uint64_t, 6> totals{};
  std::array<uint64_t, 6> known_density{};
  std::vector<std::pair<const LabeledExam*, size_t>> members;
  for (const auto& e : cohort.exams) {
    auto col = column_of(e.label);
    if (!col) continue;
    members.emplace_back(&e, *col);
    ++totals[0];
    ++totals[*col];
    if (e.density != Density::Unknown) {
      ++known_density[0];
      ++known_density[*col];
    }
  }

  std::vector<DemographicsRow> rows;
  auto add_row = [&](std::string section, std::string category, auto&& predicate,
                     const std::array<uint64_t, 6>& denominators) {
    DemographicsRow row{std::move(section), std::move(category), {}};
    for (const auto& [e, col] : members) {
      if (!predicate(*e)) continue;
      ++row.cells[0].n;
      ++row.cells[col].n;
    }
    for (size_t c = 0; c < 6; ++c) {
      row.cells[c].percent =
          denominators[c] == 0 ? 0.0 : 100.0 * static_cast<double>(row.cells[c].n) / denominators[c];
    }
    rows.push_back(std::move(row));
  };

  add_row("n", "", [](const LabeledExam&) { return true; }, totals);
  for (auto race : enum_values<Race>()) {
    add_row("race", std::string(to_token(race)), [race](const LabeledExam& e) { return e.race == race; },
            totals);
  }
  for (auto eth : enum_values<Ethnicity>()) {
    add_row("ethnicity", std::string(to_token(eth)),
            [eth](const LabeledExam& e) { return e.ethnicity == eth; }, totals);
  }
  for (auto bin : enum_values<AgeBin>()) {
    add_row("age", std::string(to_token(bin)),
            [bin](const LabeledExam& e) { return age_bin(e.age_at_exam) == bin; }, totals);
  }
  for (auto d : {Density::A, Density::B, Density::C, Density::D}) {
    add_row("density", std::string(to_token(d)), [d](const LabeledExam& e) { return e.density == d; },
            known_density);
  }
  for (auto s : {Severity::NoPathology, Severity::Benign, Severity::Borderline, Severity::HighRisk,
                 Severity::InvasiveCancer, Severity::NonInvasiveCancer}) {
    add_row("screen_detected_pathology", std::string(to_token(s)),
            [s](const LabeledExam& e) { return e.screen_detected_pathology() == s; }, totals);
  }
  for (auto t : enum_values<FindingType>()) {
    add_row("finding_type", std::string(to_token(t)),
            [t](const LabeledExam& e) { return e.finding_types.contains(t); }, totals);
  }
  return rows;
}

inline std::string column_key(size_t column) {
  if (column == 0) return "overall";
  std::string key(to_token(kOutcomeColumns[column - 1]));
  for (auto& ch : key) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return key;
}

inline Table demographics_machine_table(const std::vector<DemographicsRow>& rows) {
  Table t{"table_demographics", {"section", "category"}, {}};
  for (size_t c = 0; c < 6; ++c) {
    t.columns.push_back(column_key(c) + "_n");
    t.columns.push_back(column_key(c) + "_pct");
  }
  for (const auto& r : rows) {
    std::vector<Cell> row{r.section, r.category};
    for (const auto& cell : r.cells) {
      row.emplace_back(static_cast<int64_t>(cell.n));
      row.emplace_back(cell.percent);
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline std::string render_demographics(const std::vector<DemographicsRow>& rows) {
  std::string out = "section,category";
  for (size_t c = 0; c < 6; ++c) out += "," + column_key(c);
  out += '\n';
  for (const auto& r : rows) {
    out += r.section + "," + r.category;
    for (const auto& cell : r.cells) {
      out += ",";
      out += std::to_string(cell.n) + " (" + format_fixed(cell.percent, 1) + ")";
    }
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Stratified metrics
// ---------------------------------------------------------------------------

inline std::string render_value(const std::optional<double>& v) {
  return v ? format_fixed(*v, 2) : std::string("N/A");
}

inline std::string render_metric(const MetricsBundle& b, Metric m) {
  auto v = b.value(m);
  std::string out = render_value(v);
  auto it = b.ci.find(m);
  if (it == b.ci.end()) return out + " (N/A)";
  return out + " (" + format_fixed(it->second.low, 2) + ", " + format_fixed(it->second.high, 2) + ")";
}

// Rows in canonical axis order with Overall first, whatever the input order.
inline std::vector<SubgroupResult> canonical_order(std::vector<SubgroupResult> results) {
  std::sort(results.begin(), results.end(),
            [](const SubgroupResult& a, const SubgroupResult& b) { return a.spec < b.spec; });
  return results;
}

inline Table metrics_table(const std::vector<SubgroupResult>& input) {
  const auto results = canonical_order(input);
  Table t{"table_metrics",
          {"axis", "group", "total_negatives", "total_positives", "negative_pct", "positive_pct", "evaluable",
           "tp", "fp", "tn", "fn"},
          {}};
  for (auto m : enum_values<Metric>()) {
    std::string name(to_token(m));
    t.columns.push_back(name);
    t.columns.push_back(name + "_low");
    t.columns.push_back(name + "_high");
  }
  for (const auto& r : results) {
    const auto& b = r.bundle;
    std::vector<Cell> row{std::string(to_token(r.spec.axis)), r.spec.selector, static_cast<int64_t>(b.n_neg),
                          static_cast<int64_t>(b.n_pos)};
    if (r.n_total > 0) {
      row.emplace_back(100.0 * static_cast<double>(b.n_neg) / static_cast<double>(r.n_total));
      row.emplace_back(100.0 * static_cast<double>(b.n_pos) / static_cast<double>(r.n_total));
    } else {
      row.emplace_back();
      row.emplace_back();
    }
    row.emplace_back(std::string(b.evaluable() ? "true" : "false"));
    row.emplace_back(static_cast<int64_t>(b.counts.tp));
    row.emplace_back(static_cast<int64_t>(b.counts.fp));
    row.emplace_back(static_cast<int64_t>(b.counts.tn));
    row.emplace_back(static_cast<int64_t>(b.counts.fn));
    for (auto m : enum_values<Metric>()) {
      row.push_back(optional_cell(b.value(m)));
      auto it = b.ci.find(m);
      if (it != b.ci.end()) {
        row.emplace_back(it->second.low);
        row.emplace_back(it->second.high);
      } else {
        row.emplace_back();
        row.emplace_back();
      }
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline std::string render_metrics_row(const SubgroupResult& r) {
  const auto& b = r.bundle;
  std::string out = std::string(to_token(r.spec.axis)) + " " + r.spec.selector;
  out += " | negatives " + std::to_string(b.n_neg) + " | positives " + std::to_string(b.n_pos);
  for (auto m : {Metric::Precision, Metric::Recall, Metric::Fpr, Metric::Tnr, Metric::Fnr, Metric::Auroc}) {
    out += " | ";
    out += m == Metric::Auroc ? "auc" : to_token(m);
    out += " " + render_metric(b, m);
  }
  return out;
}

inline std::string render_metrics_table(const std::vector<SubgroupResult>& input) {
  std::string out;
  for (const auto& r : canonical_order(input)) out += render_metrics_row(r) + '\n';
  return out;
}

// ---------------------------------------------------------------------------
// Score distributions
// ---------------------------------------------------------------------------

enum class Grouping { OutcomeLabel, PathologySeverity, PathologySubtype, FindingTypeByOutcome };

template <>
struct EnumTraits<Grouping> {
  static constexpr std::array<std::pair<Grouping, std::string_view>, 4> values{{
      {Grouping::OutcomeLabel, "outcome_label"},
      {Grouping::PathologySeverity, "pathology_severity"},
      {Grouping::PathologySubtype, "pathology_subtype"},
      {Grouping::FindingTypeByOutcome, "finding_type_by_outcome"},
  }};
};

struct DistributionSummary {
  std::string group;
  uint64_t n = 0;
  uint64_t n_above_threshold = 0;
  double fraction_above_threshold = 0.0;
  std::vector<uint64_t> histogram;  // equal-width bins over [0,1]; 1.0 lands in the last bin
  std::optional<double> p25, median, p75;
};

inline size_t histogram_bin(double score, size_t bins) {
  const auto b = static_cast<size_t>(std::floor(score * static_cast<double>(bins)));
  return std::min(b, bins - 1);
}

inline DistributionSummary summarize_scores(std::string group, std::vector<double> scores, double threshold,
                                            size_t bins) {
  if (bins == 0) throw Error(ErrorCode::InvalidConfig, "histogram needs at least one bin");
  DistributionSummary s;
  s.group = std::move(group);
  s.n = scores.size();
  s.histogram.assign(bins, 0);
  for (double v : scores) {
    ++s.histogram[histogram_bin(v, bins)];
    if (v >= threshold) ++s.n_above_threshold;
  }
  if (!scores.empty()) {
    s.fraction_above_threshold = static_cast<double>(s.n_above_threshold) / static_cast<double>(s.n);
    std::sort(scores.begin(), scores.end());
    s.p25 = nearest_rank(scores, 250);
    s.median = nearest_rank(scores, 500);
    s.p75 = nearest_rank(scores, 750);
  }
  return s;
}

// Scored exams carrying one of the five outcome labels, grouped as requested.
// Outcome, severity and subtype groupings are disjoint; the finding-type
// grouping repeats an exam under each of its finding types.
inline std::vector<DistributionSummary> distribution_summaries(const LabeledCohort& cohort, Grouping grouping,
                                                               double threshold, size_t bins = 50) {
  std::vector<std::pair<std::string, std::vector<double>>> groups;
  auto slot = [&](const std::string& name) -> std::vector<double>& {
    for (auto& g : groups) {
      if (g.first == name) return g.second;
    }
    return groups.emplace_back(name, std::vector<double>{}).second;
  };
  auto scored = [](const LabeledExam& e) { return e.label != OutcomeLabel::Excluded && e.exam_score; };

  switch (grouping) {
    case Grouping::OutcomeLabel:
      for (auto label : kOutcomeColumns) slot(std::string(to_token(label)));
      for (const auto& e : cohort.exams) {
        if (scored(e)) slot(std::string(to_token(e.label))).push_back(*e.exam_score);
      }
      break;
    case Grouping::PathologySeverity:
      for (auto s : {Severity::Benign, Severity::Borderline, Severity::HighRisk, Severity::NonInvasiveCancer,
                     Severity::InvasiveCancer}) {
        slot(std::string(to_token(s)));
      }
      for (const auto& e : cohort.exams) {
        if (!scored(e)) continue;
        auto s = e.screen_detected_pathology();
        if (s != Severity::NoPathology) slot(std::string(to_token(s))).push_back(*e.exam_score);
      }
      break;
    case Grouping::PathologySubtype: {
      std::map<std::pair<int, std::string>, std::vector<double>> found;
      for (const auto& e : cohort.exams) {
        if (!scored(e)) continue;
        auto s = e.screen_detected_pathology();
        if (s == Severity::NoPathology) continue;
        const auto& subtype = e.final_pathology.subtype;
        found[{-severity_rank(s), std::string(to_token(s)) + ":" + subtype.value_or("UNSPECIFIED")}].push_back(
            *e.exam_score);
      }
      for (auto& [key, scores] : found) groups.emplace_back(key.second, std::move(scores));
      break;
    }
    case Grouping::FindingTypeByOutcome:
      for (auto t : enum_values<FindingType>()) {
        for (auto label : kOutcomeColumns) slot(std::string(to_token(t)) + ":" + std::string(to_token(label)));
      }
      for (const auto& e : cohort.exams) {
        if (!scored(e)) continue;
        for (auto t : enum_values<FindingType>()) {
          if (e.finding_types.contains(t)) {
            slot(std::string(to_token(t)) + ":" + std::string(to_token(e.label))).push_back(*e.exam_score);
          }
        }
      }
      break;
  }

  std::vector<DistributionSummary> out;
  out.reserve(groups.size());
  for (auto& [name, scores] : groups) out.push_back(summarize_scores(name, std::move(scores), threshold, bins));
  return out;
}

inline Table distribution_table(Grouping grouping, const std::vector<DistributionSummary>& summaries) {
  Table t{"distributions_" + std::string(to_token(grouping)),
          {"group", "n", "n_above_threshold", "fraction_above_threshold", "p25", "median", "p75", "histogram"},
          {}};
  for (const auto& s : summaries) {
    std::string hist;
    for (size_t i = 0; i < s.histogram.size(); ++i) {
      if (i) hist += ';';
      hist += std::to_string(s.histogram[i]);
    }
    t.rows.push_back({s.group, static_cast<int64_t>(s.n), static_cast<int64_t>(s.n_above_threshold),
                      s.n ? Cell{s.fraction_above_threshold} : Cell{}, optional_cell(s.p25),
                      optional_cell(s.median), optional_cell(s.p75), hist});
  }
  return t;
}

// ---------------------------------------------------------------------------
// False-negative failure analysis
// ---------------------------------------------------------------------------

struct FailureRow {
  CancerType cancer_type;
  std::optional<FindingType> finding_type;  // nullopt: every exam of the cancer type
  uint64_t n_overall = 0;
  uint64_t n_false_negative = 0;
};

// Evaluable screen-detected cancers by cancer type and finding type, with the
// false negatives (score below threshold) among them.
inline std::vector<FailureRow> failure_analysis(const LabeledCohort& cohort, double threshold) {
  std::vector<FailureRow> rows;
  for (auto type : enum_values<CancerType>()) {
    rows.push_back({type, std::nullopt, 0, 0});
    for (auto f : enum_values<FindingType>()) rows.push_back({type, f, 0, 0});
  }
  const size_t stride = 1 + enum_values<FindingType>().size();
  for (const auto& e : cohort.exams) {
    if (!e.evaluable() || !e.positive()) continue;
    auto type = cancer_type_of(e);
    if (!type) continue;
    const bool missed = e.score() < threshold;
    FailureRow* base = &rows[enum_index(*type) * stride];
    ++base->n_overall;
    base->n_false_negative += missed;
    for (auto f : enum_values<FindingType>()) {
      if (!e.finding_types.contains(f)) continue;
      FailureRow& r = base[1 + enum_index(f)];
      ++r.n_overall;
      r.n_false_negative += missed;
    }
  }
  return rows;
}

inline Table failure_table(const std::vector<FailureRow>& rows) {
  Table t{"failure_analysis",
          {"cancer_type", "finding_type", "n_overall", "n_false_negative", "pct_of_cancer_type",
           "pct_false_negative"},
          {}};
  std::map<CancerType, uint64_t> totals;
  for (const auto& r : rows) {
    if (!r.finding_type) totals[r.cancer_type] = r.n_overall;
  }
  for (const auto& r : rows) {
    const uint64_t total = totals[r.cancer_type];
    t.rows.push_back({std::string(to_token(r.cancer_type)),
                      std::string(r.finding_type ? to_token(*r.finding_type) : "ALL"),
                      static_cast<int64_t>(r.n_overall), static_cast<int64_t>(r.n_false_negative),
                      total ? Cell{100.0 * static_cast<double>(r.n_overall) / static_cast<double>(total)} : Cell{},
                      r.n_overall ? Cell{100.0 * static_cast<double>(r.n_false_negative) /
                                         static_cast<double>(r.n_overall)}
                                  : Cell{}});
  }
  return t;
}

// ---------------------------------------------------------------------------
// Descriptor strata, labels, validation
// ---------------------------------------------------------------------------

inline Table descriptor_table(const LabeledCohort& cohort) {
  Table t{"descriptor_strata", {"descriptor_axis", "value", "label", "n", "p25", "median", "p75"}, {}};
  for (auto axis : enum_values<DescriptorAxis>()) {
    for (const auto& s : descriptor_strata(cohort, axis)) {
      t.rows.push_back({std::string(to_token(s.axis)), s.value, std::string(to_token(s.label)),
                        static_cast<int64_t>(s.n), s.p25, s.median, s.p75});
    }
  }
  return t;
}

inline Table labels_table(const LabeledCohort& cohort) {
  Table t{"labels", {"exam_id", "label", "binary_class", "exclusion_reason", "final_severity", "finding_types"}, {}};
  for (const auto& e : cohort.exams) {
    t.rows.push_back({e.exam_id, std::string(to_token(e.label)), std::string(to_token(e.binary_class)),
                      e.exclusion_reason ? std::string(to_token(*e.exclusion_reason)) : std::string(),
                      std::string(to_token(e.final_pathology.severity)), e.finding_types.to_string()});
  }
  return t;
}

inline Table validation_table(const ValidationReport& report) {
  Table t{"validation", {"rule", "subject", "exam_id", "message"}, {}};
  for (const auto& i : report.issues) {
    t.rows.push_back({std::string(to_token(i.rule)), i.subject, i.exam_id, i.message});
  }
  return t;
}

inline Table rejects_table(const RawCohort& raw) {
  Table t{"rejects", {"file", "line", "reason", "text"}, {}};
  for (const auto& r : raw.rejects) {
    t.rows.push_back({r.file, static_cast<int64_t>(r.line), r.reason, r.text});
  }
  return t;
}

inline Table label_counts_table(const LabeledCohort& cohort) {
  Table t{"label_counts", {"kind", "value", "n"}, {}};
  for (const auto& [label, n] : cohort.label_counts) {
    t.rows.push_back({std::string("label"), std::string(to_token(label)), static_cast<int64_t>(n)});
  }
  for (const auto& [reason, n] : cohort.exclusion_counts) {
    t.rows.push_back({std::string("exclusion_reason"), std::string(to_token(reason)), static_cast<int64_t>(n)});
  }
  return t;
}

// Writes `<name>.csv` and `<name>.jsonl`.
inline void write_table(const Table& table, const std::filesystem::path& dir) {
  write_csv(table, dir / (table.name + ".csv"));
  write_jsonl(table, dir / (table.name + ".jsonl"));
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::FileNotFound, "cannot write '" + path.string() + "'");
  out << text;
}

inline std::string schema_text(const std::vector<Table>& tables) {
  std::string out;
  for (const auto& t : tables) {
    out += t.name + ".csv / " + t.name + ".jsonl\n";
    for (const auto& c : t.columns) out += "  " + c + "\n";
  }
  return out;
}

struct ReportBundle {
  std::vector<Table> tables;
  std::string rendered_metrics;
  std::string rendered_demographics;
};

inline ReportBundle build_report(const LabeledCohort& cohort, const std::vector<SubgroupResult>& results,
                                 double threshold, size_t bins) {
  ReportBundle r;
  r.tables.push_back(labels_table(cohort));
  r.tables.push_back(label_counts_table(cohort));
  const auto demographics = demographics_table(cohort);
  r.tables.push_back(demographics_machine_table(demographics));
  r.tables.push_back(metrics_table(results));
  for (auto g : enum_values<Grouping>()) {
    r.tables.push_back(distribution_table(g, distribution_summaries(cohort, g, threshold, bins)));
  }
  r.tables.push_back(failure_table(failure_analysis(cohort, threshold)));
  r.tables.push_back(descriptor_table(cohort));
  r.rendered_metrics = render_metrics_table(results);
  r.rendered_demographics = render_demographics(demographics);
  return r;
}

inline void write_report(const ReportBundle& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& t : report.tables) write_table(t, dir);
  write_text(dir / "table_metrics.txt", report.rendered_metrics);
  write_text(dir / "table_demographics.txt", report.rendered_demographics);
  write_text(dir / "schema.txt", schema_text(report.tables));
}

}  // namespace screeval
