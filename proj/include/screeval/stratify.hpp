#pragma once

// Evaluation subgroups over the binary population of a labeled cohort.
//
// Demographic axes partition the population (density excludes Unknown).
// Cancer-type groups keep every negative and restrict positives to one cancer
// type; finding-type and descriptor groups restrict both classes to exams
// showing the feature, so an exam may belong to several of them.

#include <algorithm>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "screeval/labeler.hpp"
#include "screeval/metrics.hpp"

namespace screeval {

enum class Axis {
  Overall,
  Race,
  Ethnicity,
  Age,
  Density,
  CancerType,
  FindingType,
  PathologySubtype,
  BiradsDescriptor,
};

template <>
struct EnumTraits<Axis> {
  static constexpr std::array<std::pair<Axis, std::string_view>, 9> values{{
      {Axis::Overall, "overall"},
      {Axis::Race, "race"},
      {Axis::Ethnicity, "ethnicity"},
      {Axis::Age, "age"},
      {Axis::Density, "density"},
      {Axis::CancerType, "cancer_type"},
      {Axis::FindingType, "finding_type"},
      {Axis::PathologySubtype, "pathology_subtype"},
      {Axis::BiradsDescriptor, "birads_descriptor"},
  }};
};

inline Axis parse_axis(std::string_view name) {
  auto axis = parse_token<Axis>(name);
  if (!axis) throw Error(ErrorCode::UnknownAxis, "unknown stratification axis '" + std::string(name) + "'");
  return *axis;
}

enum class AgeBin { Under50, From50To75, From75 };

template <>
struct EnumTraits<AgeBin> {
  static constexpr std::array<std::pair<AgeBin, std::string_view>, 3> values{{
      {AgeBin::Under50, "<50"},
      {AgeBin::From50To75, "50-75"},
      {AgeBin::From75, ">=75"},
  }};
};

// [0,50), [50,75), [75,inf)
constexpr AgeBin age_bin(int age) {
  if (age < 50) return AgeBin::Under50;
  if (age < 75) return AgeBin::From50To75;
  return AgeBin::From75;
}

enum class CancerType { Invasive, NonInvasive };

template <>
struct EnumTraits<CancerType> {
  static constexpr std::array<std::pair<CancerType, std::string_view>, 2> values{{
      {CancerType::Invasive, "INVASIVE"},
      {CancerType::NonInvasive, "NON_INVASIVE"},
  }};
};

inline std::optional<CancerType> cancer_type_of(const LabeledExam& e) {
  if (e.final_pathology.severity == Severity::InvasiveCancer) return CancerType::Invasive;
  if (e.final_pathology.severity == Severity::NonInvasiveCancer) return CancerType::NonInvasive;
  return std::nullopt;
}

enum class NegativeScope { AllNegatives, MatchingNegativesOnly };

struct SubgroupSpec {
  Axis axis = Axis::Overall;
  std::string selector;  // "ALL", a category token, or "<AXIS>:<VALUE>" for descriptors
  NegativeScope negative_scope = NegativeScope::AllNegatives;
  size_t rank = 0;       // canonical order within the axis

  std::string key() const { return std::string(to_token(axis)) + ":" + selector; }

  bool operator<(const SubgroupSpec& o) const {
    return std::tuple(axis, rank, selector) < std::tuple(o.axis, o.rank, o.selector);
  }
  bool operator==(const SubgroupSpec& o) const = default;
};

struct Subgroup {
  SubgroupSpec spec;
  std::vector<size_t> members;  // indexes into LabeledCohort::exams, ascending
};

struct SubgroupResult {
  SubgroupSpec spec;
  MetricsBundle bundle;
  uint64_t n_total = 0;

  bool evaluable() const { return bundle.evaluable(); }
};

// Membership lists for every category of `axis`, in canonical order. Only
// evaluable exams are members.
inline std::vector<Subgroup> derive_subgroups(const LabeledCohort& cohort, Axis axis) {
  const auto& exams = cohort.exams;
  std::vector<Subgroup> groups;

  // Fixed-category axes: one group per enum value, even when empty.
  auto by_category = [&](auto values, NegativeScope scope, auto&& category_of) {
    for (size_t r = 0; r < values.size(); ++r) {
      groups.push_back({{axis, std::string(to_token(values[r])), scope, r}, {}});
    }
    for (size_t i = 0; i < exams.size(); ++i) {
      if (!exams[i].evaluable()) continue;
      category_of(exams[i], [&](auto value) { groups[enum_index(value)].members.push_back(i); });
    }
  };

  switch (axis) {
    case Axis::Overall: {
      groups.push_back({{axis, "ALL", NegativeScope::AllNegatives, 0}, {}});
      for (size_t i = 0; i < exams.size(); ++i) {
        if (exams[i].evaluable()) groups[0].members.push_back(i);
      }
      break;
    }
    case Axis::Race:
      by_category(enum_values<Race>(), NegativeScope::AllNegatives,
                  [](const LabeledExam& e, auto add) { add(e.race); });
      break;
    case Axis::Ethnicity:
      by_category(enum_values<Ethnicity>(), NegativeScope::AllNegatives,
                  [](const LabeledExam& e, auto add) { add(e.ethnicity); });
      break;
    case Axis::Age:
      by_category(enum_values<AgeBin>(), NegativeScope::AllNegatives,
                  [](const LabeledExam& e, auto add) { add(age_bin(e.age_at_exam)); });
      break;
    case Axis::Density: {
      constexpr std::array<Density, 4> known{Density::A, Density::B, Density::C, Density::D};
      by_category(known, NegativeScope::AllNegatives, [](const LabeledExam& e, auto add) {
        if (e.density != Density::Unknown) add(e.density);
      });
      break;
    }
    case Axis::CancerType:
      by_category(enum_values<CancerType>(), NegativeScope::AllNegatives, [&](const LabeledExam& e, auto add) {
        if (!e.positive()) {
          add(CancerType::Invasive);
          add(CancerType::NonInvasive);
        } else if (auto t = cancer_type_of(e)) {
          add(*t);
        }
      });
      break;
    case Axis::FindingType:
      by_category(enum_values<FindingType>(), NegativeScope::MatchingNegativesOnly,
                  [](const LabeledExam& e, auto add) {
                    for (auto t : enum_values<FindingType>()) {
                      if (e.finding_types.contains(t)) add(t);
                    }
                  });
      break;
    case Axis::PathologySubtype: {
      // Positives only; one group per (cancer type, subtype code) present.
      std::map<std::pair<CancerType, std::string>, std::vector<size_t>> found;
      for (size_t i = 0; i < exams.size(); ++i) {
        const auto& e = exams[i];
        if (!e.evaluable() || !e.positive()) continue;
        auto type = cancer_type_of(e);
        if (!type) continue;
        for (const auto& code : e.cancer_subtypes) found[{*type, code}].push_back(i);
      }
      size_t r = 0;
      for (auto& [key, members] : found) {
        groups.push_back({{axis, std::string(to_token(key.first)) + ":" + key.second,
                           NegativeScope::MatchingNegativesOnly, r++},
                          std::move(members)});
      }
      break;
    }
    case Axis::BiradsDescriptor: {
      auto value_rank = [](const Descriptor& d) -> size_t {
        switch (d.axis) {
          case DescriptorAxis::MassShape: return enum_index(*parse_token<MassShape>(d.value));
          case DescriptorAxis::MassMargin: return enum_index(*parse_token<MassMargin>(d.value));
          case DescriptorAxis::CalcMorphology: return enum_index(*parse_token<CalcMorphology>(d.value));
          case DescriptorAxis::CalcDistribution: return enum_index(*parse_token<CalcDistribution>(d.value));
          case DescriptorAxis::AsymmetryType: return enum_index(*parse_token<AsymmetryType>(d.value));
          case DescriptorAxis::ArchDistortion: return 0;
        }
        return 0;
      };
      std::map<std::tuple<size_t, size_t, std::string_view>, std::pair<Descriptor, std::vector<size_t>>> ordered;
      for (size_t i = 0; i < exams.size(); ++i) {
        if (!exams[i].evaluable()) continue;
        for (const auto& d : exams[i].descriptors) {
          if (d.generic) continue;
          auto& slot = ordered[{enum_index(d.axis), value_rank(d), d.value}];
          slot.first = d;
          slot.second.push_back(i);
        }
      }
      size_t r = 0;
      for (auto& [_, entry] : ordered) {
        const auto& d = entry.first;
        groups.push_back({{axis, std::string(to_token(d.axis)) + ":" + std::string(d.value),
                           NegativeScope::MatchingNegativesOnly, r++},
                          std::move(entry.second)});
      }
      break;
    }
  }
  return groups;
}

// Bundle for one subgroup; the bootstrap stream is keyed by the subgroup so
// results do not depend on which other groups are evaluated.
inline SubgroupResult evaluate_subgroup(const SubgroupSpec& spec, std::span<const LabeledExam> exams,
                                        std::span<const size_t> members, const BootstrapConfig& cfg,
                                        double threshold) {
  std::vector<double> pos, neg;
  for (size_t i : members) {
    const auto& e = exams[i];
    if (!e.evaluable()) continue;
    (e.positive() ? pos : neg).push_back(e.score());
  }
  BootstrapConfig local = cfg;
  local.seed = derive_seed(cfg.seed, hash_key(spec.key()));
  SubgroupResult out;
  out.spec = spec;
  out.bundle = evaluate_population(pos, neg, threshold, local);
  out.n_total = out.bundle.n_pos + out.bundle.n_neg;
  return out;
}

// Overall plus every requested axis, in canonical order.
inline std::vector<SubgroupResult> evaluate_axes(const LabeledCohort& cohort, std::span<const Axis> axes,
                                                 const BootstrapConfig& cfg, double threshold) {
  std::set<Axis> wanted(axes.begin(), axes.end());
  wanted.insert(Axis::Overall);
  std::vector<SubgroupResult> out;
  for (Axis axis : wanted) {
    for (const auto& g : derive_subgroups(cohort, axis)) {
      out.push_back(evaluate_subgroup(g.spec, cohort.exams, g.members, cfg, threshold));
    }
  }
  std::sort(out.begin(), out.end(),
            [](const SubgroupResult& a, const SubgroupResult& b) { return a.spec < b.spec; });
  return out;
}

// ---------------------------------------------------------------------------
// Descriptor strata
// ---------------------------------------------------------------------------

struct DescriptorStratum {
  DescriptorAxis axis;
  std::string value;
  OutcomeLabel label;
  size_t n = 0;
  double p25 = 0.0;
  double median = 0.0;
  double p75 = 0.0;
};

// Score quantiles per (descriptor value, outcome label) for one descriptor
// axis. Generic descriptors and unscored or excluded exams are left out; an
// exam counts once per distinct descriptor value.
inline std::vector<DescriptorStratum> descriptor_strata(const LabeledCohort& cohort, DescriptorAxis axis) {
  std::map<std::pair<std::string_view, OutcomeLabel>, std::vector<double>> cells;
  for (const auto& e : cohort.exams) {
    if (e.label == OutcomeLabel::Excluded || e.exclusion_reason || !e.exam_score) continue;
    for (const auto& d : e.descriptors) {
      if (d.axis != axis || d.generic) continue;
      cells[{d.value, e.label}].push_back(*e.exam_score);
    }
  }
  auto value_rank = [axis](std::string_view v) -> size_t {
    switch (axis) {
      case DescriptorAxis::MassShape: return enum_index(*parse_token<MassShape>(v));
      case DescriptorAxis::MassMargin: return enum_index(*parse_token<MassMargin>(v));
      case DescriptorAxis::CalcMorphology: return enum_index(*parse_token<CalcMorphology>(v));
      case DescriptorAxis::CalcDistribution: return enum_index(*parse_token<CalcDistribution>(v));
      case DescriptorAxis::AsymmetryType: return enum_index(*parse_token<AsymmetryType>(v));
      case DescriptorAxis::ArchDistortion: return 0;
    }
    return 0;
  };
  std::vector<DescriptorStratum> out;
  for (auto& [key, scores] : cells) {
    std::sort(scores.begin(), scores.end());
    out.push_back({axis, std::string(key.first), key.second, scores.size(), nearest_rank(scores, 250),
                   nearest_rank(scores, 500), nearest_rank(scores, 750)});
  }
  std::sort(out.begin(), out.end(), [&](const DescriptorStratum& a, const DescriptorStratum& b) {
    return std::tuple(value_rank(a.value), a.label) < std::tuple(value_rank(b.value), b.label);
  });
  return out;
}

}  // namespace screeval
