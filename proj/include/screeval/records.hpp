#pragma once

// Typed records for screening cohorts: exams, radiologist findings, pathology
// results and per-image model scores, plus their serialized token tables.

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <type_traits>
#include <utility>
#include <vector>

#include "screeval/common.hpp"

namespace screeval {

enum class ExamType { Screening, Diagnostic };
enum class Density { A, B, C, D, Unknown };
enum class Race { Black, White, Asian, Other, Unknown };
enum class Ethnicity { NotHispanicOrLatino, HispanicOrLatino, Unknown };
enum class Laterality { Left, Right, Bilateral };

// BI-RADS assessment category 0..5; the underlying value is the category.
enum class Birads : int { B0 = 0, B1 = 1, B2 = 2, B3 = 3, B4 = 4, B5 = 5 };

enum class MassShape { Oval, Round, Irregular, Generic };
enum class MassMargin { Circumscribed, Obscured, Microlobulated, Indistinct, Spiculated, Generic };
// BI-RADS 5th edition calcification morphology: typically benign, then
// suspicious, then the under-described Generic bucket.
enum class CalcMorphology {
  Skin,
  Vascular,
  Coarse,
  LargeRodLike,
  Round,
  Rim,
  Dystrophic,
  MilkOfCalcium,
  Suture,
  Amorphous,
  CoarseHeterogeneous,
  FinePleomorphic,
  FineLinearBranching,
  Generic,
};
enum class CalcDistribution { Diffuse, Regional, Grouped, Linear, Segmental, Generic };
enum class AsymmetryType { Asymmetry, Focal, Global, Developing };

enum class Procedure { Biopsy, Resection };

// Declaration order is not the severity order; see severity_rank().
enum class Severity {
  NoPathology,
  Benign,
  Borderline,
  HighRisk,
  NonInvasiveCancer,
  InvasiveCancer,
  NonBreastCancer,
};

// Rank for "most severe" resolution. NonBreastCancer is outside the order and
// handled as an exclusion by callers.
constexpr int severity_rank(Severity s) {
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

constexpr bool is_cancer(Severity s) {
  return s == Severity::NonInvasiveCancer || s == Severity::InvasiveCancer;
}

enum class FindingType { Mass, Asymmetry, ArchDistortion, Calcification };

// Small bitset over FindingType.
class FindingTypeSet {
 public:
  constexpr FindingTypeSet() = default;

  constexpr void insert(FindingType t) { bits_ |= bit(t); }
  constexpr bool contains(FindingType t) const { return (bits_ & bit(t)) != 0; }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr FindingTypeSet& operator|=(FindingTypeSet other) {
    bits_ |= other.bits_;
    return *this;
  }
  constexpr bool operator==(const FindingTypeSet&) const = default;

  std::string to_string() const;  // '|'-joined tokens, empty when no types
  static std::optional<FindingTypeSet> parse(std::string_view text);

 private:
  static constexpr unsigned bit(FindingType t) { return 1u << static_cast<unsigned>(t); }
  unsigned bits_ = 0;
};

template <>
struct EnumTraits<ExamType> {
  static constexpr std::array<std::pair<ExamType, std::string_view>, 2> values{{
      {ExamType::Screening, "SCREENING"},
      {ExamType::Diagnostic, "DIAGNOSTIC"},
  }};
};

template <>
struct EnumTraits<Density> {
  static constexpr std::array<std::pair<Density, std::string_view>, 5> values{{
      {Density::A, "A"},
      {Density::B, "B"},
      {Density::C, "C"},
      {Density::D, "D"},
      {Density::Unknown, "UNKNOWN"},
  }};
};

template <>
struct EnumTraits<Race> {
  static constexpr std::array<std::pair<Race, std::string_view>, 5> values{{
      {Race::Black, "BLACK"},
      {Race::White, "WHITE"},
      {Race::Asian, "ASIAN"},
      {Race::Other, "OTHER"},
      {Race::Unknown, "UNKNOWN"},
  }};
};

template <>
struct EnumTraits<Ethnicity> {
  static constexpr std::array<std::pair<Ethnicity, std::string_view>, 3> values{{
      {Ethnicity::NotHispanicOrLatino, "NOT_HISPANIC_OR_LATINO"},
      {Ethnicity::HispanicOrLatino, "HISPANIC_OR_LATINO"},
      {Ethnicity::Unknown, "UNKNOWN"},
  }};
};

template <>
struct EnumTraits<Laterality> {
  static constexpr std::array<std::pair<Laterality, std::string_view>, 3> values{{
      {Laterality::Left, "LEFT"},
      {Laterality::Right, "RIGHT"},
      {Laterality::Bilateral, "BILATERAL"},
  }};
};

template <>
struct EnumTraits<Birads> {
  static constexpr std::array<std::pair<Birads, std::string_view>, 6> values{{
      {Birads::B0, "B0"},
      {Birads::B1, "B1"},
      {Birads::B2, "B2"},
      {Birads::B3, "B3"},
      {Birads::B4, "B4"},
      {Birads::B5, "B5"},
  }};
};

template <>
struct EnumTraits<MassShape> {
  static constexpr std::array<std::pair<MassShape, std::string_view>, 4> values{{
      {MassShape::Oval, "OVAL"},
      {MassShape::Round, "ROUND"},
      {MassShape::Irregular, "IRREGULAR"},
      {MassShape::Generic, "GENERIC"},
  }};
};

template <>
struct EnumTraits<MassMargin> {
  static constexpr std::array<std::pair<MassMargin, std::string_view>, 6> values{{
      {MassMargin::Circumscribed, "CIRCUMSCRIBED"},
      {MassMargin::Obscured, "OBSCURED"},
      {MassMargin::Microlobulated, "MICROLOBULATED"},
      {MassMargin::Indistinct, "INDISTINCT"},
      {MassMargin::Spiculated, "SPICULATED"},
      {MassMargin::Generic, "GENERIC"},
  }};
};

template <>
struct EnumTraits<CalcMorphology> {
  static constexpr std::array<std::pair<CalcMorphology, std::string_view>, 14> values{{
      {CalcMorphology::Skin, "SKIN"},
      {CalcMorphology::Vascular, "VASCULAR"},
      {CalcMorphology::Coarse, "COARSE"},
      {CalcMorphology::LargeRodLike, "LARGE_ROD_LIKE"},
      {CalcMorphology::Round, "ROUND"},
      {CalcMorphology::Rim, "RIM"},
      {CalcMorphology::Dystrophic, "DYSTROPHIC"},
      {CalcMorphology::MilkOfCalcium, "MILK_OF_CALCIUM"},
      {CalcMorphology::Suture, "SUTURE"},
      {CalcMorphology::Amorphous, "AMORPHOUS"},
      {CalcMorphology::CoarseHeterogeneous, "COARSE_HETEROGENEOUS"},
      {CalcMorphology::FinePleomorphic, "FINE_PLEOMORPHIC"},
      {CalcMorphology::FineLinearBranching, "FINE_LINEAR_BRANCHING"},
      {CalcMorphology::Generic, "GENERIC"},
  }};
};

template <>
struct EnumTraits<CalcDistribution> {
  static constexpr std::array<std::pair<CalcDistribution, std::string_view>, 6> values{{
      {CalcDistribution::Diffuse, "DIFFUSE"},
      {CalcDistribution::Regional, "REGIONAL"},
      {CalcDistribution::Grouped, "GROUPED"},
      {CalcDistribution::Linear, "LINEAR"},
      {CalcDistribution::Segmental, "SEGMENTAL"},
      {CalcDistribution::Generic, "GENERIC"},
  }};
};

template <>
struct EnumTraits<AsymmetryType> {
  static constexpr std::array<std::pair<AsymmetryType, std::string_view>, 4> values{{
      {AsymmetryType::Asymmetry, "ASYMMETRY"},
      {AsymmetryType::Focal, "FOCAL"},
      {AsymmetryType::Global, "GLOBAL"},
      {AsymmetryType::Developing, "DEVELOPING"},
  }};
};

template <>
struct EnumTraits<Procedure> {
  static constexpr std::array<std::pair<Procedure, std::string_view>, 2> values{{
      {Procedure::Biopsy, "BIOPSY"},
      {Procedure::Resection, "RESECTION"},
  }};
};

template <>
struct EnumTraits<Severity> {
  static constexpr std::array<std::pair<Severity, std::string_view>, 7> values{{
      {Severity::NoPathology, "NO_PATHOLOGY"},
      {Severity::Benign, "BENIGN"},
      {Severity::Borderline, "BORDERLINE"},
      {Severity::HighRisk, "HIGH_RISK"},
      {Severity::NonInvasiveCancer, "NON_INVASIVE_CANCER"},
      {Severity::InvasiveCancer, "INVASIVE_CANCER"},
      {Severity::NonBreastCancer, "NON_BREAST_CANCER"},
  }};
};

template <>
struct EnumTraits<FindingType> {
  static constexpr std::array<std::pair<FindingType, std::string_view>, 4> values{{
      {FindingType::Mass, "MASS"},
      {FindingType::Asymmetry, "ASYMMETRY"},
      {FindingType::ArchDistortion, "ARCH_DISTORTION"},
      {FindingType::Calcification, "CALCIFICATION"},
  }};
};

inline std::string FindingTypeSet::to_string() const {
  std::string out;
  for (auto t : enum_values<FindingType>()) {
    if (!contains(t)) continue;
    if (!out.empty()) out += '|';
    out += to_token(t);
  }
  return out;
}

inline std::optional<FindingTypeSet> FindingTypeSet::parse(std::string_view text) {
  FindingTypeSet set;
  while (!text.empty()) {
    auto bar = text.find('|');
    auto token = text.substr(0, bar);
    auto t = parse_token<FindingType>(token);
    if (!t) return std::nullopt;
    set.insert(*t);
    if (bar == std::string_view::npos) break;
    text.remove_prefix(bar + 1);
  }
  return set;
}

// ---------------------------------------------------------------------------
// Records
// ---------------------------------------------------------------------------

struct ExamRecord {
  std::string exam_id;
  std::string patient_id;
  Date exam_date;
  ExamType exam_type = ExamType::Screening;
  Density density = Density::Unknown;
  Race race = Race::Unknown;
  Ethnicity ethnicity = Ethnicity::Unknown;
  int age_at_exam = 0;

  bool operator==(const ExamRecord&) const = default;
};

struct FindingRecord {
  std::string finding_id;
  std::string exam_id;
  Laterality laterality = Laterality::Left;
  Birads birads = Birads::B1;
  bool has_mass = false;
  bool has_asymmetry = false;
  bool has_arch_distortion = false;
  bool has_calcification = false;
  std::optional<MassShape> mass_shape;
  std::optional<MassMargin> mass_margin;
  std::optional<CalcMorphology> calc_morphology;
  std::optional<CalcDistribution> calc_distribution;
  std::optional<AsymmetryType> asymmetry_type;

  FindingTypeSet finding_types() const {
    FindingTypeSet set;
    if (has_mass) set.insert(FindingType::Mass);
    if (has_asymmetry) set.insert(FindingType::Asymmetry);
    if (has_arch_distortion) set.insert(FindingType::ArchDistortion);
    if (has_calcification) set.insert(FindingType::Calcification);
    return set;
  }

  // Descriptor fields may only be set when the matching type flag is set.
  bool descriptors_consistent() const {
    if ((mass_shape || mass_margin) && !has_mass) return false;
    if ((calc_morphology || calc_distribution) && !has_calcification) return false;
    if (asymmetry_type && !has_asymmetry) return false;
    return true;
  }

  bool operator==(const FindingRecord&) const = default;
};

// BI-RADS lexicon descriptor axes. Architectural distortion has no descriptor
// field; its only value is PRESENT.
enum class DescriptorAxis { MassShape, MassMargin, CalcMorphology, CalcDistribution, AsymmetryType, ArchDistortion };

template <>
struct EnumTraits<DescriptorAxis> {
  static constexpr std::array<std::pair<DescriptorAxis, std::string_view>, 6> values{{
      {DescriptorAxis::MassShape, "MASS_SHAPE"},
      {DescriptorAxis::MassMargin, "MASS_MARGIN"},
      {DescriptorAxis::CalcMorphology, "CALC_MORPHOLOGY"},
      {DescriptorAxis::CalcDistribution, "CALC_DISTRIBUTION"},
      {DescriptorAxis::AsymmetryType, "ASYMMETRY_TYPE"},
      {DescriptorAxis::ArchDistortion, "ARCH_DISTORTION"},
  }};
};

struct Descriptor {
  DescriptorAxis axis;
  std::string_view value;  // token; points into static token tables
  bool generic = false;

  auto operator<=>(const Descriptor& o) const {
    return std::tuple(axis, value) <=> std::tuple(o.axis, o.value);
  }
  bool operator==(const Descriptor& o) const { return axis == o.axis && value == o.value; }
};

inline std::vector<Descriptor> descriptors_of(const FindingRecord& f) {
  std::vector<Descriptor> out;
  auto add = [&](DescriptorAxis axis, const auto& v) {
    using E = std::decay_t<decltype(*v)>;
    if (v) out.push_back({axis, to_token(*v), *v == E::Generic});
  };
  add(DescriptorAxis::MassShape, f.mass_shape);
  add(DescriptorAxis::MassMargin, f.mass_margin);
  add(DescriptorAxis::CalcMorphology, f.calc_morphology);
  add(DescriptorAxis::CalcDistribution, f.calc_distribution);
  if (f.asymmetry_type) out.push_back({DescriptorAxis::AsymmetryType, to_token(*f.asymmetry_type), false});
  if (f.has_arch_distortion) out.push_back({DescriptorAxis::ArchDistortion, "PRESENT", false});
  return out;
}

struct PathologyResult {
  std::string finding_id;
  Procedure procedure = Procedure::Biopsy;
  Severity severity = Severity::NoPathology;
  std::optional<std::string> subtype;
  Date result_date;

  bool operator==(const PathologyResult&) const = default;
};

struct ImageScore {
  std::string exam_id;
  std::string image_id;
  double malignancy_score = 0.0;

  bool operator==(const ImageScore&) const = default;
};

}  // namespace screeval
