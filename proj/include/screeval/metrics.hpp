#pragma once

// Binary-classification metrics at a fixed operating point, AUROC, class-
// stratified percentile bootstrap intervals and a permutation test for AUROC
// differences between two groups.
//
// Undefined ratios (zero denominators) are std::nullopt, never 0 or 1.
// A score at or above the threshold is a positive prediction.

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "screeval/common.hpp"
#include "screeval/labeler.hpp"
#include "screeval/parallel.hpp"
#include "screeval/rng.hpp"

namespace screeval {

enum class Metric { Precision, Recall, Fpr, Tnr, Fnr, Auroc };

template <>
struct EnumTraits<Metric> {
  static constexpr std::array<std::pair<Metric, std::string_view>, 6> values{{
      {Metric::Precision, "precision"},
      {Metric::Recall, "recall"},
      {Metric::Fpr, "fpr"},
      {Metric::Tnr, "tnr"},
      {Metric::Fnr, "fnr"},
      {Metric::Auroc, "auroc"},
  }};
};

struct ConfusionCounts {
  uint64_t tp = 0;
  uint64_t fp = 0;
  uint64_t tn = 0;
  uint64_t fn = 0;

  uint64_t positives() const { return tp + fn; }
  uint64_t negatives() const { return fp + tn; }
  uint64_t total() const { return tp + fp + tn + fn; }

  ConfusionCounts& operator+=(const ConfusionCounts& o) {
    tp += o.tp;
    fp += o.fp;
    tn += o.tn;
    fn += o.fn;
    return *this;
  }
  bool operator==(const ConfusionCounts&) const = default;
};

struct Interval {
  double low = 0.0;
  double high = 0.0;

  bool operator==(const Interval&) const = default;
};

struct PointMetrics {
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> fpr;
  std::optional<double> tnr;
  std::optional<double> fnr;

  std::optional<double> get(Metric m) const {
    switch (m) {
      case Metric::Precision: return precision;
      case Metric::Recall: return recall;
      case Metric::Fpr: return fpr;
      case Metric::Tnr: return tnr;
      case Metric::Fnr: return fnr;
      case Metric::Auroc: return std::nullopt;
    }
    return std::nullopt;
  }
};

struct BootstrapConfig {
  enum class Method { Percentile };

  size_t n_resamples = 2000;
  uint64_t seed = 0;
  Method method = Method::Percentile;
  bool stratified = true;
  unsigned threads = 1;
};

struct PermutationConfig {
  size_t n_permutations = 10000;
  uint64_t seed = 0;
  unsigned threads = 1;
};

struct MetricsBundle {
  ConfusionCounts counts;
  PointMetrics point;
  std::optional<double> auroc;
  std::map<Metric, Interval> ci;  // only for metrics with a defined interval
  uint64_t n_pos = 0;
  uint64_t n_neg = 0;
  double threshold = 0.1;

  bool evaluable() const { return n_pos > 0 && n_neg > 0; }

  std::optional<double> value(Metric m) const {
    return m == Metric::Auroc ? auroc : point.get(m);
  }
};

// ---------------------------------------------------------------------------
// Point estimates
// ---------------------------------------------------------------------------

inline ConfusionCounts confusion_at_threshold(std::span<const double> positives,
                                              std::span<const double> negatives,
                                              double threshold) {
  ConfusionCounts c;
  for (double s : positives) (s >= threshold ? c.tp : c.fn)++;
  for (double s : negatives) (s >= threshold ? c.fp : c.tn)++;
  return c;
}

// Exams must be evaluable (binary class and score present).
inline ConfusionCounts confusion_at_threshold(std::span<const LabeledExam> exams, double threshold) {
  if (exams.empty()) throw Error(ErrorCode::EmptyPopulation, "no exams to evaluate");
  ConfusionCounts c;
  for (const auto& e : exams) {
    if (!e.evaluable()) {
      throw Error(ErrorCode::Internal, "exam '" + e.exam_id + "' is not in the binary population");
    }
    const bool predicted = e.score() >= threshold;
    if (e.positive()) {
      (predicted ? c.tp : c.fn)++;
    } else {
      (predicted ? c.fp : c.tn)++;
    }
  }
  return c;
}

inline PointMetrics point_metrics(const ConfusionCounts& c) {
  auto ratio = [](uint64_t num, uint64_t den) -> std::optional<double> {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
  };
  PointMetrics m;
  m.precision = ratio(c.tp, c.tp + c.fp);
  m.recall = ratio(c.tp, c.tp + c.fn);
  m.fpr = ratio(c.fp, c.fp + c.tn);
  if (m.recall) m.fnr = 1.0 - *m.recall;
  if (m.fpr) m.tnr = 1.0 - *m.fpr;
  return m;
}

namespace detail {

// Twice the Mann-Whitney U statistic for sorted inputs: each (p, n) pair
// contributes 2 when p > n and 1 when p == n.
inline uint64_t doubled_wins_sorted(std::span<const double> pos_sorted,
                                    std::span<const double> neg_sorted) {
  uint64_t wins = 0;
  size_t below = 0;
  size_t j = 0;
  for (size_t i = 0; i < pos_sorted.size();) {
    const double v = pos_sorted[i];
    while (j < neg_sorted.size() && neg_sorted[j] < v) ++j;
    below = j;
    size_t equal_end = j;
    while (equal_end < neg_sorted.size() && neg_sorted[equal_end] == v) ++equal_end;
    size_t run = i;
    while (run < pos_sorted.size() && pos_sorted[run] == v) ++run;
    wins += static_cast<uint64_t>(run - i) * (2 * below + (equal_end - j));
    i = run;
  }
  return wins;
}

}  // namespace detail

// Mann-Whitney AUROC with half credit for ties, via one sort per class.
inline double auroc(std::span<const double> positives, std::span<const double> negatives) {
  if (positives.empty()) throw Error(ErrorCode::EmptyClass, "auroc: positive class is empty");
  if (negatives.empty()) throw Error(ErrorCode::EmptyClass, "auroc: negative class is empty");
  std::vector<double> p(positives.begin(), positives.end());
  std::vector<double> n(negatives.begin(), negatives.end());
  std::sort(p.begin(), p.end());
  std::sort(n.begin(), n.end());
  const uint64_t wins = detail::doubled_wins_sorted(p, n);
  return static_cast<double>(wins) /
         (2.0 * static_cast<double>(p.size()) * static_cast<double>(n.size()));
}

// Splits an evaluable population into class score lists.
inline void split_scores(std::span<const LabeledExam> exams, std::vector<double>& positives,
                         std::vector<double>& negatives) {
  positives.clear();
  negatives.clear();
  for (const auto& e : exams) {
    if (!e.evaluable()) continue;
    (e.positive() ? positives : negatives).push_back(e.score());
  }
}

// Nearest-rank (inverted CDF) quantile of non-empty sorted values, with the
// level given in per-mille: the smallest value whose rank is >= q * n.
inline double nearest_rank(std::span<const double> sorted, size_t per_mille) {
  size_t rank = (per_mille * sorted.size() + 999) / 1000;
  if (rank == 0) rank = 1;
  return sorted[rank - 1];
}

// ---------------------------------------------------------------------------
// Bootstrap
// ---------------------------------------------------------------------------

namespace detail {

// Class-sorted scores with precomputed threshold split points, so a resample
// is evaluated from per-element multiplicities in one linear pass.
class ResampleEvaluator {
 public:
  ResampleEvaluator(std::vector<double> positives, std::vector<double> negatives, double threshold)
      : pos_(std::move(positives)), neg_(std::move(negatives)) {
    std::sort(pos_.begin(), pos_.end());
    std::sort(neg_.begin(), neg_.end());
    pos_split_ = std::lower_bound(pos_.begin(), pos_.end(), threshold) - pos_.begin();
    neg_split_ = std::lower_bound(neg_.begin(), neg_.end(), threshold) - neg_.begin();
  }

  size_t n_pos() const { return pos_.size(); }
  size_t n_neg() const { return neg_.size(); }

  // Draws one resample and returns all six metrics (nullopt when undefined).
  std::array<std::optional<double>, 6> evaluate(Rng& rng, bool stratified,
                                                std::vector<uint32_t>& wp,
                                                std::vector<uint32_t>& wn) const {
    wp.assign(pos_.size(), 0);
    wn.assign(neg_.size(), 0);
    if (stratified) {
      for (size_t k = 0; k < pos_.size(); ++k) ++wp[rng.below(pos_.size())];
      for (size_t k = 0; k < neg_.size(); ++k) ++wn[rng.below(neg_.size())];
    } else {
      const size_t total = pos_.size() + neg_.size();
      for (size_t k = 0; k < total; ++k) {
        const size_t idx = rng.below(total);
        if (idx < pos_.size()) {
          ++wp[idx];
        } else {
          ++wn[idx - pos_.size()];
        }
      }
    }
    ConfusionCounts c;
    for (size_t i = 0; i < pos_.size(); ++i) (i >= pos_split_ ? c.tp : c.fn) += wp[i];
    for (size_t i = 0; i < neg_.size(); ++i) (i >= neg_split_ ? c.fp : c.tn) += wn[i];
    const PointMetrics m = point_metrics(c);

    std::optional<double> auc;
    if (c.positives() > 0 && c.negatives() > 0) {
      uint64_t wins = 0;
      uint64_t below = 0;
      size_t j = 0;
      for (size_t i = 0; i < pos_.size();) {
        const double v = pos_[i];
        while (j < neg_.size() && neg_[j] < v) below += wn[j++];
        uint64_t equal = 0;
        for (size_t k = j; k < neg_.size() && neg_[k] == v; ++k) equal += wn[k];
        uint64_t run_weight = 0;
        for (; i < pos_.size() && pos_[i] == v; ++i) run_weight += wp[i];
        wins += run_weight * (2 * below + equal);
      }
      auc = static_cast<double>(wins) /
            (2.0 * static_cast<double>(c.positives()) * static_cast<double>(c.negatives()));
    }
    return {m.precision, m.recall, m.fpr, m.tnr, m.fnr, auc};
  }

 private:
  std::vector<double> pos_;
  std::vector<double> neg_;
  size_t pos_split_ = 0;
  size_t neg_split_ = 0;
};

}  // namespace detail

// Percentile intervals for every metric from one shared set of resamples.
// A metric that is undefined on more than half of the resamples has no
// interval. Intervals are widened to contain the full-sample point estimate.
inline std::map<Metric, std::optional<Interval>> bootstrap_intervals(
    std::span<const double> positives, std::span<const double> negatives, double threshold,
    const BootstrapConfig& cfg) {
  if (cfg.n_resamples < 1) throw Error(ErrorCode::InvalidConfig, "n_resamples must be >= 1");
  const detail::ResampleEvaluator evaluator({positives.begin(), positives.end()},
                                            {negatives.begin(), negatives.end()}, threshold);
  std::vector<std::array<std::optional<double>, 6>> draws(cfg.n_resamples);
  parallel_for(cfg.n_resamples, cfg.threads, [&](size_t r) {
    thread_local std::vector<uint32_t> wp, wn;
    Rng rng(derive_seed(cfg.seed, r));
    draws[r] = evaluator.evaluate(rng, cfg.stratified, wp, wn);
  });

  const PointMetrics point = point_metrics(confusion_at_threshold(positives, negatives, threshold));
  std::optional<double> point_auc;
  if (!positives.empty() && !negatives.empty()) point_auc = auroc(positives, negatives);

  std::map<Metric, std::optional<Interval>> out;
  for (Metric m : enum_values<Metric>()) {
    const size_t k = enum_index(m);
    std::vector<double> values;
    values.reserve(draws.size());
    for (const auto& d : draws) {
      if (d[k]) values.push_back(*d[k]);
    }
    const auto estimate = m == Metric::Auroc ? point_auc : point.get(m);
    if (!estimate || values.size() * 2 < draws.size()) {
      out[m] = std::nullopt;
      continue;
    }
    std::sort(values.begin(), values.end());
    Interval ci{nearest_rank(values, 25), nearest_rank(values, 975)};
    ci.low = std::min(ci.low, *estimate);
    ci.high = std::max(ci.high, *estimate);
    out[m] = ci;
  }
  return out;
}

// 95% percentile interval for one metric over an evaluable population.
inline Interval bootstrap_ci(Metric metric, std::span<const LabeledExam> exams,
                             const BootstrapConfig& cfg, double threshold = 0.1) {
  std::vector<double> pos, neg;
  split_scores(exams, pos, neg);
  if (pos.empty() && neg.empty()) throw Error(ErrorCode::EmptyPopulation, "no exams to resample");
  auto intervals = bootstrap_intervals(pos, neg, threshold, cfg);
  const auto& ci = intervals.at(metric);
  if (!ci) {
    throw Error(ErrorCode::DegenerateResamples,
                std::string(to_token(metric)) + " is undefined on more than half of the resamples");
  }
  return *ci;
}

// Counts, point metrics, AUROC and intervals for one population.
inline MetricsBundle evaluate_population(std::span<const double> positives,
                                         std::span<const double> negatives, double threshold,
                                         const BootstrapConfig& cfg) {
  MetricsBundle b;
  b.threshold = threshold;
  b.counts = confusion_at_threshold(positives, negatives, threshold);
  b.point = point_metrics(b.counts);
  b.n_pos = positives.size();
  b.n_neg = negatives.size();
  if (b.evaluable()) b.auroc = auroc(positives, negatives);
  if (b.n_pos + b.n_neg > 0) {
    for (const auto& [metric, ci] : bootstrap_intervals(positives, negatives, threshold, cfg)) {
      if (ci) b.ci[metric] = *ci;
    }
  }
  return b;
}

inline MetricsBundle evaluate_population(std::span<const LabeledExam> exams, double threshold,
                                         const BootstrapConfig& cfg) {
  std::vector<double> pos, neg;
  split_scores(exams, pos, neg);
  return evaluate_population(pos, neg, threshold, cfg);
}

// ---------------------------------------------------------------------------
// Group comparison
// ---------------------------------------------------------------------------

// Two-sided permutation p-value for |AUROC(A) - AUROC(B)|. Group membership is
// shuffled within each class, preserving every group's class sizes.
inline double compare_auc(std::span<const double> a_pos, std::span<const double> a_neg,
                          std::span<const double> b_pos, std::span<const double> b_neg,
                          const PermutationConfig& cfg) {
  if (a_pos.empty() || a_neg.empty()) {
    throw Error(ErrorCode::EmptyClass, std::string("compare_auc: group A has no ") +
                                           (a_pos.empty() ? "positives" : "negatives"));
  }
  if (b_pos.empty() || b_neg.empty()) {
    throw Error(ErrorCode::EmptyClass, std::string("compare_auc: group B has no ") +
                                           (b_pos.empty() ? "positives" : "negatives"));
  }

  struct Pooled {
    std::vector<double> values;  // sorted
    std::vector<uint8_t> in_a;   // membership in sorted order
  };
  auto pool = [](std::span<const double> a, std::span<const double> b) {
    std::vector<std::pair<double, uint8_t>> tagged;
    tagged.reserve(a.size() + b.size());
    for (double v : a) tagged.emplace_back(v, 1);
    for (double v : b) tagged.emplace_back(v, 0);
    std::sort(tagged.begin(), tagged.end());
    Pooled p;
    for (auto [v, tag] : tagged) {
      p.values.push_back(v);
      p.in_a.push_back(tag);
    }
    return p;
  };
  const Pooled pos = pool(a_pos, b_pos);
  const Pooled neg = pool(a_neg, b_neg);
  const double na_pos = static_cast<double>(a_pos.size()), nb_pos = static_cast<double>(b_pos.size());
  const double na_neg = static_cast<double>(a_neg.size()), nb_neg = static_cast<double>(b_neg.size());

  // |AUC_A - AUC_B| for a membership assignment, in one merge pass.
  auto statistic = [&](const std::vector<uint8_t>& pos_a, const std::vector<uint8_t>& neg_a) {
    uint64_t wins_a = 0, wins_b = 0, below_a = 0, below_b = 0;
    size_t j = 0;
    for (size_t i = 0; i < pos.values.size();) {
      const double v = pos.values[i];
      while (j < neg.values.size() && neg.values[j] < v) (neg_a[j++] ? below_a : below_b)++;
      uint64_t eq_a = 0, eq_b = 0;
      for (size_t k = j; k < neg.values.size() && neg.values[k] == v; ++k) (neg_a[k] ? eq_a : eq_b)++;
      uint64_t run_a = 0, run_b = 0;
      for (; i < pos.values.size() && pos.values[i] == v; ++i) (pos_a[i] ? run_a : run_b)++;
      wins_a += run_a * (2 * below_a + eq_a);
      wins_b += run_b * (2 * below_b + eq_b);
    }
    const double auc_a = static_cast<double>(wins_a) / (2.0 * na_pos * na_neg);
    const double auc_b = static_cast<double>(wins_b) / (2.0 * nb_pos * nb_neg);
    return std::abs(auc_a - auc_b);
  };

  const double observed = statistic(pos.in_a, neg.in_a);
  std::vector<uint8_t> extreme(cfg.n_permutations, 0);
  parallel_for(cfg.n_permutations, cfg.threads, [&](size_t r) {
    Rng rng(derive_seed(cfg.seed, r));
    auto shuffle = [&](std::vector<uint8_t> flags) {
      for (size_t i = flags.size(); i > 1; --i) std::swap(flags[i - 1], flags[rng.below(i)]);
      return flags;
    };
    const auto pos_a = shuffle(pos.in_a);
    const auto neg_a = shuffle(neg.in_a);
    extreme[r] = statistic(pos_a, neg_a) >= observed - 1e-12;
  });
  const size_t count = std::accumulate(extreme.begin(), extreme.end(), size_t{0});
  return static_cast<double>(1 + count) / static_cast<double>(1 + cfg.n_permutations);
}

inline double compare_auc(std::span<const LabeledExam> group_a, std::span<const LabeledExam> group_b,
                          const PermutationConfig& cfg) {
  std::vector<double> ap, an, bp, bn;
  split_scores(group_a, ap, an);
  split_scores(group_b, bp, bn);
  return compare_auc(ap, an, bp, bn, cfg);
}

}  // namespace screeval
