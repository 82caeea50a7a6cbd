#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "screeval/metrics.hpp"

using namespace screeval;

namespace {

std::vector<double> uniform_scores(Rng& rng, size_t n, int levels = 0) {
  std::vector<double> v(n);
  for (auto& x : v) {
    x = levels > 0 ? static_cast<double>(rng.below(static_cast<uint64_t>(levels))) / levels : rng.uniform();
  }
  return v;
}

std::vector<double> beta_scores(Rng& rng, size_t n, double a, double b) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.beta(a, b);
  return v;
}

LabeledExam scored(bool positive, double score) {
  LabeledExam e;
  e.label = positive ? OutcomeLabel::ScreenDetectedCancer : OutcomeLabel::ScreenNegative;
  e.binary_class = binary_class_of(e.label);
  e.exam_score = score;
  return e;
}

// Exact fraction p/q compared against a double.
void expect_fraction(std::optional<double> got, uint64_t p, uint64_t q) {
  if (q == 0) {
    EXPECT_FALSE(got);
    return;
  }
  ASSERT_TRUE(got);
  const uint64_t g = std::gcd(p, q);
  EXPECT_EQ(*got, static_cast<double>(p / g) / static_cast<double>(q / g));
}

}  // namespace

TEST(Confusion, HandCountable) {
  const std::vector<double> pos{0.95, 0.05}, neg{0.2, 0.01};
  const auto c = confusion_at_threshold(pos, neg, 0.1);
  EXPECT_EQ(c, (ConfusionCounts{1, 1, 1, 1}));
}

TEST(Confusion, BoundaryIsInclusive) {
  const std::vector<double> pos{0.1}, neg{0.1};
  const auto c = confusion_at_threshold(pos, neg, 0.1);
  EXPECT_EQ(c.tp, 1u);
  EXPECT_EQ(c.fp, 1u);
}

TEST(Confusion, ExtremeThresholds) {
  Rng rng(2);
  const auto pos = uniform_scores(rng, 50), neg = uniform_scores(rng, 70);
  const auto all = confusion_at_threshold(pos, neg, 0.0);
  EXPECT_EQ(all.tp, 50u);
  EXPECT_EQ(all.fp, 70u);
  const auto none = confusion_at_threshold(pos, neg, 1.0000001);
  EXPECT_EQ(none.fn, 50u);
  EXPECT_EQ(none.tn, 70u);
}

TEST(Confusion, MatchesLinearScanSeed17) {
  Rng rng(17);
  const auto pos = uniform_scores(rng, 300), neg = uniform_scores(rng, 700);
  for (int t = 0; t < 50; ++t) {
    const double threshold = rng.uniform();
    const auto c = confusion_at_threshold(pos, neg, threshold);
    const auto o = oracle::count_at(pos, neg, threshold);
    EXPECT_EQ(c.tp, static_cast<uint64_t>(o.tp));
    EXPECT_EQ(c.fp, static_cast<uint64_t>(o.fp));
    EXPECT_EQ(c.tn, static_cast<uint64_t>(o.tn));
    EXPECT_EQ(c.fn, static_cast<uint64_t>(o.fn));
  }
}

TEST(Confusion, EmptyPopulation) {
  try {
    confusion_at_threshold(std::span<const LabeledExam>{}, 0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyPopulation);
  }
}

TEST(PointMetrics, ReplicaCounts) {
  const auto m = point_metrics({1002, 11512, 150464, 366});
  EXPECT_NEAR(*m.precision, 0.0801, 5e-5);
  EXPECT_NEAR(*m.recall, 0.7325, 5e-5);
  EXPECT_NEAR(*m.fpr, 0.0711, 5e-5);
  EXPECT_NEAR(*m.tnr, 0.9289, 5e-5);
  EXPECT_NEAR(*m.fnr, 0.2675, 5e-5);
}

TEST(PointMetrics, NoPositives) {
  const auto m = point_metrics({0, 0, 10, 0});
  EXPECT_FALSE(m.recall);
  EXPECT_FALSE(m.fnr);
  EXPECT_FALSE(m.precision);
  EXPECT_EQ(m.fpr, 0.0);
  EXPECT_EQ(m.tnr, 1.0);
}

TEST(PointMetrics, ExactFractionsSeed23) {
  Rng rng(23);
  for (int i = 0; i < 2000; ++i) {
    ConfusionCounts c{rng.below(1000001), rng.below(1000001), rng.below(1000001), rng.below(1000001)};
    if (i % 97 == 0) c.tp = c.fn = 0;
    const auto m = point_metrics(c);
    expect_fraction(m.precision, c.tp, c.tp + c.fp);
    expect_fraction(m.recall, c.tp, c.tp + c.fn);
    expect_fraction(m.fpr, c.fp, c.fp + c.tn);
    if (m.recall) {
      EXPECT_EQ(*m.fnr, 1.0 - *m.recall);
    }
    if (m.fpr) {
      EXPECT_EQ(*m.tnr, 1.0 - *m.fpr);
    }
  }
}

TEST(Auroc, Examples) {
  const std::vector<double> p{0.9, 0.4}, n{0.2, 0.5};
  EXPECT_DOUBLE_EQ(auroc(p, n), 0.75);
  EXPECT_EQ(auroc(std::vector<double>(5, 1.0), std::vector<double>(7, 0.0)), 1.0);
  EXPECT_EQ(auroc(std::vector<double>(5, 0.3), std::vector<double>(7, 0.3)), 0.5);
}

TEST(Auroc, EmptyClassNamed) {
  const std::vector<double> some{0.5}, none;
  try {
    auroc(none, some);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyClass);
    EXPECT_NE(std::string(e.what()).find("positive"), std::string::npos);
  }
  try {
    auroc(some, none);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("negative"), std::string::npos);
  }
}

TEST(Auroc, MatchesPairOracleWithTies) {
  Rng rng(101);
  for (int trial = 0; trial < 500; ++trial) {
    const size_t np = 1 + rng.below(200), nn = 1 + rng.below(200);
    const int levels = trial % 3 == 0 ? 0 : static_cast<int>(2 + rng.below(20));
    const auto p = uniform_scores(rng, np, levels), n = uniform_scores(rng, nn, levels);
    EXPECT_NEAR(auroc(p, n), oracle::auroc_pairs(p, n), 1e-12);
  }
}

TEST(Auroc, SymmetryAndMonotoneInvariance) {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const auto p = uniform_scores(rng, 40, 10), n = uniform_scores(rng, 60, 10);
    EXPECT_NEAR(auroc(p, n) + auroc(n, p), 1.0, 1e-12);
    auto tp = p, tn = n;
    for (auto& x : tp) x = std::exp(3.0 * x) - 7.0;
    for (auto& x : tn) x = std::exp(3.0 * x) - 7.0;
    EXPECT_EQ(auroc(tp, tn), auroc(p, n));
  }
}

TEST(NearestRank, Percentiles) {
  std::vector<double> v(2000);
  std::iota(v.begin(), v.end(), 1.0);
  EXPECT_EQ(nearest_rank(v, 25), 50.0);
  EXPECT_EQ(nearest_rank(v, 975), 1950.0);
  const std::vector<double> one{3.0};
  EXPECT_EQ(nearest_rank(one, 25), 3.0);
}

TEST(Bootstrap, ZeroVarianceAuroc) {
  std::vector<LabeledExam> exams;
  for (int i = 0; i < 20; ++i) exams.push_back(scored(true, 1.0));
  for (int i = 0; i < 80; ++i) exams.push_back(scored(false, 0.0));
  BootstrapConfig cfg;
  cfg.n_resamples = 200;
  const auto ci = bootstrap_ci(Metric::Auroc, exams, cfg);
  EXPECT_EQ(ci, (Interval{1.0, 1.0}));
}

TEST(Bootstrap, DeterministicAcrossThreads) {
  Rng rng(9);
  const auto pos = beta_scores(rng, 150, 3, 2), neg = beta_scores(rng, 900, 2, 3);
  BootstrapConfig cfg;
  cfg.n_resamples = 400;
  cfg.seed = 1234;
  const auto a = evaluate_population(pos, neg, 0.5, cfg);
  const auto b = evaluate_population(pos, neg, 0.5, cfg);
  cfg.threads = 3;
  const auto c = evaluate_population(pos, neg, 0.5, cfg);
  EXPECT_EQ(a.ci, b.ci);
  EXPECT_EQ(a.ci, c.ci);
  cfg.seed = 1235;
  const auto d = evaluate_population(pos, neg, 0.5, cfg);
  EXPECT_NE(a.ci, d.ci);
}

TEST(Bootstrap, IntervalsContainPointEstimates) {
  Rng rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    const auto pos = beta_scores(rng, 5 + rng.below(50), 2, 2), neg = beta_scores(rng, 5 + rng.below(200), 1, 3);
    BootstrapConfig cfg;
    cfg.n_resamples = 100;
    cfg.seed = static_cast<uint64_t>(trial);
    const auto b = evaluate_population(pos, neg, 0.3, cfg);
    for (const auto& [m, ci] : b.ci) {
      const auto v = b.value(m);
      ASSERT_TRUE(v);
      EXPECT_LE(ci.low, *v);
      EXPECT_GE(ci.high, *v);
    }
  }
}

TEST(Bootstrap, DegenerateMetricHasNoInterval) {
  // Every score is below the threshold: precision is undefined on all resamples.
  const std::vector<double> pos{0.01, 0.02, 0.03}, neg{0.01, 0.02, 0.04, 0.05};
  BootstrapConfig cfg;
  cfg.n_resamples = 100;
  const auto b = evaluate_population(pos, neg, 0.5, cfg);
  EXPECT_FALSE(b.ci.contains(Metric::Precision));
  EXPECT_TRUE(b.ci.contains(Metric::Recall));
  std::vector<LabeledExam> exams;
  for (double s : pos) exams.push_back(scored(true, s));
  for (double s : neg) exams.push_back(scored(false, s));
  try {
    bootstrap_ci(Metric::Precision, exams, cfg, 0.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateResamples);
  }
}

TEST(Bootstrap, RecallIntervalWidth) {
  // 1368 positives with true recall 0.73: width about 0.05, bracketing 0.73.
  for (uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed);
    std::vector<double> pos(1368), neg(2000, 0.0);
    for (auto& x : pos) x = rng.bernoulli(0.73) ? 0.5 : 0.05;
    BootstrapConfig cfg;
    cfg.seed = seed;
    cfg.n_resamples = 1000;
    const auto b = evaluate_population(pos, neg, 0.1, cfg);
    const auto& ci = b.ci.at(Metric::Recall);
    EXPECT_NEAR(ci.high - ci.low, 0.047, 0.01);
    EXPECT_NEAR(ci.low, 0.71, 0.02);
    EXPECT_NEAR(ci.high, 0.76, 0.02);
    EXPECT_LT(ci.low, 0.73);
    EXPECT_GT(ci.high, 0.73);
  }
}

TEST(CompareAuc, IdenticalGroups) {
  Rng rng(4);
  const auto pos = beta_scores(rng, 100, 3, 2), neg = beta_scores(rng, 300, 2, 3);
  for (uint64_t seed = 0; seed < 5; ++seed) {
    PermutationConfig cfg;
    cfg.n_permutations = 500;
    cfg.seed = seed;
    EXPECT_GE(compare_auc(pos, neg, pos, neg, cfg), 0.9);
  }
}

TEST(CompareAuc, MaximalEffect) {
  Rng rng(6);
  std::vector<double> a_pos(200), a_neg(200), b_pos(200), b_neg(200);
  for (auto& x : a_pos) x = 0.6 + 0.4 * rng.uniform();
  for (auto& x : a_neg) x = 0.5 * rng.uniform();
  for (auto& x : b_pos) x = rng.uniform();
  for (auto& x : b_neg) x = rng.uniform();
  PermutationConfig cfg;
  cfg.n_permutations = 1000;
  const double p = compare_auc(a_pos, a_neg, b_pos, b_neg, cfg);
  EXPECT_LT(p, 0.01);
  EXPECT_GT(p, 0.0);
  cfg.threads = 4;
  EXPECT_EQ(compare_auc(a_pos, a_neg, b_pos, b_neg, cfg), p);
}

TEST(CompareAuc, GroupLackingClass) {
  const std::vector<double> some{0.5}, none;
  PermutationConfig cfg;
  cfg.n_permutations = 10;
  try {
    compare_auc(some, some, none, some, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyClass);
  }
}
