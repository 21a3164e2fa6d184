#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "hack/data.hpp"
#include "hack/eval.hpp"
#include "oracles.hpp"

using namespace hack;

namespace {

std::vector<BallPoint> random_ball_points(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.6, 0.6);
  std::vector<BallPoint> pts;
  for (std::size_t i = 0; i < n; ++i) pts.emplace_back(u(rng), u(rng));
  return pts;
}

BallPoint polar(double r, double angle) { return {r * std::cos(angle), r * std::sin(angle)}; }

Dataset two_points() {
  Dataset d;
  d.cols = 2;
  d.features.resize(2, 2);
  d.features << 0.2, 0.8, 0.3, 0.7;
  d.labels = {0, 1};
  return d;
}

EncoderParams bias_only(std::initializer_list<double> logits, std::size_t in) {
  EncoderParams p = EncoderParams::zeros(MlpSpec{{in, logits.size()}, 0});
  Eigen::Index i = 0;
  for (double z : logits) p.layers[0].bias(i++) = z;
  return p;
}

}  // namespace

TEST(Selection, Quota) {
  EXPECT_EQ(selection_quota(2000, 0.1), 200u);
  EXPECT_EQ(selection_quota(10, 0.25), 3u);
  EXPECT_EQ(selection_quota(7, 1.0), 7u);
  EXPECT_EQ(selection_quota(1000, 0.01), 10u);
  EXPECT_EQ(selection_quota(3, 0.01), 1u);
}

TEST(Selection, FullFractionReturnsEveryId) {
  const auto pts = random_ball_points(25, 1);
  for (auto mode : {SelectionMode::typical, SelectionMode::atypical, SelectionMode::atypical_diverse}) {
    auto ids = select_subset(pts, SelectionSpec{1.0, mode, 8});
    std::sort(ids.begin(), ids.end());
    for (std::size_t i = 0; i < ids.size(); ++i) EXPECT_EQ(ids[i], i);
    EXPECT_EQ(ids.size(), 25u);
  }
}

TEST(Selection, TypicalPicksTheSmallNorm) {
  const std::vector<BallPoint> pts{{0.1, 0.0}, {0.0, 0.9}};
  EXPECT_EQ(select_subset(pts, SelectionSpec{0.5, SelectionMode::typical}), (std::vector<std::size_t>{0}));
  EXPECT_EQ(select_subset(pts, SelectionSpec{0.5, SelectionMode::atypical}), (std::vector<std::size_t>{1}));
}

TEST(Selection, TiesBreakById) {
  const std::vector<BallPoint> pts{{0.5, 0.0}, {0.0, 0.5}, {-0.5, 0.0}, {0.1, 0.0}};
  EXPECT_EQ(select_subset(pts, SelectionSpec{0.5, SelectionMode::atypical}), (std::vector<std::size_t>{0, 1}));
}

TEST(Selection, DiverseTakesOnePerSector) {
  // four large-norm points, one per quadrant, plus four small ones crowded in sector 0
  std::vector<BallPoint> pts;
  for (int s = 0; s < 4; ++s) pts.push_back(polar(0.7 - 0.01 * s, (s + 0.5) * std::numbers::pi / 2.0));
  for (int i = 0; i < 4; ++i) pts.push_back(polar(0.69 - 0.001 * i, 0.1 + 0.05 * i));
  const auto ids = select_subset(pts, SelectionSpec{0.5, SelectionMode::atypical_diverse, 4});
  EXPECT_EQ(ids, (std::vector<std::size_t>{0, 1, 2, 3}));
  // plain atypical would take two from the crowded sector instead
  const auto plain = select_subset(pts, SelectionSpec{0.5, SelectionMode::atypical, 4});
  EXPECT_NE(std::set<std::size_t>(plain.begin(), plain.end()), std::set<std::size_t>(ids.begin(), ids.end()));
}

TEST(Selection, DiverseSkipsEmptySectors) {
  std::vector<BallPoint> pts;
  for (int i = 0; i < 6; ++i) pts.push_back(polar(0.1 + 0.1 * i, 0.2));
  const auto ids = select_subset(pts, SelectionSpec{0.5, SelectionMode::atypical_diverse, 8});
  EXPECT_EQ(ids, (std::vector<std::size_t>{5, 4, 3}));
}

TEST(Selection, TypicalAndAtypicalHalvesPartition) {
  const auto pts = random_ball_points(40, 2);
  const auto t = select_subset(pts, SelectionSpec{0.5, SelectionMode::typical});
  const auto a = select_subset(pts, SelectionSpec{0.5, SelectionMode::atypical});
  std::set<std::size_t> all(t.begin(), t.end());
  all.insert(a.begin(), a.end());
  EXPECT_EQ(all.size(), 40u);
  EXPECT_EQ(t.size() + a.size(), 40u);
}

TEST(Selection, RemovingAtypicalKeepsTypicalOrder) {
  const auto pts = random_ball_points(200, 3);
  const auto full_order = select_subset(pts, SelectionSpec{1.0, SelectionMode::typical});
  for (double x : {0.01, 0.1, 0.3}) {
    const auto removed = select_subset(pts, SelectionSpec{x, SelectionMode::atypical});
    std::vector<std::size_t> kept;
    std::vector<BallPoint> kept_pts;
    for (std::size_t i = 0; i < pts.size(); ++i)
      if (std::find(removed.begin(), removed.end(), i) == removed.end()) {
        kept.push_back(i);
        kept_pts.push_back(pts[i]);
      }
    for (double f : {0.1, 0.5}) {
      const auto local = select_subset(kept_pts, SelectionSpec{f, SelectionMode::typical});
      for (std::size_t j = 0; j < local.size(); ++j) EXPECT_EQ(kept[local[j]], full_order[j]);
    }
  }
}

TEST(Selection, PerClassReturnsOriginalIds) {
  const std::vector<BallPoint> pts{{0.1, 0.0}, {0.9, 0.0}, {0.2, 0.0}, {0.3, 0.0}, {0.05, 0.0}, {0.6, 0.0}};
  const std::vector<int> labels{1, 1, 0, 0, 1, 0};
  const auto ids = select_per_class(pts, labels, SelectionSpec{0.3, SelectionMode::atypical});
  EXPECT_EQ(ids, (std::vector<std::size_t>{5, 1}));
}

TEST(Selection, ModeNamesAndValidation) {
  for (auto m : {SelectionMode::typical, SelectionMode::atypical, SelectionMode::atypical_diverse})
    EXPECT_EQ(selection_mode_from_string(to_string(m)), m);
  EXPECT_EQ(selection_mode_from_string("atypical-diverse"), SelectionMode::atypical_diverse);
  EXPECT_THROW(selection_mode_from_string("random"), std::invalid_argument);
  EXPECT_THROW(SelectionSpec({0.0}).validate(), std::invalid_argument);
  EXPECT_THROW(SelectionSpec({1.5}).validate(), std::invalid_argument);
  EXPECT_THROW((SelectionSpec{0.5, SelectionMode::atypical_diverse, 0}.validate()), std::invalid_argument);
}

TEST(Softmax, ConfidenceValues) {
  const Eigen::VectorXd p = softmax(Eigen::Vector2d(10.0, 0.0));
  EXPECT_NEAR(p(0), 0.9999546, 1e-7);
  EXPECT_NEAR(p(0), 1.0 / (1.0 + std::exp(-10.0)), 1e-15);
  const Eigen::VectorXd big = softmax(Eigen::Vector3d(1000.0, 1000.0, 1000.0));
  for (Eigen::Index i = 0; i < 3; ++i) EXPECT_NEAR(big(i), 1.0 / 3.0, 1e-15);
}

TEST(Confidence, FromLogits) {
  Dataset d = two_points();
  EXPECT_NEAR(confidences(bias_only({10.0, 0.0}, 2), d)[0], 0.9999546, 1e-7);
  for (double c : confidences(bias_only({0.3, 0.3, 0.3, 0.3, 0.3}, 2), d)) EXPECT_NEAR(c, 0.2, 1e-15);
}

TEST(Confidence, RankIsPermutationInvariantInContent) {
  const Dataset data = synth_clusters(30, {{0.0, 0.0}, {1.0, 1.0}}, {0.5, 0.5}, 4);
  const EncoderParams p = EncoderParams::init(MlpSpec{{2, 8, 2}, 4});
  const auto rank = confidence_rank(p, data);
  const auto conf = confidences(p, data);
  for (std::size_t i = 1; i < rank.size(); ++i) EXPECT_GE(conf[rank[i - 1]], conf[rank[i]]);

  std::vector<std::size_t> perm(30);
  for (std::size_t i = 0; i < 30; ++i) perm[i] = (i * 11 + 5) % 30;
  const Dataset shuffled = data.subset(perm);
  const auto rank2 = confidence_rank(p, shuffled);
  std::vector<std::size_t> mapped;
  for (auto r : rank2) mapped.push_back(perm[r]);
  EXPECT_EQ(std::set<std::size_t>(mapped.begin(), mapped.end()), std::set<std::size_t>(rank.begin(), rank.end()));
  std::vector<double> c1, c2;
  for (auto r : rank) c1.push_back(conf[r]);
  const auto conf2 = confidences(p, shuffled);
  for (auto r : rank2) c2.push_back(conf2[r]);
  EXPECT_EQ(c1, c2);
}

TEST(Confidence, TiesBreakById) {
  const Dataset d = synth_clusters(5, {{0.0, 0.0}}, {1.0}, 1);
  EXPECT_EQ(confidence_rank(bias_only({1.0, 0.0}, 2), d), (std::vector<std::size_t>{0, 1, 2, 3, 4}));
}

TEST(CrossEntropy, GradientMatchesCentralDifferences) {
  EncoderParams p = EncoderParams::init(MlpSpec{{3, 5, 4}, 9});
  for (auto& l : p.layers) l.bias.setConstant(0.1);
  const Eigen::MatrixXd xs = Eigen::MatrixXd::Random(3, 6);
  const std::vector<int> labels{0, 1, 2, 3, 1, 0};
  const CrossEntropy ce = cross_entropy_grad(p, xs, labels);
  for (std::size_t l = 0; l < p.layers.size(); ++l)
    for (Eigen::Index i = 0; i < p.layers[l].weight.size(); ++i) {
      double& w = p.layers[l].weight.data()[i];
      const double orig = w;
      w = orig + 1e-6;
      const double up = cross_entropy_grad(p, xs, labels).loss;
      w = orig - 1e-6;
      const double down = cross_entropy_grad(p, xs, labels).loss;
      w = orig;
      EXPECT_LE(oracle::rel_error(ce.grad[l].weight.data()[i], (up - down) / 2e-6, 1e-6), 1e-5);
    }
  for (Eigen::Index i = 0; i < xs.size(); ++i) {
    Eigen::MatrixXd moved = xs;
    moved.data()[i] += 1e-6;
    const double up = cross_entropy_grad(p, moved, labels).loss;
    moved.data()[i] -= 2e-6;
    const double down = cross_entropy_grad(p, moved, labels).loss;
    EXPECT_LE(oracle::rel_error(ce.grad_input.data()[i], (up - down) / 2e-6, 1e-6), 1e-5);
  }
}

TEST(Classifier, ZeroEpochsKeepsInitialParams) {
  const Dataset d = two_points();
  ClassifierOptions opts;
  opts.epochs = 0;
  const MlpSpec mlp{{2, 4, 2}, 3};
  const Classifier c = train_classifier(d, mlp, opts);
  EXPECT_TRUE(c.params == EncoderParams::init(mlp));
  EXPECT_TRUE(c.loss_history.empty());
}

TEST(Classifier, SeparablePairReachesFullAccuracy) {
  const Dataset d = two_points();
  ClassifierOptions opts;
  opts.epochs = 200;
  opts.lr = 0.5;
  const Classifier c = train_classifier(d, MlpSpec{{2, 2}, 1}, opts);
  EXPECT_EQ(c.accuracy(d), 1.0);
  EXPECT_EQ(c.predict(d), d.labels);
}

TEST(Classifier, LossDecreasesOverFirstEpochs) {
  const Dataset d = synth_clusters(400, {{0.3, 0.3}, {0.7, 0.7}}, {0.1, 0.1}, 2);
  ClassifierOptions opts;
  opts.epochs = 5;
  const Classifier c = train_classifier(d, MlpSpec{{2, 16, 2}, 2}, opts);
  ASSERT_EQ(c.loss_history.size(), 5u);
  for (std::size_t e = 1; e < 5; ++e) EXPECT_LE(c.loss_history[e], c.loss_history[e - 1] + 1e-6);
  EXPECT_GT(c.accuracy(d), 0.9);
  const Classifier again = train_classifier(d, MlpSpec{{2, 16, 2}, 2}, opts);
  EXPECT_TRUE(again.params == c.params);
}

TEST(Classifier, Errors) {
  Dataset d = two_points();
  EXPECT_THROW(train_classifier(d, MlpSpec{{2, 1}, 0}, {}), std::invalid_argument);
  d.labels.clear();
  EXPECT_THROW(train_classifier(d, MlpSpec{{2, 2}, 0}, {}), std::invalid_argument);
}

TEST(Fgsm, ZeroEpsilonIsIdentity) {
  const EncoderParams p = EncoderParams::init(MlpSpec{{2, 4, 2}, 1});
  const Eigen::Vector2d x(0.4, 0.6);
  EXPECT_EQ(fgsm_attack(p, x, 1, 0.0), x);
}

TEST(Fgsm, SignOfKnownGradient) {
  // dL/dx = p1 * (0.3, -0.2) for label 0
  EncoderParams p = EncoderParams::zeros(MlpSpec{{2, 2}, 0});
  p.layers[0].weight << 0.0, 0.0, 0.3, -0.2;
  const Eigen::Vector2d x(0.5, 0.5);
  const CrossEntropy ce = cross_entropy_grad(p, x, std::vector<int>{0});
  EXPECT_GT(ce.grad_input(0, 0), 0.0);
  EXPECT_LT(ce.grad_input(1, 0), 0.0);
  const Eigen::VectorXd adv = fgsm_attack(p, x, 0, 0.07);
  EXPECT_NEAR(adv(0) - x(0), 0.07, 1e-15);
  EXPECT_NEAR(adv(1) - x(1), -0.07, 1e-15);
}

TEST(Fgsm, BoundedAndInsideUnitBox) {
  GlyphSpec gs;
  gs.classes = {0, 1};
  gs.per_class = 10;
  const Dataset d = synth_glyphs(gs);
  Classifier model;
  model.params = EncoderParams::init(MlpSpec{{256, 16, 10}, 3});
  const Dataset adv = fgsm_dataset(model.params, d, 0.07);
  EXPECT_LE((adv.features - d.features).cwiseAbs().maxCoeff(), 0.07 + 1e-15);
  EXPECT_GE(adv.features.minCoeff(), 0.0);
  EXPECT_LE(adv.features.maxCoeff(), 1.0);
  EXPECT_EQ(adv.labels, d.labels);
  const double a = adversarial_accuracy(model, d, 0.07);
  EXPECT_GE(a, 0.0);
  EXPECT_LE(a, 1.0);
}
