#include <gtest/gtest.h>

#include "hack/data.hpp"
#include "hack/density.hpp"
#include "hack/stats.hpp"
#include "hack/trainer.hpp"
#include "oracles.hpp"

using namespace hack;

namespace {

ParticleSet particles_for(std::size_t n, std::uint64_t seed = 0) {
  PackingSpec spec;
  spec.n = n;
  spec.epochs = 300;
  spec.seed = seed;
  return pack(spec, BallParams::from_curvature(1.0));
}

TrainConfig quick_config(std::size_t epochs, std::uint64_t seed = 0) {
  TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST(TrainConfig, CosineSchedule) {
  TrainConfig cfg = quick_config(100);
  EXPECT_DOUBLE_EQ(cfg.learning_rate(0), 0.1);
  EXPECT_NEAR(cfg.learning_rate(50), 0.05, 1e-15);
  EXPECT_NEAR(cfg.learning_rate(100), 0.0, 1e-15);
  for (std::size_t e = 1; e <= 100; ++e) EXPECT_LT(cfg.learning_rate(e), cfg.learning_rate(e - 1));
}

TEST(TrainConfig, Validation) {
  TrainConfig cfg = quick_config(0);
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = quick_config(5);
  cfg.batch_size = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = quick_config(5);
  cfg.snapshot_epochs = {6};
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(DefaultEncoder, DependsOnInputDimension) {
  EXPECT_EQ(default_encoder(2, 0).layer_sizes, (std::vector<std::size_t>{2, 32, 2}));
  EXPECT_EQ(default_encoder(784, 0).layer_sizes, (std::vector<std::size_t>{784, 256, 64, 2}));
}

TEST(HackTrain, ZeroEpochsReturnsInitialState) {
  const Dataset data = synth_clusters(20, {{0.0, 0.0}}, {1.0}, 1);
  TrainConfig cfg = quick_config(0, 4);
  cfg.snapshot_epochs = {0};
  const TrainResult res = hack_train(data, particles_for(20), cfg);
  EXPECT_TRUE(res.params == EncoderParams::init(default_encoder(2, 4)));
  EXPECT_EQ(res.assignment.particle_of, AssignmentState::random(20, 4).particle_of);
  EXPECT_TRUE(res.loss_history.empty());
  ASSERT_EQ(res.snapshots.size(), 1u);
  EXPECT_EQ(res.snapshots[0].epoch, 0u);
}

TEST(HackTrain, FullBatchReassignmentIsTheGlobalOptimum) {
  for (std::size_t n = 2; n <= 7; ++n) {
    const Dataset data = synth_clusters(n, {{0.0, 0.0}}, {1.0}, n);
    const ParticleSet ps = particles_for(n, n);
    TrainConfig cfg = quick_config(1, n);
    cfg.batch_size = n;
    cfg.assign_every = 1;
    const TrainResult res = hack_train(data, ps, cfg);

    const EncoderParams init = EncoderParams::init(default_encoder(2, n));
    const auto feats = embed_batch(init, data.features, ps.ball, ps.spec.r);
    std::vector<std::vector<double>> cost(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) cost[i][j] = hyp_distance(feats[i], ps.positions[j]);
    const double best = oracle::brute_force_assignment(cost);

    double got = 0.0;
    for (std::size_t i = 0; i < n; ++i) got += cost[i][res.assignment.particle_of[i]];
    EXPECT_NEAR(got, best, 1e-12) << "n=" << n;
    ASSERT_EQ(res.reassignments.size(), 1u);
    EXPECT_NEAR(res.reassignments[0].after, best, 1e-12);
  }
}

TEST(HackTrain, BijectionEveryEpochAndReassignmentNeverIncreasesCost) {
  const Dataset data = synth_clusters(300, {{0.0, 0.0}}, {1.0}, 8);
  TrainConfig cfg = quick_config(20, 8);
  for (std::size_t e = 0; e <= 20; ++e) cfg.snapshot_epochs.push_back(e);
  const TrainResult res = hack_train(data, particles_for(300), cfg);
  ASSERT_EQ(res.snapshots.size(), 21u);
  for (const auto& s : res.snapshots) {
    EXPECT_TRUE(s.assignment.is_bijection()) << "epoch " << s.epoch;
    for (const auto& f : s.features) EXPECT_LT(f.norm(), 0.76);
  }
  // 3 batches (128, 128, 44) on epochs 0, 2, ..., 18
  EXPECT_EQ(res.reassignments.size(), 30u);
  for (const auto& r : res.reassignments) EXPECT_LE(r.after, r.before + 1e-9);
  EXPECT_EQ(res.loss_history.size(), 20u);
  EXPECT_LT(res.loss_history.back(), res.loss_history.front());
}

TEST(HackTrain, Deterministic) {
  const Dataset data = synth_clusters(150, {{0.0, 0.0}}, {1.0}, 3);
  const ParticleSet ps = particles_for(150);
  const TrainConfig cfg = quick_config(6, 11);
  const TrainResult a = hack_train(data, ps, cfg), b = hack_train(data, ps, cfg);
  EXPECT_TRUE(a.params == b.params);
  EXPECT_EQ(a.assignment.particle_of, b.assignment.particle_of);
  EXPECT_EQ(a.loss_history, b.loss_history);
  const TrainResult c = hack_train(data, ps, quick_config(6, 12));
  EXPECT_FALSE(a.params == c.params);
}

TEST(HackTrain, SizeMismatchThrows) {
  const Dataset data = synth_clusters(10, {{0.0, 0.0}}, {1.0}, 3);
  EXPECT_THROW(hack_train(data, particles_for(11), quick_config(1)), std::invalid_argument);
}

TEST(HackTrain, ConcentratedClusterGivesNegativeNormDensityCorrelation) {
  const Dataset data = synth_clusters(400, {{0.0, 0.0}, {1.0, 1.0}}, {0.05, 0.5}, 21);
  const TrainResult res = hack_train(data, particles_for(400, 21), quick_config(200, 21));
  const auto feats = embed_batch(res.params, data.features, BallParams::from_curvature(1.0), 0.76);
  const auto dens = knn_density(feats, DensitySpec{});
  std::vector<double> norms;
  for (const auto& f : feats) norms.push_back(f.norm());
  EXPECT_LT(stats::spearman(norms, dens.density), 0.0);
}
