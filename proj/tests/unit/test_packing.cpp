#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "hack/packing.hpp"
#include "hack/stats.hpp"
#include "oracles.hpp"

using namespace hack;

namespace {

const BallParams kUnit = BallParams::from_curvature(1.0);

PackingSpec small_spec(std::size_t n, std::size_t epochs, std::uint64_t seed = 0) {
  PackingSpec s;
  s.n = n;
  s.epochs = epochs;
  s.seed = seed;
  return s;
}

}  // namespace

TEST(RadiusChain, SingleParticleGetsTheWholeDisk) {
  const double r_b = hyperbolic_radius(0.76, kUnit);
  EXPECT_NEAR(r_b, std::log(1.76 / 0.24), 1e-12);
  EXPECT_NEAR(r_b, 1.992430, 1e-6);
  EXPECT_NEAR(per_particle_radius(1, 0.76, kUnit), r_b, 1e-12);
}

TEST(RadiusChain, HundredParticlesMatchesOracle) {
  const auto ref = oracle::radius_chain(100, 0.76L, 1.0L);
  const double r_n = per_particle_radius(100, 0.76, kUnit);
  EXPECT_NEAR(r_n, static_cast<double>(ref.r_n), 1e-12);
  EXPECT_NEAR(r_n, 0.233353, 1e-5);
  EXPECT_NEAR(static_cast<double>(ref.r_b), 1.992430, 1e-6);
}

TEST(RadiusChain, MatchesOracleAcrossCurvatures) {
  for (double c : {0.25, 1.0, 1.5})
    for (std::size_t n : {1u, 2u, 7u, 100u, 2000u}) {
      const BallParams ball = BallParams::from_curvature(c);
      const double r = 0.7 * ball.s;
      const auto ref = oracle::radius_chain(n, r, c);
      EXPECT_NEAR(per_particle_radius(n, r, ball), static_cast<double>(ref.r_n), 1e-10) << "n=" << n << " c=" << c;
    }
}

TEST(RadiusChain, StrictlyDecreasingInN) {
  double prev = per_particle_radius(1, 0.76, kUnit);
  for (std::size_t n = 2; n <= 3000; n += (n < 50 ? 1 : 97)) {
    const double r_n = per_particle_radius(n, 0.76, kUnit);
    EXPECT_LT(r_n, prev) << n;
    prev = r_n;
  }
}

TEST(RadiusChain, RadiusBeyondBallIsDomainError) {
  EXPECT_THROW(per_particle_radius(10, 1.0, kUnit), std::domain_error);
  EXPECT_THROW(hyperbolic_radius(2.0, BallParams::from_curvature(0.25)), std::domain_error);
}

TEST(Repulsion, VanishesAtAndBeyondContact) {
  const double r_n = 0.233353;
  EXPECT_EQ(repulsion_loss(2.0 * r_n, r_n, 1.55), 0.0);
  EXPECT_EQ(repulsion_loss(3.0 * r_n, r_n, 1.55), 0.0);
  EXPECT_EQ(repulsion_loss_derivative(2.0 * r_n, r_n, 1.55), 0.0);
}

TEST(Repulsion, HandExample) {
  EXPECT_NEAR(repulsion_loss(0.5, 0.5, 1.0), 1.0, 1e-12);
}

TEST(Repulsion, CoincidentParticlesAreCapped) {
  EXPECT_EQ(repulsion_loss(0.0, 0.2, 1.55), kCoincidentLossCap);
  EXPECT_EQ(repulsion_loss(1e-10, 0.2, 1.55), kCoincidentLossCap);
  EXPECT_TRUE(std::isfinite(repulsion_loss(BallPoint(0.1, 0.1), BallPoint(0.1, 0.1), 0.2, 1.55)));
}

TEST(Repulsion, DecreasingInDistanceBelowContact) {
  const double r_n = 0.3;
  double prev = repulsion_loss(0.01, r_n, 1.55);
  for (int i = 2; i < 60; ++i) {
    const double v = repulsion_loss(0.01 * i, r_n, 1.55);
    EXPECT_LT(v, prev);
    EXPECT_GT(v, 0.0);
    prev = v;
  }
}

TEST(Repulsion, DerivativeMatchesCentralDifferences) {
  for (double k : {1.0, 1.55, 2.3})
    for (double d : {0.05, 0.1, 0.2, 0.35, 0.44}) {
      const double fd = (repulsion_loss(d + 1e-6, 0.23, k) - repulsion_loss(d - 1e-6, 0.23, k)) / 2e-6;
      EXPECT_LE(oracle::rel_error(repulsion_loss_derivative(d, 0.23, k), fd), 1e-6);
    }
}

TEST(Boundary, HingeExamples) {
  EXPECT_EQ(boundary_loss(BallPoint(0.5, 0.0), 0.76, 0.01), 0.0);
  EXPECT_NEAR(boundary_loss(BallPoint(0.8, 0.0), 0.76, 0.01), 0.05, 1e-12);
  EXPECT_NEAR(boundary_loss(BallPoint(0.0, 0.75), 0.76, 0.01), 0.0, 1e-15);
}

TEST(PackingEnergy, GradientMatchesCentralDifferences) {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> u(-0.55, 0.55);
  PackingSpec spec = small_spec(6, 1);
  const double r_n = per_particle_radius(spec, kUnit);
  int trials = 0;
  while (trials < 20) {
    std::vector<BallPoint> pts;
    for (std::size_t i = 0; i < spec.n; ++i) pts.emplace_back(u(rng), u(rng));
    // keep away from the boundary hinge and the contact kink
    bool ok = true;
    for (const auto& p : pts) ok = ok && std::abs(p.norm() - (spec.r - spec.margin)) > 1e-3;
    for (std::size_t i = 0; i < pts.size(); ++i)
      for (std::size_t j = i + 1; j < pts.size(); ++j) ok = ok && std::abs(hyp_distance(pts[i], pts[j]) - 2.0 * r_n) > 1e-3 &&
                                                                hyp_distance(pts[i], pts[j]) > 1e-2;
    if (!ok) continue;
    std::vector<Vec2> grad(pts.size());
    packing_energy(pts, r_n, spec, grad);
    for (std::size_t p = 0; p < pts.size(); ++p)
      for (std::size_t c = 0; c < 2; ++c) {
        const double fd = oracle::central_difference(
            [&](const std::vector<double>& x) {
              auto moved = pts;
              moved[p] = BallPoint(x[0], x[1]);
              return packing_energy(moved, r_n, spec).total();
            },
            {pts[p].x(), pts[p].y()}, c, 1e-7);
        EXPECT_LE(oracle::rel_error(grad[p][c], fd, 1e-4), 1e-5) << "particle " << p << " coord " << c;
      }
    ++trials;
  }
}

TEST(Pack, SingleParticleEndsInsideTheRadius) {
  const ParticleSet ps = pack(small_spec(1, 200), kUnit);
  ASSERT_EQ(ps.size(), 1u);
  EXPECT_LE(ps.positions[0].norm(), 0.76);
  EXPECT_EQ(ps.final_repulsion, 0.0);
  EXPECT_NEAR(ps.r_n, hyperbolic_radius(0.76, kUnit), 1e-12);
}

TEST(Pack, TwoParticlesReachContactDistance) {
  const ParticleSet ps = pack(small_spec(2, 1000), kUnit);
  EXPECT_GE(hyp_distance(ps.positions[0], ps.positions[1]), 2.0 * ps.r_n - 1e-3);
}

TEST(Pack, HundredParticlesConvergeUniformly) {
  const ParticleSet ps = pack(small_spec(100, 1000), kUnit);
  EXPECT_EQ(ps.status, PackStatus::converged);
  EXPECT_LE(ps.final_repulsion, 1e-3 * ps.initial_repulsion);
  EXPECT_LE(stats::coefficient_of_variation(nearest_neighbor_distances(ps.positions)), 0.15);
}

TEST(Pack, InvariantsHoldAcrossSeeds) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const PackingSpec spec = small_spec(40, 300, seed);
    const ParticleSet ps = pack(spec, kUnit);
    ASSERT_EQ(ps.loss_history.size(), spec.epochs + 1);
    for (const auto& p : ps.positions) EXPECT_LE(p.norm(), spec.r);
    for (std::size_t t = 0; t + 10 < ps.loss_history.size(); ++t)
      EXPECT_LE(ps.loss_history[t + 10], ps.loss_history[t] + 1e-6) << "seed " << seed << " epoch " << t;
    EXPECT_NEAR(ps.final_loss, packing_energy(ps.positions, ps.r_n, spec).total(), 1e-9 * std::max(1.0, ps.final_loss));
  }
}

TEST(Pack, Deterministic) {
  const PackingSpec spec = small_spec(30, 100, 9);
  const ParticleSet a = pack(spec, kUnit), b = pack(spec, kUnit);
  EXPECT_EQ(a.positions, b.positions);
  EXPECT_EQ(a.loss_history, b.loss_history);
}

TEST(Pack, InvalidSpecThrows) {
  PackingSpec s = small_spec(0, 10);
  EXPECT_THROW(pack(s, kUnit), std::invalid_argument);
  s = small_spec(10, 10);
  s.r = 1.2;
  EXPECT_ANY_THROW(pack(s, kUnit));
  s = small_spec(10, 10);
  s.k = 0.0;
  EXPECT_THROW(pack(s, kUnit), std::invalid_argument);
}
