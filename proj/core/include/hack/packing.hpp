#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hack/geometry.hpp"

namespace hack {

/// Hyperparameters of the particle packing. Defaults are the published settings.
struct PackingSpec {
  std::size_t n = 100;
  double r = 0.76;        // Euclidean packing radius
  double k = 1.55;        // repulsion exponent
  double margin = 0.01;   // boundary hinge margin
  double lr = 0.01;
  std::size_t epochs = 1000;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument when an invariant is broken.
  void validate() const;
};

enum class PackStatus { converged, not_converged };

const char* to_string(PackStatus status);

struct ParticleSet {
  std::vector<BallPoint> positions;
  double r_n = 0.0;
  PackingSpec spec;
  BallParams ball;

  double initial_repulsion = 0.0;
  double final_repulsion = 0.0;
  double final_loss = 0.0;  // repulsion + boundary at the returned positions
  PackStatus status = PackStatus::converged;
  /// Total loss at the initial positions and after every epoch (epochs + 1 entries).
  std::vector<double> loss_history;

  std::size_t size() const { return positions.size(); }
};

/// Hyperbolic radius of the Euclidean radius r: s * ln((s + r) / (s - r)).
double hyperbolic_radius(double r, const BallParams& ball);

/// Radius that gives each of n particles an equal share of the hyperbolic area
/// of the radius-r disk. Throws std::domain_error if r >= s.
double per_particle_radius(std::size_t n, double r, const BallParams& ball);
double per_particle_radius(const PackingSpec& spec, const BallParams& ball);

inline constexpr double kCoincidentDistance = 1e-9;
inline constexpr double kCoincidentLossCap = 1e12;

/// Pairwise repulsion as a function of the hyperbolic distance d. Zero for d >= 2 r_n.
double repulsion_loss(double d, double r_n, double k);
double repulsion_loss(const BallPoint& i, const BallPoint& j, double r_n, double k);
/// dV/dd; zero at and beyond contact and for coincident particles.
double repulsion_loss_derivative(double d, double r_n, double k);

double boundary_loss(const BallPoint& p, double r, double margin);

struct PackingEnergy {
  double repulsion = 0.0;
  double boundary = 0.0;
  double total() const { return repulsion + boundary; }
};

/// Sum of pairwise repulsion over i < j plus per-particle boundary loss. When
/// `grad` is non-empty it receives d(total)/d(coordinates), one Vec2 per particle.
PackingEnergy packing_energy(std::span<const BallPoint> positions, double r_n,
                             const PackingSpec& spec, std::span<Vec2> grad = {});

/// Packs spec.n particles inside the radius-spec.r disk. Deterministic for a fixed seed.
ParticleSet pack(const PackingSpec& spec, const BallParams& ball);

/// Nearest-neighbour hyperbolic distance of every particle (n >= 2).
std::vector<double> nearest_neighbor_distances(std::span<const BallPoint> positions);

}  // namespace hack
