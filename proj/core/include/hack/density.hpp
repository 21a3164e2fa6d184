#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hack/geometry.hpp"

namespace hack {

enum class Metric { euclidean, hyperbolic };

const char* to_string(Metric m);
Metric metric_from_string(const std::string& name);

struct DensitySpec {
  std::size_t k = 10;
  Metric metric = Metric::hyperbolic;
};

/// Volume of the unit d-ball, pi^(d/2) / Gamma(d/2 + 1).
double unit_ball_volume(std::size_t d);

inline constexpr double kDuplicateDistance = 1e-12;

struct KnnDensity {
  std::vector<double> density;
  /// Instances whose k-th neighbour distance was 0 and got kDuplicateDistance instead.
  std::vector<std::size_t> flagged;
};

/// p(v_i) = (k / n) / (A_d * D^d(v_i, v_k(i))) over the columns of `features`.
/// Throws std::invalid_argument unless 1 <= k < n.
KnnDensity knn_density(const Eigen::Ref<const Eigen::MatrixXd>& features, const DensitySpec& spec);
KnnDensity knn_density(std::span<const BallPoint> features, const DensitySpec& spec);

struct ProfileBin {
  double center = 0.0;
  double mean_density = 0.0;
  double variance = 0.0;
  std::size_t count = 0;
};

/// Equal-width bins over [min norm, max norm]; empty bins are kept with count 0.
std::vector<ProfileBin> norm_density_profile(std::span<const BallPoint> features, const DensitySpec& spec,
                                             std::size_t portions = 50);

/// Same binning, given precomputed densities.
std::vector<ProfileBin> bin_by_norm(std::span<const BallPoint> features, std::span<const double> density,
                                    std::size_t portions);

}  // namespace hack
