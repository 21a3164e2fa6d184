#include "hack/density.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace hack {

const char* to_string(Metric m) { return m == Metric::euclidean ? "euclidean" : "hyperbolic"; }

Metric metric_from_string(const std::string& name) {
  if (name == "euclidean") return Metric::euclidean;
  if (name == "hyperbolic") return Metric::hyperbolic;
  throw std::invalid_argument("unknown metric '" + name + "' (expected euclidean or hyperbolic)");
}

double unit_ball_volume(std::size_t d) {
  const double half = static_cast<double>(d) / 2.0;
  return std::pow(std::numbers::pi, half) / std::tgamma(half + 1.0);
}

KnnDensity knn_density(const Eigen::Ref<const Eigen::MatrixXd>& features, const DensitySpec& spec) {
  const auto n = static_cast<std::size_t>(features.cols());
  const auto d = static_cast<std::size_t>(features.rows());
  if (spec.k < 1 || spec.k >= n) throw std::invalid_argument("knn_density: need 1 <= k < n");
  if (spec.metric == Metric::hyperbolic) {
    for (Eigen::Index i = 0; i < features.cols(); ++i) {
      if (!(features.col(i).squaredNorm() < 1.0)) {
        throw std::domain_error("knn_density: hyperbolic metric needs points inside the unit ball");
      }
    }
  }

  // Symmetric O(n^2) distance table.
  std::vector<double> dist(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto xi = features.col(static_cast<Eigen::Index>(i));
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto xj = features.col(static_cast<Eigen::Index>(j));
      double dij = 0.0;
      if (spec.metric == Metric::euclidean) {
        dij = (xi - xj).norm();
      } else {
        dij = hyp_distance(std::span<const double>(xi.data(), d), std::span<const double>(xj.data(), d));
      }
      dist[i * n + j] = dij;
      dist[j * n + i] = dij;
    }
  }

  const double volume = unit_ball_volume(d);
  const double ratio = static_cast<double>(spec.k) / static_cast<double>(n);
  KnnDensity out;
  out.density.resize(n);
  std::vector<double> row(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t w = 0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) row[w++] = dist[i * n + j];
    std::nth_element(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(spec.k - 1), row.end());
    double dk = row[spec.k - 1];
    if (dk <= 0.0) {
      dk = kDuplicateDistance;
      out.flagged.push_back(i);
    }
    out.density[i] = ratio / (volume * std::pow(dk, static_cast<double>(d)));
  }
  return out;
}

KnnDensity knn_density(std::span<const BallPoint> features, const DensitySpec& spec) {
  Eigen::MatrixXd m(2, static_cast<Eigen::Index>(features.size()));
  for (std::size_t i = 0; i < features.size(); ++i) {
    m(0, static_cast<Eigen::Index>(i)) = features[i].x();
    m(1, static_cast<Eigen::Index>(i)) = features[i].y();
  }
  return knn_density(m, spec);
}

std::vector<ProfileBin> bin_by_norm(std::span<const BallPoint> features, std::span<const double> density,
                                    std::size_t portions) {
  if (portions < 1) throw std::invalid_argument("bin_by_norm: portions must be >= 1");
  if (features.size() != density.size()) throw std::invalid_argument("bin_by_norm: size mismatch");
  std::vector<ProfileBin> bins(portions);
  if (features.empty()) return bins;

  double lo = features.front().norm(), hi = lo;
  for (const auto& f : features) {
    lo = std::min(lo, f.norm());
    hi = std::max(hi, f.norm());
  }
  // norms equal up to rounding count as one shared norm
  const double width = hi - lo > 1e-12 * std::max(1.0, hi) ? (hi - lo) / static_cast<double>(portions) : 0.0;
  for (std::size_t b = 0; b < portions; ++b) bins[b].center = lo + (static_cast<double>(b) + 0.5) * width;

  std::vector<std::size_t> which(features.size(), 0);
  for (std::size_t i = 0; i < features.size(); ++i) {
    std::size_t b = 0;
    if (width > 0.0) {
      b = static_cast<std::size_t>((features[i].norm() - lo) / width);
      b = std::min(b, portions - 1);
    }
    which[i] = b;
    bins[b].count += 1;
    bins[b].mean_density += density[i];
  }
  for (auto& bin : bins)
    if (bin.count > 0) bin.mean_density /= static_cast<double>(bin.count);
  for (std::size_t i = 0; i < features.size(); ++i) {
    const double dev = density[i] - bins[which[i]].mean_density;
    bins[which[i]].variance += dev * dev;
  }
  for (auto& bin : bins)
    if (bin.count > 0) bin.variance /= static_cast<double>(bin.count);
  return bins;
}

std::vector<ProfileBin> norm_density_profile(std::span<const BallPoint> features, const DensitySpec& spec,
                                             std::size_t portions) {
  if (features.empty()) throw std::invalid_argument("norm_density_profile: no features");
  const KnnDensity dens = knn_density(features, spec);
  return bin_by_norm(features, dens.density, portions);
}

}  // namespace hack
