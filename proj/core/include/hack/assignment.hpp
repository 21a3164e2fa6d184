#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hack/geometry.hpp"
#include "hack/packing.hpp"

namespace hack {

/// Square matrix of nonnegative, finite assignment costs (row-major).
class CostMatrix {
 public:
  CostMatrix() = default;
  explicit CostMatrix(std::size_t b, double fill = 0.0);
  /// Throws std::invalid_argument if `rows` is ragged or not square, or has
  /// negative / non-finite entries.
  static CostMatrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t size() const { return b_; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * b_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * b_ + j]; }
  std::span<const double> data() const { return data_; }

  void validate() const;

 private:
  std::size_t b_ = 0;
  std::vector<double> data_;
};

struct Matching {
  std::vector<std::size_t> column_of;  // row i -> column column_of[i]
  double total = 0.0;
};

/// Exact minimum-cost perfect matching (Kuhn-Munkres with potentials, O(b^3)).
/// Among equal-cost optima, returns the lexicographically smallest permutation.
Matching hungarian(const CostMatrix& cost);

double matching_cost(const CostMatrix& cost, std::span<const std::size_t> column_of);

/// Bijection instance id -> particle id over the whole dataset.
struct AssignmentState {
  std::vector<std::size_t> particle_of;

  static AssignmentState identity(std::size_t n);
  static AssignmentState random(std::size_t n, std::uint64_t seed);

  std::size_t size() const { return particle_of.size(); }
  bool is_bijection() const;
};

/// Re-solves the matching between the batch's features and the particles its
/// members currently own, rewiring only those members. Features are indexed
/// parallel to batch_ids. Returns the batch cost after reassignment.
double batch_reassign(std::span<const BallPoint> features, std::span<const std::size_t> batch_ids,
                      AssignmentState& state, std::span<const BallPoint> particles);

/// Sum over the batch of hyp_distance(feature, currently assigned particle).
double batch_cost(std::span<const BallPoint> features, std::span<const std::size_t> batch_ids,
                  const AssignmentState& state, std::span<const BallPoint> particles);

}  // namespace hack
