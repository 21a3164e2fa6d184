#pragma once

#include <cstdint>
#include <vector>

#include "hack/assignment.hpp"
#include "hack/data.hpp"
#include "hack/nn.hpp"
#include "hack/packing.hpp"

namespace hack {

struct TrainConfig {
  std::size_t epochs = 200;
  double lr0 = 0.1;
  std::size_t batch_size = 128;
  std::size_t assign_every = 2;
  std::uint64_t seed = 0;
  /// Epoch e means "after e completed epochs"; 0 is the untrained encoder.
  std::vector<std::size_t> snapshot_epochs;
  /// Empty layer sizes pick default_encoder(dataset dim) with this config's seed.
  MlpSpec encoder;

  void validate() const;
  /// lr0 * (1 + cos(pi t / epochs)) / 2
  double learning_rate(std::size_t epoch) const;
};

/// 2 -> 32 -> 2 for 2-D inputs, dim -> 256 -> 64 -> 2 otherwise.
MlpSpec default_encoder(std::size_t input_dim, std::uint64_t seed);

struct Snapshot {
  std::size_t epoch = 0;
  std::vector<BallPoint> features;
  AssignmentState assignment;
};

/// Batch cost before and after one batch_reassign call.
struct ReassignRecord {
  std::size_t epoch = 0;
  double before = 0.0;
  double after = 0.0;
};

struct TrainResult {
  EncoderParams params;
  AssignmentState assignment;
  std::vector<Snapshot> snapshots;
  std::vector<double> loss_history;  // mean batch loss per epoch
  std::vector<ReassignRecord> reassignments;
};

/// Alternates batch-wise Hungarian reassignment and SGD toward the assigned
/// particles. Throws std::invalid_argument when |dataset| != particle count.
TrainResult hack_train(const Dataset& dataset, const ParticleSet& particles, const TrainConfig& cfg);

}  // namespace hack
