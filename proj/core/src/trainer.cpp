#include "hack/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "hack/random.hpp"

namespace hack {

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
  if (assign_every < 1) throw std::invalid_argument("TrainConfig: assign_every must be >= 1");
  if (!(lr0 > 0.0) || !std::isfinite(lr0)) throw std::invalid_argument("TrainConfig: lr0 must be positive");
  for (std::size_t e : snapshot_epochs) {
    if (e > epochs) throw std::invalid_argument("TrainConfig: snapshot epoch " + std::to_string(e) + " exceeds epochs");
  }
}

double TrainConfig::learning_rate(std::size_t epoch) const {
  return lr0 * (1.0 + std::cos(std::numbers::pi * static_cast<double>(epoch) / static_cast<double>(epochs))) / 2.0;
}

MlpSpec default_encoder(std::size_t input_dim, std::uint64_t seed) {
  MlpSpec spec;
  spec.seed = seed;
  if (input_dim <= 2) spec.layer_sizes = {input_dim, 32, 2};
  else spec.layer_sizes = {input_dim, 256, 64, 2};
  return spec;
}

namespace {

Eigen::MatrixXd gather(const Eigen::MatrixXd& features, std::span<const std::size_t> ids) {
  Eigen::MatrixXd out(features.rows(), static_cast<Eigen::Index>(ids.size()));
  for (std::size_t i = 0; i < ids.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = features.col(static_cast<Eigen::Index>(ids[i]));
  return out;
}

// Shuffle stream is kept apart from the assignment and init streams.
constexpr std::uint64_t kShuffleSalt = 0x9e3779b97f4a7c15ULL;

}  // namespace

TrainResult hack_train(const Dataset& dataset, const ParticleSet& particles, const TrainConfig& cfg) {
  const std::size_t n = dataset.size();
  if (n != particles.size()) {
    throw std::invalid_argument("hack_train: dataset has " + std::to_string(n) + " instances but there are " +
                                std::to_string(particles.size()) + " particles");
  }
  if (cfg.epochs != 0) cfg.validate();

  MlpSpec enc = cfg.encoder.layer_sizes.empty() ? default_encoder(dataset.dim(), cfg.seed) : cfg.encoder;
  enc.validate();
  if (enc.input_dim() != dataset.dim()) throw std::invalid_argument("hack_train: encoder input size does not match the data");
  if (enc.output_dim() != 2) throw std::invalid_argument("hack_train: encoder output must be 2-D");

  TrainResult res;
  res.params = EncoderParams::init(enc);
  res.assignment = AssignmentState::random(n, cfg.seed);
  const double r_clip = particles.spec.r;
  const BallParams& ball = particles.ball;
  const std::span<const BallPoint> targets_all(particles.positions);

  auto wants_snapshot = [&](std::size_t e) {
    return std::find(cfg.snapshot_epochs.begin(), cfg.snapshot_epochs.end(), e) != cfg.snapshot_epochs.end();
  };
  auto take_snapshot = [&](std::size_t e) {
    res.snapshots.push_back({e, embed_batch(res.params, dataset.features, ball, r_clip), res.assignment});
  };
  if (wants_snapshot(0)) take_snapshot(0);

  Rng shuffle_rng = make_rng(cfg.seed ^ kShuffleSalt);
  std::vector<BallPoint> targets;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const std::vector<std::size_t> order = random_permutation(n, shuffle_rng);
    const bool reassign = epoch % cfg.assign_every == 0;
    const double lr = cfg.learning_rate(epoch);
    double loss_sum = 0.0;

    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t b = std::min(cfg.batch_size, n - start);
      const std::span<const std::size_t> ids(order.data() + start, b);
      const Eigen::MatrixXd xb = gather(dataset.features, ids);

      if (reassign && b >= 2) {
        const auto feats = embed_batch(res.params, xb, ball, r_clip);
        const double before = batch_cost(feats, ids, res.assignment, targets_all);
        const double after = batch_reassign(feats, ids, res.assignment, targets_all);
        res.reassignments.push_back({epoch, before, after});
      }

      targets.clear();
      for (std::size_t id : ids) targets.push_back(particles.positions[res.assignment.particle_of[id]]);
      const LossAndGradient lg = hyperbolic_loss_grad(res.params, xb, targets, ball, r_clip);
      sgd_step(res.params, lg.grad, lr);
      loss_sum += lg.loss * static_cast<double>(b);
    }
    res.loss_history.push_back(loss_sum / static_cast<double>(n));
    if (wants_snapshot(epoch + 1)) take_snapshot(epoch + 1);
  }
  return res;
}

}  // namespace hack
