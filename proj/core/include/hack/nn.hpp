#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "hack/geometry.hpp"

namespace hack {

/// Fully connected network: rectifier on hidden layers, identity on the output.
struct MlpSpec {
  std::vector<std::size_t> layer_sizes;  // input, hidden..., output
  std::uint64_t seed = 0;

  void validate() const;
  std::size_t input_dim() const { return layer_sizes.front(); }
  std::size_t output_dim() const { return layer_sizes.back(); }
};

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
};

/// Gradients share the parameter layout.
using LayerGradients = std::vector<DenseLayer>;

struct EncoderParams {
  MlpSpec spec;
  std::vector<DenseLayer> layers;

  /// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
  static EncoderParams init(const MlpSpec& spec);
  static EncoderParams zeros(const MlpSpec& spec);

  LayerGradients zero_gradients() const;
  bool all_finite() const;
  bool operator==(const EncoderParams& other) const;
};

/// Activations kept for the backward pass; inputs are stored column-per-sample.
struct ForwardCache {
  std::vector<Eigen::MatrixXd> activations;  // a_0 = X, ..., a_L = output
  std::vector<Eigen::MatrixXd> pre;          // z_1 .. z_L
};

/// Throws std::invalid_argument on an input dimension mismatch.
Eigen::VectorXd forward(const EncoderParams& params, const Eigen::Ref<const Eigen::VectorXd>& x);
Eigen::MatrixXd forward_batch(const EncoderParams& params, const Eigen::Ref<const Eigen::MatrixXd>& xs);
ForwardCache forward_cache(const EncoderParams& params, const Eigen::Ref<const Eigen::MatrixXd>& xs);

/// Backpropagates dL/d(output) (output_dim x batch). Adds into `grads` and
/// returns dL/d(input).
Eigen::MatrixXd backward(const EncoderParams& params, const ForwardCache& cache,
                         const Eigen::Ref<const Eigen::MatrixXd>& grad_output, LayerGradients& grads);

/// clip_to_radius(exp_map0(forward(x)), r_clip). Requires a 2-D output layer.
BallPoint embed(const EncoderParams& params, const Eigen::Ref<const Eigen::VectorXd>& x,
                const BallParams& ball, double r_clip);
std::vector<BallPoint> embed_batch(const EncoderParams& params,
                                   const Eigen::Ref<const Eigen::MatrixXd>& xs,
                                   const BallParams& ball, double r_clip);

struct LossAndGradient {
  double loss = 0.0;  // mean hyperbolic distance to the targets
  LayerGradients grad;
};

/// Mean over the batch (columns of xs) of hyp_distance(embed(x_i), target_i),
/// with exact gradients through the distance, clip, exp map and dense layers.
LossAndGradient hyperbolic_loss_grad(const EncoderParams& params,
                                     const Eigen::Ref<const Eigen::MatrixXd>& xs,
                                     std::span<const BallPoint> targets, const BallParams& ball,
                                     double r_clip);

void sgd_step(EncoderParams& params, const LayerGradients& grad, double lr);

}  // namespace hack
