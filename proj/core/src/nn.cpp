#include "hack/nn.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "hack/random.hpp"

namespace hack {

void MlpSpec::validate() const {
  if (layer_sizes.size() < 2) throw std::invalid_argument("MlpSpec: need at least input and output sizes");
  for (std::size_t s : layer_sizes) {
    if (s == 0) throw std::invalid_argument("MlpSpec: layer sizes must be positive");
  }
}

EncoderParams EncoderParams::zeros(const MlpSpec& spec) {
  spec.validate();
  EncoderParams p;
  p.spec = spec;
  for (std::size_t l = 0; l + 1 < spec.layer_sizes.size(); ++l) {
    const auto in = static_cast<Eigen::Index>(spec.layer_sizes[l]);
    const auto out = static_cast<Eigen::Index>(spec.layer_sizes[l + 1]);
    p.layers.push_back({Eigen::MatrixXd::Zero(out, in), Eigen::VectorXd::Zero(out)});
  }
  return p;
}

EncoderParams EncoderParams::init(const MlpSpec& spec) {
  EncoderParams p = zeros(spec);
  Rng rng = make_rng(spec.seed);
  for (auto& layer : p.layers) {
    const double limit = std::sqrt(6.0 / static_cast<double>(layer.weight.rows() + layer.weight.cols()));
    std::uniform_real_distribution<double> dist(-limit, limit);
    // Row-major fill order keeps the draw sequence independent of Eigen's storage.
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = dist(rng);
  }
  return p;
}

LayerGradients EncoderParams::zero_gradients() const {
  LayerGradients g;
  g.reserve(layers.size());
  for (const auto& l : layers) {
    g.push_back({Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()),
                 Eigen::VectorXd::Zero(l.bias.size())});
  }
  return g;
}

bool EncoderParams::all_finite() const {
  for (const auto& l : layers) {
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  }
  return true;
}

bool EncoderParams::operator==(const EncoderParams& other) const {
  if (spec.layer_sizes != other.spec.layer_sizes || layers.size() != other.layers.size()) return false;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (layers[l].weight != other.layers[l].weight || layers[l].bias != other.layers[l].bias) return false;
  }
  return true;
}

namespace {

void check_input(const EncoderParams& params, Eigen::Index rows) {
  if (params.layers.empty()) throw std::invalid_argument("forward: network has no layers");
  if (rows != params.layers.front().weight.cols()) {
    throw std::invalid_argument("forward: input dimension " + std::to_string(rows) +
                                " does not match the input layer (" +
                                std::to_string(params.layers.front().weight.cols()) + ")");
  }
}

}  // namespace

ForwardCache forward_cache(const EncoderParams& params, const Eigen::Ref<const Eigen::MatrixXd>& xs) {
  check_input(params, xs.rows());
  ForwardCache cache;
  cache.activations.reserve(params.layers.size() + 1);
  cache.pre.reserve(params.layers.size());
  cache.activations.emplace_back(xs);
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto& layer = params.layers[l];
    Eigen::MatrixXd z = layer.weight * cache.activations.back();
    z.colwise() += layer.bias;
    cache.pre.push_back(z);
    if (l + 1 < params.layers.size()) z = z.cwiseMax(0.0);
    cache.activations.push_back(std::move(z));
  }
  return cache;
}

Eigen::MatrixXd forward_batch(const EncoderParams& params, const Eigen::Ref<const Eigen::MatrixXd>& xs) {
  check_input(params, xs.rows());
  Eigen::MatrixXd a = xs;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    Eigen::MatrixXd z = params.layers[l].weight * a;
    z.colwise() += params.layers[l].bias;
    if (l + 1 < params.layers.size()) z = z.cwiseMax(0.0);
    a = std::move(z);
  }
  return a;
}

Eigen::VectorXd forward(const EncoderParams& params, const Eigen::Ref<const Eigen::VectorXd>& x) {
  return forward_batch(params, x);
}

Eigen::MatrixXd backward(const EncoderParams& params, const ForwardCache& cache,
                         const Eigen::Ref<const Eigen::MatrixXd>& grad_output, LayerGradients& grads) {
  Eigen::MatrixXd delta = grad_output;
  for (std::size_t l = params.layers.size(); l-- > 0;) {
    if (l + 1 < params.layers.size()) {
      // Rectifier subgradient is 0 at the kink.
      delta = delta.cwiseProduct((cache.pre[l].array() > 0.0).cast<double>().matrix());
    }
    grads[l].weight.noalias() += delta * cache.activations[l].transpose();
    grads[l].bias += delta.rowwise().sum();
    delta = params.layers[l].weight.transpose() * delta;
  }
  return delta;
}

BallPoint embed(const EncoderParams& params, const Eigen::Ref<const Eigen::VectorXd>& x,
                const BallParams& ball, double r_clip) {
  const Eigen::VectorXd z = forward(params, x);
  if (z.size() != 2) throw std::invalid_argument("embed: encoder output must be two-dimensional");
  const BallPoint e = exp_map0(Vec2{z[0], z[1]}, ball);
  return clip_to_radius(e.coords, r_clip);
}

std::vector<BallPoint> embed_batch(const EncoderParams& params,
                                   const Eigen::Ref<const Eigen::MatrixXd>& xs,
                                   const BallParams& ball, double r_clip) {
  const Eigen::MatrixXd z = forward_batch(params, xs);
  if (z.rows() != 2) throw std::invalid_argument("embed: encoder output must be two-dimensional");
  std::vector<BallPoint> out(static_cast<std::size_t>(z.cols()));
  for (Eigen::Index i = 0; i < z.cols(); ++i) {
    const BallPoint e = exp_map0(Vec2{z(0, i), z(1, i)}, ball);
    out[static_cast<std::size_t>(i)] = clip_to_radius(e.coords, r_clip);
  }
  return out;
}

LossAndGradient hyperbolic_loss_grad(const EncoderParams& params,
                                     const Eigen::Ref<const Eigen::MatrixXd>& xs,
                                     std::span<const BallPoint> targets, const BallParams& ball,
                                     double r_clip) {
  const auto b = static_cast<std::size_t>(xs.cols());
  if (b == 0) throw std::invalid_argument("hyperbolic_loss_grad: empty batch");
  if (targets.size() != b) throw std::invalid_argument("hyperbolic_loss_grad: targets/batch size mismatch");

  const ForwardCache cache = forward_cache(params, xs);
  const Eigen::MatrixXd& z = cache.activations.back();
  if (z.rows() != 2) throw std::invalid_argument("hyperbolic_loss_grad: encoder output must be 2-D");

  LossAndGradient out;
  out.grad = params.zero_gradients();
  Eigen::MatrixXd grad_z(2, static_cast<Eigen::Index>(b));
  const double inv_b = 1.0 / static_cast<double>(b);
  std::array<double, 4> j_exp{}, j_clip{};
  for (std::size_t i = 0; i < b; ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    const Vec2 zi{z(0, col), z(1, col)};
    Vec2 e{}, p{}, g_p{};
    exp_map0(zi, ball, e);
    clip_to_radius(e, r_clip, p);
    out.loss += hyp_distance_grad(p, targets[i].span(), g_p) * inv_b;
    clip_to_radius_jacobian(e, r_clip, j_clip);
    exp_map0_jacobian(zi, ball, j_exp);
    // g_z = J_exp^T J_clip^T g_p
    const Vec2 g_e{j_clip[0] * g_p[0] + j_clip[2] * g_p[1], j_clip[1] * g_p[0] + j_clip[3] * g_p[1]};
    grad_z(0, col) = (j_exp[0] * g_e[0] + j_exp[2] * g_e[1]) * inv_b;
    grad_z(1, col) = (j_exp[1] * g_e[0] + j_exp[3] * g_e[1]) * inv_b;
  }
  backward(params, cache, grad_z, out.grad);
  return out;
}

void sgd_step(EncoderParams& params, const LayerGradients& grad, double lr) {
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    params.layers[l].weight -= lr * grad[l].weight;
    params.layers[l].bias -= lr * grad[l].bias;
  }
}

}  // namespace hack
