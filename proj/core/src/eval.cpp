#include "hack/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "hack/random.hpp"

namespace hack {

const char* to_string(SelectionMode mode) {
  switch (mode) {
    case SelectionMode::typical: return "typical";
    case SelectionMode::atypical: return "atypical";
    case SelectionMode::atypical_diverse: return "atypical_diverse";
  }
  return "?";
}

SelectionMode selection_mode_from_string(const std::string& name) {
  if (name == "typical") return SelectionMode::typical;
  if (name == "atypical") return SelectionMode::atypical;
  if (name == "atypical_diverse" || name == "atypical-diverse") return SelectionMode::atypical_diverse;
  throw std::invalid_argument("unknown selection mode '" + name + "' (expected typical, atypical or atypical_diverse)");
}

void SelectionSpec::validate() const {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw std::invalid_argument("SelectionSpec: fraction must be in (0, 1]");
  if (angular_bins < 1) throw std::invalid_argument("SelectionSpec: angular_bins must be >= 1");
}

std::size_t selection_quota(std::size_t n, double fraction) {
  // The small slack keeps products like 0.1 * 2000 from rounding up to 201.
  const double q = std::ceil(fraction * static_cast<double>(n) - 1e-9);
  return std::min(n, static_cast<std::size_t>(std::max(0.0, q)));
}

std::vector<std::size_t> select_subset(std::span<const BallPoint> features, const SelectionSpec& spec) {
  spec.validate();
  const std::size_t n = features.size();
  if (n == 0) throw std::invalid_argument("select_subset: no features");
  const std::size_t quota = selection_quota(n, spec.fraction);

  std::vector<std::size_t> ids(n);
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  auto by_norm_desc = [&](std::size_t a, std::size_t b) {
    const double na = features[a].norm(), nb = features[b].norm();
    return na != nb ? na > nb : a < b;
  };

  if (spec.mode == SelectionMode::typical) {
    std::sort(ids.begin(), ids.end(), [&](std::size_t a, std::size_t b) {
      const double na = features[a].norm(), nb = features[b].norm();
      return na != nb ? na < nb : a < b;
    });
    ids.resize(quota);
    return ids;
  }
  if (spec.mode == SelectionMode::atypical) {
    std::sort(ids.begin(), ids.end(), by_norm_desc);
    ids.resize(quota);
    return ids;
  }

  const double width = 2.0 * std::numbers::pi / static_cast<double>(spec.angular_bins);
  std::vector<std::vector<std::size_t>> sectors(spec.angular_bins);
  for (std::size_t i = 0; i < n; ++i) {
    auto s = static_cast<std::size_t>(features[i].angle() / width);
    sectors[std::min(s, spec.angular_bins - 1)].push_back(i);
  }
  for (auto& s : sectors) std::sort(s.begin(), s.end(), by_norm_desc);

  std::vector<std::size_t> out;
  out.reserve(quota);
  std::vector<std::size_t> cursor(spec.angular_bins, 0);
  while (out.size() < quota) {
    for (std::size_t s = 0; s < spec.angular_bins && out.size() < quota; ++s) {
      if (cursor[s] < sectors[s].size()) out.push_back(sectors[s][cursor[s]++]);
    }
  }
  return out;
}

std::vector<std::size_t> select_per_class(std::span<const BallPoint> features, std::span<const int> labels,
                                          const SelectionSpec& spec) {
  if (features.size() != labels.size()) throw std::invalid_argument("select_per_class: size mismatch");
  std::vector<int> classes(labels.begin(), labels.end());
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  std::vector<std::size_t> out;
  for (int c : classes) {
    std::vector<std::size_t> ids;
    std::vector<BallPoint> pts;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == c) {
        ids.push_back(i);
        pts.push_back(features[i]);
      }
    }
    for (std::size_t local : select_subset(pts, spec)) out.push_back(ids[local]);
  }
  return out;
}

Eigen::VectorXd softmax(const Eigen::Ref<const Eigen::VectorXd>& logits) {
  const double m = logits.maxCoeff();
  Eigen::VectorXd e = (logits.array() - m).exp().matrix();
  return e / e.sum();
}

namespace {

void check_labels(std::span<const int> labels, std::size_t classes) {
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= classes) {
      throw std::invalid_argument("label " + std::to_string(y) + " outside the classifier's " + std::to_string(classes) +
                                  " outputs");
    }
  }
}

Eigen::MatrixXd gather(const Eigen::MatrixXd& features, std::span<const std::size_t> ids) {
  Eigen::MatrixXd out(features.rows(), static_cast<Eigen::Index>(ids.size()));
  for (std::size_t i = 0; i < ids.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = features.col(static_cast<Eigen::Index>(ids[i]));
  return out;
}

}  // namespace

CrossEntropy cross_entropy_grad(const EncoderParams& params, const Eigen::Ref<const Eigen::MatrixXd>& xs,
                                std::span<const int> labels) {
  const auto b = static_cast<std::size_t>(xs.cols());
  if (b == 0) throw std::invalid_argument("cross_entropy_grad: empty batch");
  if (labels.size() != b) throw std::invalid_argument("cross_entropy_grad: labels/batch size mismatch");
  check_labels(labels, params.spec.output_dim());

  const ForwardCache cache = forward_cache(params, xs);
  const Eigen::MatrixXd& z = cache.activations.back();
  Eigen::MatrixXd g(z.rows(), z.cols());
  const double inv_b = 1.0 / static_cast<double>(b);
  CrossEntropy out;
  for (std::size_t i = 0; i < b; ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    const Eigen::VectorXd p = softmax(z.col(col));
    const double m = z.col(col).maxCoeff();
    const double lse = m + std::log((z.col(col).array() - m).exp().sum());
    out.loss += (lse - z(labels[i], col)) * inv_b;
    g.col(col) = p * inv_b;
    g(labels[i], col) -= inv_b;
  }
  out.grad = params.zero_gradients();
  out.grad_input = backward(params, cache, g, out.grad);
  return out;
}

std::vector<int> Classifier::predict(const Dataset& data) const {
  const Eigen::MatrixXd z = forward_batch(params, data.features);
  std::vector<int> out(data.size());
  for (Eigen::Index i = 0; i < z.cols(); ++i) {
    Eigen::Index arg = 0;
    z.col(i).maxCoeff(&arg);
    out[static_cast<std::size_t>(i)] = static_cast<int>(arg);
  }
  return out;
}

double Classifier::accuracy(const Dataset& data) const {
  if (!data.has_labels()) throw std::invalid_argument("accuracy: dataset has no labels");
  if (data.size() == 0) return 0.0;
  const auto pred = predict(data);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hit += pred[i] == data.labels[i] ? 1 : 0;
  return static_cast<double>(hit) / static_cast<double>(pred.size());
}

Classifier train_classifier(const Dataset& train, const MlpSpec& mlp, const ClassifierOptions& opts) {
  if (train.size() == 0) throw std::invalid_argument("train_classifier: empty training set");
  if (!train.has_labels()) throw std::invalid_argument("train_classifier: training set has no labels");
  if (opts.batch_size < 1) throw std::invalid_argument("train_classifier: batch_size must be >= 1");
  mlp.validate();
  if (mlp.input_dim() != train.dim()) throw std::invalid_argument("train_classifier: input size does not match the data");
  check_labels(train.labels, mlp.output_dim());

  Classifier model{EncoderParams::init(mlp), {}};
  Rng rng = make_rng(opts.seed);
  const std::size_t n = train.size();
  std::vector<int> yb;
  for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
    const auto order = random_permutation(n, rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < n; start += opts.batch_size) {
      const std::size_t b = std::min(opts.batch_size, n - start);
      const std::span<const std::size_t> ids(order.data() + start, b);
      yb.clear();
      for (std::size_t id : ids) yb.push_back(train.labels[id]);
      const CrossEntropy ce = cross_entropy_grad(model.params, gather(train.features, ids), yb);
      sgd_step(model.params, ce.grad, opts.lr);
      loss_sum += ce.loss * static_cast<double>(b);
    }
    model.loss_history.push_back(loss_sum / static_cast<double>(n));
  }
  return model;
}

Eigen::VectorXd fgsm_attack(const EncoderParams& params, const Eigen::Ref<const Eigen::VectorXd>& x, int label,
                            double epsilon) {
  if (!(epsilon >= 0.0)) throw std::invalid_argument("fgsm_attack: epsilon must be >= 0");
  const int labels[1] = {label};
  const CrossEntropy ce = cross_entropy_grad(params, x, labels);
  Eigen::VectorXd out = x;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    const double g = ce.grad_input(i, 0);
    const double step = g > 0.0 ? epsilon : (g < 0.0 ? -epsilon : 0.0);
    out(i) = std::clamp(x(i) + step, 0.0, 1.0);
  }
  return out;
}

Dataset fgsm_dataset(const EncoderParams& params, const Dataset& data, double epsilon) {
  if (!data.has_labels()) throw std::invalid_argument("fgsm_dataset: dataset has no labels");
  Dataset out = data;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    out.features.col(col) = fgsm_attack(params, data.features.col(col), data.labels[i], epsilon);
  }
  return out;
}

double adversarial_accuracy(const Classifier& model, const Dataset& data, double epsilon) {
  return model.accuracy(fgsm_dataset(model.params, data, epsilon));
}

std::vector<double> confidences(const EncoderParams& params, const Dataset& data) {
  const Eigen::MatrixXd z = forward_batch(params, data.features);
  std::vector<double> out(data.size());
  for (Eigen::Index i = 0; i < z.cols(); ++i) out[static_cast<std::size_t>(i)] = softmax(z.col(i)).maxCoeff();
  return out;
}

std::vector<std::size_t> confidence_rank(const EncoderParams& params, const Dataset& data) {
  const auto conf = confidences(params, data);
  std::vector<std::size_t> ids(conf.size());
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  std::sort(ids.begin(), ids.end(), [&](std::size_t a, std::size_t b) {
    return conf[a] != conf[b] ? conf[a] > conf[b] : a < b;
  });
  return ids;
}

}  // namespace hack
