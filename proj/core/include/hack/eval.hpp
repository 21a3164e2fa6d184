#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hack/data.hpp"
#include "hack/geometry.hpp"
#include "hack/nn.hpp"

namespace hack {

enum class SelectionMode { typical, atypical, atypical_diverse };

const char* to_string(SelectionMode mode);
SelectionMode selection_mode_from_string(const std::string& name);

struct SelectionSpec {
  double fraction = 0.1;
  SelectionMode mode = SelectionMode::atypical;
  std::size_t angular_bins = 8;

  void validate() const;
};

/// ceil(fraction * n), never more than n.
std::size_t selection_quota(std::size_t n, double fraction);

/// Ids in selection order (first = smallest norm for typical, largest otherwise).
/// atypical_diverse splits [0, 2pi) into equal sectors and takes the largest
/// remaining norm from each sector in turn. Ties break by id.
std::vector<std::size_t> select_subset(std::span<const BallPoint> features, const SelectionSpec& spec);

/// select_subset applied within each label group; features and labels are
/// indexed by instance id. Groups are visited in ascending label order.
std::vector<std::size_t> select_per_class(std::span<const BallPoint> features, std::span<const int> labels,
                                          const SelectionSpec& spec);

Eigen::VectorXd softmax(const Eigen::Ref<const Eigen::VectorXd>& logits);

struct CrossEntropy {
  double loss = 0.0;        // mean over the batch
  LayerGradients grad;
  Eigen::MatrixXd grad_input;  // dL/dX, same shape as the batch
};

/// Softmax cross-entropy of labels (0 .. output_dim-1) over columns of xs.
CrossEntropy cross_entropy_grad(const EncoderParams& params, const Eigen::Ref<const Eigen::MatrixXd>& xs,
                                std::span<const int> labels);

struct ClassifierOptions {
  std::size_t epochs = 10;
  double lr = 0.1;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
};

struct Classifier {
  EncoderParams params;
  std::vector<double> loss_history;  // mean minibatch loss per epoch

  std::vector<int> predict(const Dataset& data) const;
  double accuracy(const Dataset& data) const;
};

/// Minibatch SGD on softmax cross-entropy. Throws std::invalid_argument when
/// the data is empty, unlabeled, or a label falls outside the output layer.
Classifier train_classifier(const Dataset& train, const MlpSpec& mlp, const ClassifierOptions& opts);

/// clamp_[0,1](x + epsilon * sign(dL/dx)).
Eigen::VectorXd fgsm_attack(const EncoderParams& params, const Eigen::Ref<const Eigen::VectorXd>& x, int label,
                            double epsilon);
/// Perturbs every instance of a labeled dataset.
Dataset fgsm_dataset(const EncoderParams& params, const Dataset& data, double epsilon);

/// Accuracy on the FGSM-perturbed dataset.
double adversarial_accuracy(const Classifier& model, const Dataset& data, double epsilon);

/// Max softmax probability per instance.
std::vector<double> confidences(const EncoderParams& params, const Dataset& data);
/// Ids by descending confidence, ties by id.
std::vector<std::size_t> confidence_rank(const EncoderParams& params, const Dataset& data);

}  // namespace hack
