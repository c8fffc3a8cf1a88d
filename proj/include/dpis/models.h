// Copyright 2026 The DPIS Toolkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Small classifiers with per-example cross-entropy gradients.
//
// Parameters live in one flat vector so that clipping, noise and updates act
// on a single GradVec. Each weight matrix is stored row-major as
// (out × in) and followed by its bias.

#ifndef DPIS_MODELS_H_
#define DPIS_MODELS_H_

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "dpis/rng.h"
#include "dpis/types.h"

namespace dpis {

struct Example {
  Eigen::VectorXd features;
  int label = 0;
};

// One affine layer in the flat layout.
struct LayerShape {
  int in = 0;
  int out = 0;
  int64_t size() const { return static_cast<int64_t>(in + 1) * out; }
};

struct EvalResult {
  double mean_loss = 0;
  double accuracy = 0;
};

class Model {
 public:
  virtual ~Model() = default;

  virtual std::string name() const = 0;
  const std::vector<LayerShape>& layers() const { return layers_; }
  int input_dim() const { return layers_.front().in; }
  int num_classes() const { return layers_.back().out; }
  int64_t dim() const;

  // Uniform in ±1/√fan_in, layer by layer; biases included.
  GradVec Init(Rng& rng) const;

  // Cross-entropy loss at one example. Writes the gradient when `grad` is
  // non-null, resizing it to dim().
  virtual absl::StatusOr<double> LossAndGrad(const GradVec& theta,
                                             const Example& example,
                                             GradVec* grad) const = 0;

  // Class scores before the softmax.
  virtual Eigen::VectorXd Logits(const GradVec& theta,
                                 const Eigen::VectorXd& features) const = 0;

 protected:
  explicit Model(std::vector<LayerShape> layers) : layers_(std::move(layers)) {}
  absl::Status CheckShapes(const GradVec& theta, const Example& example) const;

 private:
  std::vector<LayerShape> layers_;
};

// Multinomial logistic regression.
class LogisticRegression : public Model {
 public:
  LogisticRegression(int input_dim, int num_classes);

  std::string name() const override { return "logreg"; }
  absl::StatusOr<double> LossAndGrad(const GradVec& theta,
                                     const Example& example,
                                     GradVec* grad) const override;
  Eigen::VectorXd Logits(const GradVec& theta,
                         const Eigen::VectorXd& features) const override;
};

// One tanh hidden layer.
class Mlp : public Model {
 public:
  static constexpr int kDefaultHidden = 32;

  Mlp(int input_dim, int hidden, int num_classes);

  std::string name() const override { return "mlp"; }
  int hidden() const { return layers()[0].out; }
  absl::StatusOr<double> LossAndGrad(const GradVec& theta,
                                     const Example& example,
                                     GradVec* grad) const override;
  Eigen::VectorXd Logits(const GradVec& theta,
                         const Eigen::VectorXd& features) const override;
};

// "logreg" or "mlp".
absl::StatusOr<std::unique_ptr<Model>> MakeModel(const std::string& kind,
                                                 int input_dim,
                                                 int num_classes,
                                                 int hidden = Mlp::kDefaultHidden);

// Index of the largest entry; ties go to the smallest index.
int Argmax(const Eigen::VectorXd& scores);

// log Σ exp(z) - z[label], with the maximum subtracted first.
double CrossEntropy(const Eigen::VectorXd& logits, int label);

// Mean loss and argmax accuracy.
absl::StatusOr<EvalResult> Evaluate(const Model& model, const GradVec& theta,
                                    std::span<const Example> examples);

}  // namespace dpis

#endif  // DPIS_MODELS_H_
