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

#include "dpis/models.h"

#include <cmath>
#include <utility>

#include "absl/status/status.h"
#include "absl/strings/str_format.h"
#include "dpis/status_macros.h"

namespace dpis {
namespace {

using RowMajorMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatrixMap = Eigen::Map<const RowMajorMatrix>;
using MatrixMap = Eigen::Map<RowMajorMatrix>;

// Softmax of `logits` minus the one-hot label: ∂loss/∂logits.
Eigen::VectorXd LogitGradient(const Eigen::VectorXd& logits, int label) {
  Eigen::VectorXd s = (logits.array() - logits.maxCoeff()).exp();
  s /= s.sum();
  s[label] -= 1;
  return s;
}

}  // namespace

int64_t Model::dim() const {
  int64_t d = 0;
  for (const LayerShape& l : layers_) d += l.size();
  return d;
}

GradVec Model::Init(Rng& rng) const {
  GradVec theta(dim());
  int64_t offset = 0;
  for (const LayerShape& l : layers_) {
    const double bound = 1 / std::sqrt(static_cast<double>(l.in));
    for (int64_t j = 0; j < l.size(); ++j) {
      theta[offset + j] = bound * (2 * rng.Uniform() - 1);
    }
    offset += l.size();
  }
  return theta;
}

absl::Status Model::CheckShapes(const GradVec& theta,
                                const Example& example) const {
  if (theta.size() != dim()) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "%s expects %d parameters, got %d", name(), dim(), theta.size()));
  }
  if (example.features.size() != input_dim()) {
    return absl::InvalidArgumentError(
        absl::StrFormat("%s expects %d features, got %d", name(), input_dim(),
                        example.features.size()));
  }
  if (example.label < 0 || example.label >= num_classes()) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "label %d outside [0, %d)", example.label, num_classes()));
  }
  return absl::OkStatus();
}

LogisticRegression::LogisticRegression(int input_dim, int num_classes)
    : Model({{input_dim, num_classes}}) {}

Eigen::VectorXd LogisticRegression::Logits(
    const GradVec& theta, const Eigen::VectorXd& features) const {
  const LayerShape& l = layers()[0];
  ConstMatrixMap w(theta.data(), l.out, l.in);
  return w * features + theta.segment(l.in * l.out, l.out);
}

absl::StatusOr<double> LogisticRegression::LossAndGrad(
    const GradVec& theta, const Example& example, GradVec* grad) const {
  RETURN_IF_ERROR(CheckShapes(theta, example));
  const Eigen::VectorXd z = Logits(theta, example.features);
  if (grad != nullptr) {
    const LayerShape& l = layers()[0];
    grad->resize(dim());
    const Eigen::VectorXd dz = LogitGradient(z, example.label);
    MatrixMap(grad->data(), l.out, l.in).noalias() =
        dz * example.features.transpose();
    grad->segment(l.in * l.out, l.out) = dz;
  }
  return CrossEntropy(z, example.label);
}

Mlp::Mlp(int input_dim, int hidden, int num_classes)
    : Model({{input_dim, hidden}, {hidden, num_classes}}) {}

Eigen::VectorXd Mlp::Logits(const GradVec& theta,
                            const Eigen::VectorXd& features) const {
  const LayerShape& l1 = layers()[0];
  const LayerShape& l2 = layers()[1];
  ConstMatrixMap w1(theta.data(), l1.out, l1.in);
  const Eigen::VectorXd h =
      (w1 * features + theta.segment(l1.in * l1.out, l1.out))
          .array()
          .tanh()
          .matrix();
  const int64_t o2 = l1.size();
  ConstMatrixMap w2(theta.data() + o2, l2.out, l2.in);
  return w2 * h + theta.segment(o2 + l2.in * l2.out, l2.out);
}

absl::StatusOr<double> Mlp::LossAndGrad(const GradVec& theta,
                                        const Example& example,
                                        GradVec* grad) const {
  RETURN_IF_ERROR(CheckShapes(theta, example));
  const LayerShape& l1 = layers()[0];
  const LayerShape& l2 = layers()[1];
  const int64_t o2 = l1.size();
  ConstMatrixMap w1(theta.data(), l1.out, l1.in);
  ConstMatrixMap w2(theta.data() + o2, l2.out, l2.in);

  const Eigen::VectorXd h =
      (w1 * example.features + theta.segment(l1.in * l1.out, l1.out))
          .array()
          .tanh()
          .matrix();
  const Eigen::VectorXd z = w2 * h + theta.segment(o2 + l2.in * l2.out, l2.out);

  if (grad != nullptr) {
    grad->resize(dim());
    const Eigen::VectorXd dz = LogitGradient(z, example.label);
    const Eigen::VectorXd da =
        ((w2.transpose() * dz).array() * (1 - h.array().square())).matrix();
    MatrixMap(grad->data(), l1.out, l1.in).noalias() =
        da * example.features.transpose();
    grad->segment(l1.in * l1.out, l1.out) = da;
    MatrixMap(grad->data() + o2, l2.out, l2.in).noalias() =
        dz * h.transpose();
    grad->segment(o2 + l2.in * l2.out, l2.out) = dz;
  }
  return CrossEntropy(z, example.label);
}

absl::StatusOr<std::unique_ptr<Model>> MakeModel(const std::string& kind,
                                                 int input_dim,
                                                 int num_classes,
                                                 int hidden) {
  if (input_dim < 1 || num_classes < 2) {
    return absl::InvalidArgumentError(
        "need at least one feature and two classes");
  }
  if (kind == "logreg") {
    return std::make_unique<LogisticRegression>(input_dim, num_classes);
  }
  if (kind == "mlp") {
    if (hidden < 1) return absl::InvalidArgumentError("hidden width < 1");
    return std::make_unique<Mlp>(input_dim, hidden, num_classes);
  }
  return absl::InvalidArgumentError(
      absl::StrFormat("unknown model '%s' (expected logreg or mlp)", kind));
}

int Argmax(const Eigen::VectorXd& scores) {
  int best = 0;
  for (int c = 1; c < scores.size(); ++c) {
    if (scores[c] > scores[best]) best = c;
  }
  return best;
}

double CrossEntropy(const Eigen::VectorXd& logits, int label) {
  const double m = logits.maxCoeff();
  return m + std::log((logits.array() - m).exp().sum()) - logits[label];
}

absl::StatusOr<EvalResult> Evaluate(const Model& model, const GradVec& theta,
                                    std::span<const Example> examples) {
  if (examples.empty()) {
    return absl::InvalidArgumentError("cannot evaluate on an empty dataset");
  }
  double loss = 0;
  int64_t correct = 0;
  for (const Example& x : examples) {
    ASSIGN_OR_RETURN(double l, model.LossAndGrad(theta, x, nullptr));
    loss += l;
    if (Argmax(model.Logits(theta, x.features)) == x.label) ++correct;
  }
  const double n = static_cast<double>(examples.size());
  return EvalResult{loss / n, correct / n};
}

}  // namespace dpis
