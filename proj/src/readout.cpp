#include "drc/readout.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "drc/error.hpp"

namespace drc {

TargetMatrix build_targets(const std::vector<int>& labels, const std::vector<Index>& lengths, int n_classes) {
  require(labels.size() == lengths.size(), "labels and lengths differ in size");
  require(n_classes >= 1, "need at least one class");
  Index total = 0;
  for (std::size_t u = 0; u < labels.size(); ++u) {
    require(labels[u] >= 0 && labels[u] < n_classes,
            "label " + std::to_string(labels[u]) + " outside [0, " + std::to_string(n_classes) + ")");
    require(lengths[u] >= 1, "utterance lengths must be positive");
    total += lengths[u];
  }
  TargetMatrix t{Matrix::Constant(total, n_classes, -1.0), {}};
  Index row = 0;
  for (std::size_t u = 0; u < labels.size(); ++u) {
    t.values.block(row, labels[u], lengths[u], 1).setConstant(1.0);
    t.utterance_bounds.emplace_back(row, row + lengths[u]);
    row += lengths[u];
  }
  return t;
}

RidgeSystem::RidgeSystem(Index features, Index outputs)
    : gram_(Matrix::Zero(features, features)), cross_(Matrix::Zero(features, outputs)) {}

void RidgeSystem::accumulate(const Matrix& states, const Matrix& targets) {
  require(states.cols() == gram_.rows(), "state width does not match the ridge system");
  require(targets.cols() == cross_.cols() && targets.rows() == states.rows(), "target shape mismatch");
  gram_.selfadjointView<Eigen::Lower>().rankUpdate(states.transpose());
  cross_.noalias() += states.transpose() * targets;
  rows_ += static_cast<double>(states.rows());
}

void RidgeSystem::accumulate(const Matrix& states, int label, int n_classes) {
  require(n_classes == cross_.cols(), "class count does not match the ridge system");
  require(label >= 0 && label < n_classes, "label out of range");
  require(states.cols() == gram_.rows(), "state width does not match the ridge system");
  gram_.selfadjointView<Eigen::Lower>().rankUpdate(states.transpose());
  // X^T Y with Y = -1 everywhere except +1 on the label column.
  const Vector column_sums = states.colwise().sum().transpose();
  cross_.colwise() -= column_sums;
  cross_.col(label) += 2.0 * column_sums;
  rows_ += static_cast<double>(states.rows());
}

void RidgeSystem::merge(const RidgeSystem& other) {
  require(other.gram_.rows() == gram_.rows() && other.cross_.cols() == cross_.cols(), "ridge systems differ in shape");
  gram_ += other.gram_;
  cross_ += other.cross_;
  rows_ += other.rows_;
}

ReadoutWeights RidgeSystem::solve(double lambda) const {
  require(std::isfinite(lambda) && lambda >= 0.0, "lambda must be finite and nonnegative");
  require(rows_ >= 1.0, "ridge system has no rows");
  Matrix a = gram_.selfadjointView<Eigen::Lower>();
  require(a.allFinite() && cross_.allFinite(), "non-finite values in the ridge system");
  a.diagonal().array() += lambda;
  Eigen::LLT<Matrix> llt(a);
  const double scale = std::max(a.diagonal().maxCoeff(), 1e-300);
  const bool ill = llt.info() != Eigen::Success || llt.rcond() < 1e-15 * (1.0 + lambda / scale);
  if (lambda == 0.0 && ill)
    throw Error(ErrorCode::singular_matrix, "X^T X is singular; use lambda > 0");
  Matrix solution;
  if (llt.info() == Eigen::Success) {
    solution = llt.solve(cross_);
  } else {
    // Rounding can make a tiny-lambda system fail Cholesky; fall back to LDLT.
    Eigen::LDLT<Matrix> ldlt(a);
    if (ldlt.info() != Eigen::Success) throw Error(ErrorCode::numeric, "ridge system factorisation failed");
    solution = ldlt.solve(cross_);
  }
  if (!solution.allFinite()) throw Error(ErrorCode::numeric, "ridge solution is not finite");
  return ReadoutWeights{solution.transpose(), lambda, false};
}

ReadoutWeights ridge_train(const Matrix& states, const Matrix& targets, double lambda) {
  require(states.rows() >= 1, "ridge_train needs at least one row");
  require(states.rows() == targets.rows(), "states and targets differ in rows");
  require(states.allFinite() && targets.allFinite(), "non-finite values passed to ridge_train");
  RidgeSystem system(states.cols(), targets.cols());
  system.accumulate(states, targets);
  return system.solve(lambda);
}

Matrix readout_apply(const Matrix& states, const ReadoutWeights& weights) {
  const Index width = weights.values.cols() - (weights.bias ? 1 : 0);
  require(states.cols() == width, "state width " + std::to_string(states.cols()) +
                                      " does not match readout width " + std::to_string(width));
  if (!weights.bias) return states * weights.values.transpose();
  Matrix y = states * weights.values.leftCols(width).transpose();
  y.rowwise() += weights.values.col(width).transpose();
  return y;
}

int classify_utterance(const Matrix& scores, VoteRule rule) {
  require(scores.rows() >= 1 && scores.cols() >= 1, "cannot classify an empty score block");
  auto argmax = [](const auto& row) {
    Index best = 0;
    for (Index c = 1; c < row.size(); ++c)
      if (row[c] > row[best]) best = c;
    return static_cast<int>(best);
  };
  if (rule == VoteRule::mean_score) return argmax(scores.colwise().mean());
  std::vector<int> votes(static_cast<std::size_t>(scores.cols()), 0);
  for (Index r = 0; r < scores.rows(); ++r) ++votes[static_cast<std::size_t>(argmax(scores.row(r)))];
  return static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
}

double error_rate(const std::vector<int>& predictions, const std::vector<int>& labels) {
  require(!labels.empty(), "error_rate needs at least one item");
  require(predictions.size() == labels.size(), "predictions and labels differ in length");
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) wrong += predictions[i] != labels[i];
  return static_cast<double>(wrong) / static_cast<double>(labels.size());
}

std::vector<std::vector<std::size_t>> kfold_split(std::size_t n_items, std::size_t k, std::int64_t seed) {
  require(k >= 2, "k-fold needs k >= 2");
  require(n_items >= k, "k = " + std::to_string(k) + " exceeds the " + std::to_string(n_items) + " items");
  std::vector<std::size_t> order(n_items);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(static_cast<std::uint64_t>(seed));
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> folds(k);
  std::size_t pos = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = n_items / k + (f < n_items % k ? 1 : 0);
    folds[f].assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                    order.begin() + static_cast<std::ptrdiff_t>(pos + size));
    std::sort(folds[f].begin(), folds[f].end());
    pos += size;
  }
  return folds;
}

}  // namespace drc
