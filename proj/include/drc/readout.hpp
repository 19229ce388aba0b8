#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "drc/types.hpp"

namespace drc {

/// +1 on the true class, -1 elsewhere, for every timestep of every utterance.
struct TargetMatrix {
  Matrix values;
  std::vector<std::pair<Index, Index>> utterance_bounds;  // [start, end)
};

TargetMatrix build_targets(const std::vector<int>& labels, const std::vector<Index>& lengths, int n_classes);

/// C x P linear map; y(n) = w x(n).
struct ReadoutWeights {
  Matrix values;
  double ridge_lambda = 0.0;
  bool bias = false;  // last column multiplies a constant 1 input when set
};

/// Accumulated normal equations. Solving for several lambdas reuses the
/// Gram matrix.
class RidgeSystem {
 public:
  RidgeSystem(Index features, Index outputs);

  void accumulate(const Matrix& states, const Matrix& targets);
  void accumulate(const Matrix& states, int label, int n_classes);
  void merge(const RidgeSystem& other);

  /// Solves (X^T X + lambda I) w^T = X^T Y with a Cholesky factorisation.
  /// lambda = 0 with a rank-deficient Gram raises singular_matrix.
  ReadoutWeights solve(double lambda) const;

  Index features() const { return gram_.rows(); }
  double rows() const { return rows_; }

 private:
  Matrix gram_;
  Matrix cross_;
  double rows_ = 0.0;
};

ReadoutWeights ridge_train(const Matrix& states, const Matrix& targets, double lambda);

/// y = X w^T (with an appended ones column when w.bias is set).
Matrix readout_apply(const Matrix& states, const ReadoutWeights& weights);

enum class VoteRule { majority, mean_score };

/// Winner-takes-all over one utterance. majority: per-row argmax, then the
/// most frequent class. mean_score: argmax of the column means. Ties go to
/// the lowest class index.
int classify_utterance(const Matrix& scores, VoteRule rule = VoteRule::majority);

/// Fraction misclassified.
double error_rate(const std::vector<int>& predictions, const std::vector<int>& labels);

/// Seeded shuffle split into k folds whose sizes differ by at most one.
std::vector<std::vector<std::size_t>> kfold_split(std::size_t n_items, std::size_t k, std::int64_t seed);

}  // namespace drc
