#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "equibound/data_model.hpp"

namespace equibound {

// Column-major feature matrix (no intercept column; the intercept is implicit
// as weights[0]).
class FeatureMatrix {
 public:
  FeatureMatrix(std::size_t n, std::size_t dim) : n_(n), dim_(dim), data_(n * dim) {}

  static FeatureMatrix gather(const AuditFrame& frame, std::span<const std::uint32_t> rows);

  std::size_t rows() const { return n_; }
  std::size_t dim() const { return dim_; }
  std::span<double> col(std::size_t j) { return {data_.data() + j * n_, n_}; }
  std::span<const double> col(std::size_t j) const { return {data_.data() + j * n_, n_}; }

 private:
  std::size_t n_, dim_;
  std::vector<double> data_;
};

struct LogisticConfig {
  double l2 = 1e-4;   // ridge penalty; the intercept is never penalized
  int max_iter = 100;
  double tol = 1e-8;  // on the max absolute score component
  // When set, receives the penalized objective after every accepted step.
  std::vector<double>* objective_trace = nullptr;
};

struct FitMeta {
  int iterations = 0;
  double objective = 0.0;
  bool converged = false;
  std::size_t n_train = 0;
};

struct BinaryPredictor {
  std::vector<double> weights;  // intercept first, length dim + 1
  FitMeta meta;

  double predict(std::span<const double> x) const;  // probability, unclipped
  // z = w0 + X w, then the logistic; out.size() == X.rows().
  void predict(const FeatureMatrix& X, std::span<double> out) const;
};

// L2-penalized logistic regression by iteratively reweighted least squares
// with step halving. Throws DegenerateDesign if the penalized normal
// equations lose positive definiteness (should not happen with l2 > 0).
BinaryPredictor fit_logistic(const FeatureMatrix& X, std::span<const double> labels,
                             const LogisticConfig& config = {});

struct CrossFitConfig {
  LogisticConfig logistic;
  double clip_delta = 1e-3;        // predictions clipped into [delta, 1-delta]
  bool keep_training_rows = false; // bookkeeping for cross-fit discipline tests
};

// Cross-fitted nuisance functions. For fold k, every predictor is trained on
// the fold's complement: mu on d=0 rows (outcome labels), pi on d=1 rows
// (treatment labels), g on all rows (pre-era membership), and p_y1_d0 is the
// plain fraction of (y=1, d=0) rows in the complement.
struct CrossFitNuisances {
  int k = 0;
  std::vector<BinaryPredictor> mu, pi, g;
  std::vector<double> p_y1_d0;
  double clip_delta = 1e-3;
  // filled only when keep_training_rows was set
  std::vector<std::vector<std::uint32_t>> train_rows_mu, train_rows_pi, train_rows_g;
};

CrossFitNuisances fit_nuisances(const AuditFrame& frame, const FoldAssignment& folds,
                                const CrossFitConfig& config = {});

enum class Which { mu, pi, g };

double predict_clipped(const CrossFitNuisances& nuis, Which which, int fold,
                       std::span<const double> x);

// Out-of-fold clipped predictions for every unit, plus the fold-complement
// P(Y=1, D=0) estimate attached per unit. This is the only input the bound
// and correction evaluators need, so tests can substitute exact values.
struct ScoredNuisances {
  std::vector<double> mu, pi, gg, c;
  std::size_t size() const { return mu.size(); }
};

ScoredNuisances score_frame(const AuditFrame& frame, const FoldAssignment& folds,
                            const CrossFitNuisances& nuis);

// Fitted weights keyed by (nuisance, fold), for audit reproducibility.
std::string nuisances_to_json(const CrossFitNuisances& nuis);

}  // namespace equibound
