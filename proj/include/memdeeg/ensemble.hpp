#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "memdeeg/matrix.hpp"

namespace memdeeg {

// Sample weights kept normalised to sum 1.
class SampleWeights {
 public:
  static SampleWeights uniform(std::size_t m);
  // Normalises `raw` (non-negative, positive sum); returns the normaliser Z.
  static SampleWeights normalized(std::vector<double> raw, double* normalizer = nullptr);

  std::span<const double> values() const noexcept { return w_; }
  std::size_t size() const noexcept { return w_.size(); }
  double operator[](std::size_t i) const { return w_[i]; }

 private:
  std::vector<double> w_;
};

struct TreeParams {
  std::size_t max_depth = 8;
  std::size_t min_samples_leaf = 2;
  std::size_t features_per_split = 0;  // 0 = all features
};

class DecisionTree {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    double votes_negative = 0.0;  // weighted training mass reaching the node
    double votes_positive = 0.0;

    bool operator==(const Node&) const = default;
  };

  DecisionTree() = default;
  explicit DecisionTree(std::vector<Node> nodes) : nodes_(std::move(nodes)) {}

  // Majority label of the reached leaf; ties go to +1.
  int predict(std::span<const double> x) const;

  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  std::size_t depth() const;

  bool operator==(const DecisionTree&) const = default;

 private:
  std::vector<Node> nodes_;
};

// Greedy weighted-Gini CART. Samples go left when x[feature] <= threshold.
// `rows` lists the training rows (repeats allowed); empty means all rows.
DecisionTree train_tree(const Matrix& x, std::span<const int> y, std::span<const double> weights,
                        const TreeParams& params, std::uint64_t seed, std::span<const std::size_t> rows = {});

struct ForestParams {
  std::size_t trees = 50;
  std::size_t features_per_split = 0;  // 0 = ceil(sqrt(d))
  std::size_t max_depth = 8;
  std::size_t min_samples_leaf = 2;
  bool bootstrap = true;

  bool operator==(const ForestParams&) const = default;
};

class RandomForest {
 public:
  RandomForest() = default;
  RandomForest(std::vector<DecisionTree> trees, std::size_t features_per_split)
      : trees_(std::move(trees)), features_per_split_(features_per_split) {}

  // Unweighted majority vote; ties go to +1.
  int predict(std::span<const double> x) const;

  const std::vector<DecisionTree>& trees() const noexcept { return trees_; }
  std::size_t features_per_split() const noexcept { return features_per_split_; }

  bool operator==(const RandomForest&) const = default;

 private:
  std::vector<DecisionTree> trees_;
  std::size_t features_per_split_ = 0;
};

// Each tree sees a bootstrap resample drawn proportionally to `weights`
// (uniform when empty). Without bootstrap every tree trains on all rows with
// `weights` as sample weights.
RandomForest train_forest(const Matrix& x, std::span<const int> y, const ForestParams& params, std::uint64_t seed,
                          std::span<const double> weights = {});

double weighted_error(const SampleWeights& w, std::span<const int> y, std::span<const int> predictions);

// 0.5 * ln((1 - error) / error)
double alpha_from_error(double error);

// w_i * exp(-alpha * y_i * h_i), renormalised; the normaliser is returned via `normalizer`.
SampleWeights update_weights(const SampleWeights& w, std::span<const int> y, std::span<const int> predictions,
                             double alpha, double* normalizer = nullptr);

// Error floor applied when a round classifies every training sample correctly.
inline constexpr double kMinBoostError = 1e-10;

struct BoostRound {
  RandomForest estimator;
  double error = 0.0;  // weighted training error before clamping
  double alpha = 0.0;
  double normalizer = 1.0;
  SampleWeights next;
};

BoostRound boost_round(const Matrix& x, std::span<const int> y, const SampleWeights& w, const ForestParams& params,
                       std::uint64_t seed);

struct BoostParams {
  std::size_t rounds = 10;
  ForestParams forest;
  std::uint64_t seed = 42;

  bool operator==(const BoostParams&) const = default;
};

class BoostedEnsemble {
 public:
  BoostedEnsemble() = default;

  // sign(sum alpha_t h_t(x)); a zero sum gives +1.
  int predict(std::span<const double> x) const;
  double decision(std::span<const double> x) const;

  const std::vector<RandomForest>& estimators() const noexcept { return estimators_; }
  const std::vector<double>& alphas() const noexcept { return alphas_; }
  const std::vector<double>& errors() const noexcept { return errors_; }
  const std::vector<double>& normalizers() const noexcept { return normalizers_; }
  std::size_t rounds_trained() const noexcept { return estimators_.size(); }
  std::size_t dimension() const noexcept { return dimension_; }
  double training_accuracy() const noexcept { return training_accuracy_; }

  void save(std::ostream& os) const;
  static BoostedEnsemble load(std::istream& is);

  bool operator==(const BoostedEnsemble&) const = default;

 private:
  friend BoostedEnsemble train_boosted(const Matrix&, std::span<const int>, const BoostParams&);

  std::vector<RandomForest> estimators_;
  std::vector<double> alphas_;
  std::vector<double> errors_;
  std::vector<double> normalizers_;
  std::size_t dimension_ = 0;
  double training_accuracy_ = 0.0;
};

// Discrete AdaBoost with random-forest base learners. A round with zero error
// is kept with a clamped error and ends training; a round with error >= 0.5
// is retried once with a fresh bootstrap seed, then training stops.
BoostedEnsemble train_boosted(const Matrix& x, std::span<const int> y, const BoostParams& params);

struct Evaluation {
  double accuracy = 0.0;
  // confusion[actual][predicted], index 0 = -1 (Relax), 1 = +1 (Working)
  std::array<std::array<std::size_t, 2>, 2> confusion{};
};

Evaluation score_predictions(std::span<const int> y, std::span<const int> predictions);
Evaluation evaluate(const BoostedEnsemble& ensemble, const Matrix& x, std::span<const int> y);

}  // namespace memdeeg
