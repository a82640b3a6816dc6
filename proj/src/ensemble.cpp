#include "memdeeg/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

#include "memdeeg/error.hpp"
#include "memdeeg/parallel.hpp"
#include "memdeeg/rng.hpp"

namespace memdeeg {

SampleWeights SampleWeights::uniform(std::size_t m) {
  if (m == 0) throw Error(ErrorCode::EmptyInput, "no samples to weight");
  SampleWeights w;
  w.w_.assign(m, 1.0 / static_cast<double>(m));
  return w;
}

SampleWeights SampleWeights::normalized(std::vector<double> raw, double* normalizer) {
  double z = 0.0;
  for (double v : raw) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "weights must be finite and >= 0");
    z += v;
  }
  if (!(z > 0.0)) throw Error(ErrorCode::InvalidArgument, "weights sum to zero");
  for (double& v : raw) v /= z;
  if (normalizer) *normalizer = z;
  SampleWeights w;
  w.w_ = std::move(raw);
  return w;
}

int DecisionTree::predict(std::span<const double> x) const {
  if (nodes_.empty()) return 1;
  std::size_t i = 0;
  while (nodes_[i].feature >= 0) {
    const auto& n = nodes_[i];
    i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return nodes_[i].votes_negative > nodes_[i].votes_positive ? -1 : 1;
}

std::size_t DecisionTree::depth() const {
  if (nodes_.empty()) return 0;
  std::vector<std::size_t> d(nodes_.size(), 0);
  std::size_t best = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    best = std::max(best, d[i]);
    if (nodes_[i].feature >= 0) {
      d[nodes_[i].left] = d[i] + 1;
      d[nodes_[i].right] = d[i] + 1;
    }
  }
  return best;
}

namespace {

struct Entry {
  std::size_t row;
  double weight;
};

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double gain = -1.0;
};

// Weighted Gini impurity times node mass.
double gini_mass(double neg, double pos) {
  const double total = neg + pos;
  if (total <= 0.0) return 0.0;
  return total - (neg * neg + pos * pos) / total;
}

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, std::span<const int> y, const TreeParams& params, std::uint64_t seed)
      : x_(x), y_(y), params_(params), rng_(seed) {
    const std::size_t d = x.cols();
    mtry_ = params.features_per_split == 0 ? d : std::min(params.features_per_split, d);
    features_.resize(d);
    std::iota(features_.begin(), features_.end(), std::size_t{0});
  }

  std::vector<DecisionTree::Node> build(std::vector<Entry> entries) {
    grow(std::move(entries), 0);
    return std::move(nodes_);
  }

 private:
  std::uint32_t grow(std::vector<Entry> entries, std::size_t depth) {
    const auto id = static_cast<std::uint32_t>(nodes_.size());
    nodes_.emplace_back();
    double neg = 0.0, pos = 0.0;
    for (const auto& e : entries) (y_[e.row] < 0 ? neg : pos) += e.weight;
    nodes_[id].votes_negative = neg;
    nodes_[id].votes_positive = pos;

    const bool pure = neg <= 0.0 || pos <= 0.0;
    if (pure || depth >= params_.max_depth || entries.size() < 2 * std::max<std::size_t>(params_.min_samples_leaf, 1)) {
      return id;
    }
    const Split split = best_split(entries, neg, pos);
    if (split.feature < 0) return id;

    std::vector<Entry> left, right;
    for (const auto& e : entries) {
      (x_(e.row, static_cast<std::size_t>(split.feature)) <= split.threshold ? left : right).push_back(e);
    }
    entries.clear();
    entries.shrink_to_fit();
    nodes_[id].feature = split.feature;
    nodes_[id].threshold = split.threshold;
    const std::uint32_t l = grow(std::move(left), depth + 1);
    const std::uint32_t r = grow(std::move(right), depth + 1);
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

  // Candidate features come in a random order; after `mtry_` of them the
  // search stops as soon as some valid split has been seen.
  Split best_split(std::vector<Entry>& entries, double neg, double pos) {
    rng_.shuffle(features_.begin(), features_.end());
    const double parent = gini_mass(neg, pos);
    const std::size_t min_leaf = std::max<std::size_t>(params_.min_samples_leaf, 1);
    Split best;
    for (std::size_t k = 0; k < features_.size(); ++k) {
      if (k >= mtry_ && best.feature >= 0) break;
      const std::size_t f = features_[k];
      std::sort(entries.begin(), entries.end(), [&](const Entry& a, const Entry& b) {
        const double va = x_(a.row, f), vb = x_(b.row, f);
        return va < vb || (va == vb && a.row < b.row);
      });
      double lneg = 0.0, lpos = 0.0;
      for (std::size_t i = 0; i + 1 < entries.size(); ++i) {
        (y_[entries[i].row] < 0 ? lneg : lpos) += entries[i].weight;
        const double v = x_(entries[i].row, f);
        const double vn = x_(entries[i + 1].row, f);
        if (!(v < vn)) continue;
        if (i + 1 < min_leaf || entries.size() - (i + 1) < min_leaf) continue;
        const double gain = parent - gini_mass(lneg, lpos) - gini_mass(neg - lneg, pos - lpos);
        if (gain > best.gain || (gain == best.gain && static_cast<int>(f) < best.feature)) {
          double threshold = v + (vn - v) / 2.0;
          if (!(threshold < vn)) threshold = v;
          best = {static_cast<int>(f), threshold, gain};
        }
      }
    }
    return best;
  }

  const Matrix& x_;
  std::span<const int> y_;
  TreeParams params_;
  Rng rng_;
  std::size_t mtry_ = 0;
  std::vector<std::size_t> features_;
  std::vector<DecisionTree::Node> nodes_;
};

void check_training_input(const Matrix& x, std::span<const int> y) {
  if (x.rows() == 0 || x.cols() == 0) throw Error(ErrorCode::EmptyInput, "no training samples or features");
  if (y.size() != x.rows()) throw Error(ErrorCode::DimensionMismatch, "label count differs from sample count");
  for (int v : y) {
    if (v != -1 && v != 1) throw Error(ErrorCode::InvalidArgument, "labels must be -1 or +1");
  }
}

}  // namespace

DecisionTree train_tree(const Matrix& x, std::span<const int> y, std::span<const double> weights,
                        const TreeParams& params, std::uint64_t seed, std::span<const std::size_t> rows) {
  check_training_input(x, y);
  if (!weights.empty() && weights.size() != x.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "weight count differs from sample count");
  }
  std::vector<Entry> entries;
  if (rows.empty()) {
    for (std::size_t i = 0; i < x.rows(); ++i) entries.push_back({i, weights.empty() ? 1.0 : weights[i]});
  } else {
    for (std::size_t i : rows) {
      if (i >= x.rows()) throw Error(ErrorCode::InvalidArgument, "training row out of range");
      entries.push_back({i, weights.empty() ? 1.0 : weights[i]});
    }
  }
  TreeBuilder builder(x, y, params, seed);
  return DecisionTree(builder.build(std::move(entries)));
}

int RandomForest::predict(std::span<const double> x) const {
  long votes = 0;
  for (const auto& t : trees_) votes += t.predict(x);
  return votes < 0 ? -1 : 1;
}

RandomForest train_forest(const Matrix& x, std::span<const int> y, const ForestParams& params, std::uint64_t seed,
                          std::span<const double> weights) {
  check_training_input(x, y);
  if (params.trees == 0) throw Error(ErrorCode::InvalidArgument, "forest needs at least one tree");
  if (!weights.empty() && weights.size() != x.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "weight count differs from sample count");
  }
  const std::size_t d = x.cols();
  std::size_t mtry = params.features_per_split;
  if (mtry == 0) mtry = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d))));
  mtry = std::clamp<std::size_t>(mtry, 1, d);

  std::vector<double> cumulative;
  if (params.bootstrap) {
    cumulative.resize(x.rows());
    double acc = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      acc += weights.empty() ? 1.0 : weights[i];
      cumulative[i] = acc;
    }
    if (!(acc > 0.0)) throw Error(ErrorCode::InvalidArgument, "bootstrap weights sum to zero");
  }

  TreeParams tp{params.max_depth, params.min_samples_leaf, mtry};
  std::vector<DecisionTree> trees(params.trees);
  parallel_for(params.trees, [&](std::size_t t) {
    const std::uint64_t tree_seed = derive_seed(seed, {t});
    if (!params.bootstrap) {
      trees[t] = train_tree(x, y, weights, tp, derive_seed(tree_seed, {1}));
      return;
    }
    Rng rng(derive_seed(tree_seed, {0}));
    std::vector<std::size_t> rows(x.rows());
    const double total = cumulative.back();
    for (auto& r : rows) {
      const double u = rng.uniform() * total;
      auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
      r = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), x.rows() - 1);
    }
    trees[t] = train_tree(x, y, {}, tp, derive_seed(tree_seed, {1}), rows);
  });
  return RandomForest(std::move(trees), mtry);
}

double weighted_error(const SampleWeights& w, std::span<const int> y, std::span<const int> predictions) {
  if (y.size() != w.size() || predictions.size() != w.size()) {
    throw Error(ErrorCode::DimensionMismatch, "weights, labels and predictions differ in length");
  }
  double err = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (predictions[i] != y[i]) err += w[i];
  }
  return err;
}

double alpha_from_error(double error) { return 0.5 * std::log((1.0 - error) / error); }

SampleWeights update_weights(const SampleWeights& w, std::span<const int> y, std::span<const int> predictions,
                             double alpha, double* normalizer) {
  if (y.size() != w.size() || predictions.size() != w.size()) {
    throw Error(ErrorCode::DimensionMismatch, "weights, labels and predictions differ in length");
  }
  std::vector<double> raw(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    raw[i] = w[i] * std::exp(-alpha * static_cast<double>(y[i]) * static_cast<double>(predictions[i]));
  }
  return SampleWeights::normalized(std::move(raw), normalizer);
}

BoostRound boost_round(const Matrix& x, std::span<const int> y, const SampleWeights& w, const ForestParams& params,
                       std::uint64_t seed) {
  if (w.size() != x.rows()) throw Error(ErrorCode::DimensionMismatch, "weight count differs from sample count");
  BoostRound round;
  round.estimator = train_forest(x, y, params, seed, w.values());
  std::vector<int> predictions(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) predictions[i] = round.estimator.predict(x.row(i));
  round.error = weighted_error(w, y, predictions);
  round.alpha = alpha_from_error(std::clamp(round.error, kMinBoostError, 1.0 - kMinBoostError));
  round.next = update_weights(w, y, predictions, round.alpha, &round.normalizer);
  return round;
}

double BoostedEnsemble::decision(std::span<const double> x) const {
  if (x.size() != dimension_) {
    throw Error(ErrorCode::DimensionMismatch, "expected " + std::to_string(dimension_) + " features, got " +
                                                  std::to_string(x.size()));
  }
  double s = 0.0;
  for (std::size_t t = 0; t < estimators_.size(); ++t) s += alphas_[t] * estimators_[t].predict(x);
  return s;
}

int BoostedEnsemble::predict(std::span<const double> x) const { return decision(x) < 0.0 ? -1 : 1; }

BoostedEnsemble train_boosted(const Matrix& x, std::span<const int> y, const BoostParams& params) {
  check_training_input(x, y);
  if (x.rows() < 2) throw Error(ErrorCode::EmptyInput, "boosting needs at least two samples");
  const bool has_neg = std::find(y.begin(), y.end(), -1) != y.end();
  const bool has_pos = std::find(y.begin(), y.end(), 1) != y.end();
  if (!has_neg || !has_pos) throw Error(ErrorCode::SingleClass, "training set contains a single class");

  BoostedEnsemble ens;
  ens.dimension_ = x.cols();
  SampleWeights w = SampleWeights::uniform(x.rows());
  for (std::size_t t = 0; t < params.rounds; ++t) {
    BoostRound round = boost_round(x, y, w, params.forest, derive_seed(params.seed, {t, 0}));
    if (round.error >= 0.5) {
      round = boost_round(x, y, w, params.forest, derive_seed(params.seed, {t, 1}));
      if (round.error >= 0.5) break;
    }
    ens.estimators_.push_back(std::move(round.estimator));
    ens.alphas_.push_back(round.alpha);
    ens.errors_.push_back(round.error);
    ens.normalizers_.push_back(round.normalizer);
    w = std::move(round.next);
    if (round.error <= 0.0) break;
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < x.rows(); ++i) correct += ens.predict(x.row(i)) == y[i];
  ens.training_accuracy_ = static_cast<double>(correct) / static_cast<double>(x.rows());
  return ens;
}

Evaluation score_predictions(std::span<const int> y, std::span<const int> predictions) {
  if (y.empty()) throw Error(ErrorCode::EmptyInput, "empty test set");
  if (y.size() != predictions.size()) throw Error(ErrorCode::DimensionMismatch, "prediction count differs");
  Evaluation ev;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    ++ev.confusion[y[i] > 0][predictions[i] > 0];
    correct += y[i] == predictions[i];
  }
  ev.accuracy = static_cast<double>(correct) / static_cast<double>(y.size());
  return ev;
}

Evaluation evaluate(const BoostedEnsemble& ensemble, const Matrix& x, std::span<const int> y) {
  if (x.rows() != y.size()) throw Error(ErrorCode::DimensionMismatch, "label count differs from sample count");
  std::vector<int> predictions(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) predictions[i] = ensemble.predict(x.row(i));
  return score_predictions(y, predictions);
}

// Text format, one record per line, doubles in hexadecimal for exact round trips:
//   memdeeg-boosted-ensemble 1
//   dimension <d> rounds <T> training_accuracy <a>
//   round <alpha> <error> <normalizer> <trees> <features_per_split>
//   tree <nodes>
//   <feature> <threshold> <left> <right> <votes_negative> <votes_positive>
namespace {

constexpr const char* kMagic = "memdeeg-boosted-ensemble";
constexpr int kFormatVersion = 1;

std::string hex(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

class TokenReader {
 public:
  explicit TokenReader(std::istream& is) : is_(is) {}

  std::string word() {
    std::string s;
    if (!(is_ >> s)) throw Error(ErrorCode::MalformedFile, "model file truncated");
    return s;
  }
  void expect(const std::string& keyword) {
    if (word() != keyword) throw Error(ErrorCode::MalformedFile, "model file: expected '" + keyword + "'");
  }
  double real() {
    const std::string s = word();
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size()) throw Error(ErrorCode::MalformedFile, "model file: bad number '" + s + "'");
    return v;
  }
  long long integer() {
    const std::string s = word();
    char* end = nullptr;
    const long long v = std::strtoll(s.c_str(), &end, 10);
    if (end != s.c_str() + s.size()) throw Error(ErrorCode::MalformedFile, "model file: bad integer '" + s + "'");
    return v;
  }

 private:
  std::istream& is_;
};

}  // namespace

void BoostedEnsemble::save(std::ostream& os) const {
  os << kMagic << ' ' << kFormatVersion << '\n';
  os << "dimension " << dimension_ << " rounds " << estimators_.size() << " training_accuracy "
     << hex(training_accuracy_) << '\n';
  for (std::size_t t = 0; t < estimators_.size(); ++t) {
    const auto& forest = estimators_[t];
    os << "round " << hex(alphas_[t]) << ' ' << hex(errors_[t]) << ' ' << hex(normalizers_[t]) << ' '
       << forest.trees().size() << ' ' << forest.features_per_split() << '\n';
    for (const auto& tree : forest.trees()) {
      os << "tree " << tree.nodes().size() << '\n';
      for (const auto& n : tree.nodes()) {
        os << n.feature << ' ' << hex(n.threshold) << ' ' << n.left << ' ' << n.right << ' '
           << hex(n.votes_negative) << ' ' << hex(n.votes_positive) << '\n';
      }
    }
  }
}

BoostedEnsemble BoostedEnsemble::load(std::istream& is) {
  TokenReader in(is);
  in.expect(kMagic);
  if (in.integer() != kFormatVersion) throw Error(ErrorCode::MalformedFile, "unsupported model version");
  BoostedEnsemble ens;
  in.expect("dimension");
  ens.dimension_ = static_cast<std::size_t>(in.integer());
  in.expect("rounds");
  const auto rounds = static_cast<std::size_t>(in.integer());
  in.expect("training_accuracy");
  ens.training_accuracy_ = in.real();
  for (std::size_t t = 0; t < rounds; ++t) {
    in.expect("round");
    ens.alphas_.push_back(in.real());
    ens.errors_.push_back(in.real());
    ens.normalizers_.push_back(in.real());
    const auto tree_count = static_cast<std::size_t>(in.integer());
    const auto mtry = static_cast<std::size_t>(in.integer());
    std::vector<DecisionTree> trees;
    for (std::size_t k = 0; k < tree_count; ++k) {
      in.expect("tree");
      const auto node_count = static_cast<std::size_t>(in.integer());
      std::vector<DecisionTree::Node> nodes(node_count);
      for (auto& n : nodes) {
        n.feature = static_cast<int>(in.integer());
        n.threshold = in.real();
        n.left = static_cast<std::uint32_t>(in.integer());
        n.right = static_cast<std::uint32_t>(in.integer());
        n.votes_negative = in.real();
        n.votes_positive = in.real();
        const bool internal = n.feature >= 0;
        if (internal && (n.left >= node_count || n.right >= node_count ||
                         static_cast<std::size_t>(n.feature) >= ens.dimension_)) {
          throw Error(ErrorCode::MalformedFile, "model file: node references out of range");
        }
      }
      trees.emplace_back(std::move(nodes));
    }
    ens.estimators_.emplace_back(std::move(trees), mtry);
  }
  return ens;
}

}  // namespace memdeeg
