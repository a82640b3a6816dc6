#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "memdeeg/dataset.hpp"
#include "memdeeg/memd.hpp"

namespace memdeeg {

// Sample correlation in [-1, 1]; 0 when either series is constant.
double pearson(std::span<const double> a, std::span<const double> b);

// Per IMF: |pearson(IMF_j, raw)| averaged over channels.
std::vector<double> mean_abs_correlation(const ImfStack& stack, const Matrix& raw);

// Cross-validated accuracy of a classifier trained on the given columns only.
using Evaluator = std::function<double(const Dataset&)>;

struct SelectionRule {
  enum class Mode { TopK, Threshold };
  Mode mode = Mode::TopK;
  std::size_t k = 5;
  double threshold = 0.0;  // minimum solo accuracy in Threshold mode
};

struct ImfScore {
  std::size_t imf = 0;  // 1-based
  double mean_correlation = 0.0;
  double solo_accuracy = 0.0;
};

struct ImfRanking {
  std::vector<ImfScore> per_imf;     // in IMF order
  std::vector<std::size_t> ranked;   // IMF numbers, best first
  std::vector<std::size_t> selected; // ascending IMF numbers
};

// `data` must carry per-IMF columns (FeatureColumn::imf); `correlations[j-1]`
// is the aggregated correlation of IMF j. IMFs are ranked by solo accuracy,
// then correlation, then index.
ImfRanking rank_imfs(const Dataset& data, std::span<const double> correlations, const Evaluator& evaluator,
                     const SelectionRule& rule = {});

struct FeatureScore {
  std::string name;
  double solo_accuracy = 0.0;
};

struct FeatureRanking {
  std::vector<FeatureScore> ranked;  // solo accuracy descending, ties by name
  std::vector<std::string> selected;
};

// Columns whose name or kind equals the given name.
std::vector<std::size_t> columns_matching(const Dataset& data, const std::string& name);

// Each name selects the columns it matches (an exact column name, or a feature
// kind such as "mobility" covering every channel and IMF).
FeatureRanking rank_features(const Dataset& data, std::span<const std::string> feature_names,
                             const Evaluator& evaluator, const SelectionRule& rule = {SelectionRule::Mode::TopK, 6, 0.0});

void write_imf_ranking_csv(const ImfRanking& ranking, const std::filesystem::path& path);
void write_feature_ranking_csv(const FeatureRanking& ranking, const std::filesystem::path& path);

}  // namespace memdeeg
