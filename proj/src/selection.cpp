#include "memdeeg/selection.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "memdeeg/csv.hpp"
#include "memdeeg/error.hpp"
#include "memdeeg/parallel.hpp"
#include "memdeeg/stats.hpp"

namespace memdeeg {

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::LengthMismatch, "correlation of series with different lengths");
  if (a.size() < 2) throw Error(ErrorCode::LengthMismatch, "correlation needs at least two samples");
  const double ma = stats::mean(a);
  const double mb = stats::mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) return 0.0;
  return std::clamp(sab / (std::sqrt(saa) * std::sqrt(sbb)), -1.0, 1.0);
}

std::vector<double> mean_abs_correlation(const ImfStack& stack, const Matrix& raw) {
  if (raw.rows() != stack.channel_count() || raw.cols() != stack.sample_count()) {
    throw Error(ErrorCode::DimensionMismatch, "raw block does not match the decomposition");
  }
  std::vector<double> out;
  for (const auto& imf : stack.imfs) {
    double s = 0.0;
    for (std::size_t c = 0; c < raw.rows(); ++c) s += std::abs(pearson(imf.row(c), raw.row(c)));
    out.push_back(s / static_cast<double>(raw.rows()));
  }
  return out;
}

namespace {

template <typename Score, typename Less>
std::vector<std::size_t> order_by(const std::vector<Score>& scores, Less less) {
  std::vector<std::size_t> idx(scores.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return less(scores[a], scores[b]); });
  return idx;
}

}  // namespace

ImfRanking rank_imfs(const Dataset& data, std::span<const double> correlations, const Evaluator& evaluator,
                     const SelectionRule& rule) {
  std::set<int> labels;
  for (const auto& s : data.samples) labels.insert(to_sign(s.label));
  if (labels.size() < 2) throw Error(ErrorCode::SingleClass, "IMF ranking needs both classes");

  std::size_t max_imf = 0;
  for (const auto& c : data.columns) max_imf = std::max(max_imf, c.imf);
  if (max_imf == 0) throw Error(ErrorCode::EmptySelection, "dataset has no per-IMF feature columns");
  if (correlations.size() < max_imf) throw Error(ErrorCode::DimensionMismatch, "missing IMF correlations");

  ImfRanking ranking;
  ranking.per_imf.resize(max_imf);
  parallel_for(max_imf, [&](std::size_t j) {
    const std::size_t imf = j + 1;
    const Dataset solo = select_columns_if(data, [imf](const FeatureColumn& c) { return c.imf == imf; });
    ranking.per_imf[j] = {imf, correlations[j], solo.dimension() ? evaluator(solo) : 0.0};
  });

  for (std::size_t i : order_by(ranking.per_imf, [](const ImfScore& a, const ImfScore& b) {
         if (a.solo_accuracy != b.solo_accuracy) return a.solo_accuracy > b.solo_accuracy;
         if (a.mean_correlation != b.mean_correlation) return a.mean_correlation > b.mean_correlation;
         return a.imf < b.imf;
       })) {
    ranking.ranked.push_back(ranking.per_imf[i].imf);
  }
  for (std::size_t r = 0; r < ranking.ranked.size(); ++r) {
    const ImfScore& s = ranking.per_imf[ranking.ranked[r] - 1];
    const bool keep = rule.mode == SelectionRule::Mode::TopK ? r < rule.k : s.solo_accuracy >= rule.threshold;
    if (keep) ranking.selected.push_back(s.imf);
  }
  std::sort(ranking.selected.begin(), ranking.selected.end());
  return ranking;
}

std::vector<std::size_t> columns_matching(const Dataset& data, const std::string& name) {
  std::vector<std::size_t> idx;
  for (std::size_t c = 0; c < data.columns.size(); ++c) {
    if (data.columns[c].name == name || data.columns[c].kind == name) idx.push_back(c);
  }
  return idx;
}

FeatureRanking rank_features(const Dataset& data, std::span<const std::string> feature_names,
                             const Evaluator& evaluator, const SelectionRule& rule) {
  std::vector<std::vector<std::size_t>> groups;
  for (const auto& name : feature_names) {
    auto idx = columns_matching(data, name);
    if (idx.empty()) throw Error(ErrorCode::UnknownFeature, "no feature named '" + name + "'");
    groups.push_back(std::move(idx));
  }

  std::vector<FeatureScore> scores(feature_names.size());
  parallel_for(feature_names.size(), [&](std::size_t i) {
    scores[i] = {feature_names[i], evaluator(select_columns(data, groups[i]))};
  });

  FeatureRanking ranking;
  for (std::size_t i : order_by(scores, [](const FeatureScore& a, const FeatureScore& b) {
         if (a.solo_accuracy != b.solo_accuracy) return a.solo_accuracy > b.solo_accuracy;
         return a.name < b.name;
       })) {
    ranking.ranked.push_back(scores[i]);
  }
  for (std::size_t r = 0; r < ranking.ranked.size(); ++r) {
    const bool keep = rule.mode == SelectionRule::Mode::TopK ? r < rule.k
                                                             : ranking.ranked[r].solo_accuracy >= rule.threshold;
    if (keep) ranking.selected.push_back(ranking.ranked[r].name);
  }
  return ranking;
}

void write_imf_ranking_csv(const ImfRanking& ranking, const std::filesystem::path& path) {
  auto os = csv::open_for_write(path);
  os << "imf,mean_abs_correlation,solo_accuracy,rank,selected\n";
  for (const auto& s : ranking.per_imf) {
    const auto rank = std::find(ranking.ranked.begin(), ranking.ranked.end(), s.imf) - ranking.ranked.begin() + 1;
    const bool selected = std::find(ranking.selected.begin(), ranking.selected.end(), s.imf) != ranking.selected.end();
    os << s.imf << ',' << csv::format_double(s.mean_correlation) << ',' << csv::format_double(s.solo_accuracy) << ','
       << rank << ',' << (selected ? 1 : 0) << '\n';
  }
}

void write_feature_ranking_csv(const FeatureRanking& ranking, const std::filesystem::path& path) {
  auto os = csv::open_for_write(path);
  os << "rank,feature,solo_accuracy,selected\n";
  for (std::size_t r = 0; r < ranking.ranked.size(); ++r) {
    const auto& s = ranking.ranked[r];
    const bool selected =
        std::find(ranking.selected.begin(), ranking.selected.end(), s.name) != ranking.selected.end();
    os << r + 1 << ',' << s.name << ',' << csv::format_double(s.solo_accuracy) << ',' << (selected ? 1 : 0) << '\n';
  }
}

}  // namespace memdeeg
