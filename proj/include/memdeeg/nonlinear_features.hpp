#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "memdeeg/dataset.hpp"
#include "memdeeg/memd.hpp"

namespace memdeeg {

// Floor used wherever a ratio or logarithm would otherwise blow up.
inline constexpr double kFeatureEpsilon = 1e-12;

struct Hjorth {
  double activity = 0.0;
  double mobility = 0.0;
  double complexity = 0.0;
};

// Degenerate (zero-variance) denominators give 0.
Hjorth hjorth(std::span<const double> x);

// std / |mean|, with |mean| floored at kFeatureEpsilon.
double coeff_variation(std::span<const double> x);

// Mean absolute first difference.
double fluctuation_index(std::span<const double> x);

// Higuchi fractal dimension; a flat series returns 1.
double higuchi_fd(std::span<const double> x, std::size_t k_max = 10);

struct Moments {
  double skewness = 0.0;
  double kurtosis = 0.0;  // non-excess
};
Moments moments(std::span<const double> x);

// Equal-width histogram over [min, max], natural log.
double shannon_entropy(std::span<const double> x, std::size_t bins = 16);

double log_energy_entropy(std::span<const double> x);

enum class ImfFeature : std::size_t {
  Activity,
  Mobility,
  Complexity,
  StdDev,
  CoeffVariation,
  HiguchiFd,
  Skewness,
  Kurtosis,
  ShannonEntropy,
  LogEnergyEntropy,
  NormalizedEnergy,
};

inline constexpr std::size_t kImfFeatureCount = 11;
inline constexpr std::array<std::string_view, kImfFeatureCount> kImfFeatureNames = {
    "activity", "mobility",         "complexity",         "std_dev",          "coeff_variation", "higuchi_fd",
    "skewness", "kurtosis",         "shannon_entropy",    "log_energy_entropy", "normalized_energy"};
inline constexpr std::string_view kFluctuationIndexName = "fluctuation_index";

struct FeatureOptions {
  std::size_t higuchi_kmax = 10;
  std::size_t entropy_bins = 16;

  bool operator==(const FeatureOptions&) const = default;
};

struct ImfFeatureSet {
  std::vector<std::string> channels;
  std::vector<std::size_t> imfs;  // selected IMF numbers, 1-based
  // cells[channel][position in imfs][feature]
  std::vector<std::vector<std::array<double, kImfFeatureCount>>> cells;
  // fluctuation[channel][pair]: |F(imfs[p]) - F(imfs[p+1])|
  std::vector<std::vector<double>> fluctuation;

  double at(std::size_t channel, std::size_t position, ImfFeature f) const {
    return cells[channel][position][static_cast<std::size_t>(f)];
  }

  // Channel-major; within a channel, per-IMF blocks in feature order followed
  // by the adjacent-pair fluctuation indices.
  FeatureVector flatten() const;
};

// `selected` holds 1-based IMF numbers. Empty channel labels become ch1..chN.
ImfFeatureSet extract_memd_features(const ImfStack& stack, std::span<const std::size_t> selected,
                                    std::span<const std::string> channel_labels = {},
                                    const FeatureOptions& options = {});

}  // namespace memdeeg
