#include "memdeeg/nonlinear_features.hpp"

#include <algorithm>
#include <cmath>

#include "memdeeg/error.hpp"
#include "memdeeg/stats.hpp"

namespace memdeeg {

namespace {

std::vector<double> diff(std::span<const double> x) {
  std::vector<double> d(x.size() > 0 ? x.size() - 1 : 0);
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = x[i + 1] - x[i];
  return d;
}

double ratio_sqrt(double num, double den) { return den > 0.0 ? std::sqrt(num / den) : 0.0; }

}  // namespace

Hjorth hjorth(std::span<const double> x) {
  const auto d1 = diff(x);
  const auto d2 = diff(d1);
  const double v0 = stats::variance(x);
  const double v1 = stats::variance(d1);
  const double v2 = stats::variance(d2);
  Hjorth h;
  h.activity = v0;
  h.mobility = ratio_sqrt(v1, v0);
  const double mobility_d1 = ratio_sqrt(v2, v1);
  h.complexity = h.mobility > 0.0 ? mobility_d1 / h.mobility : 0.0;
  return h;
}

double coeff_variation(std::span<const double> x) {
  const double mu = std::abs(stats::mean(x));
  return stats::stddev(x) / std::max(mu, kFeatureEpsilon);
}

double fluctuation_index(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) s += std::abs(x[i + 1] - x[i]);
  return s / static_cast<double>(x.size() - 1);
}

double higuchi_fd(std::span<const double> x, std::size_t k_max) {
  const std::size_t n = x.size();
  if (k_max < 2) throw Error(ErrorCode::InvalidArgument, "higuchi k_max must be >= 2");
  if (n < 10 * k_max) throw Error(ErrorCode::InputTooShort, "series too short for higuchi k_max");

  std::vector<double> log_inv_k, log_len;
  for (std::size_t k = 1; k <= k_max; ++k) {
    double total = 0.0;
    std::size_t used = 0;
    for (std::size_t m = 0; m < k; ++m) {
      const std::size_t steps = (n - 1 - m) / k;
      if (steps == 0) continue;
      double curve = 0.0;
      for (std::size_t i = 1; i <= steps; ++i) curve += std::abs(x[m + i * k] - x[m + (i - 1) * k]);
      const double norm = static_cast<double>(n - 1) / (static_cast<double>(steps) * static_cast<double>(k));
      total += curve * norm / static_cast<double>(k);
      ++used;
    }
    const double length = total / static_cast<double>(used);
    if (!(length > 0.0)) return 1.0;
    log_inv_k.push_back(-std::log(static_cast<double>(k)));
    log_len.push_back(std::log(length));
  }

  const double mx = stats::mean(log_inv_k);
  const double my = stats::mean(log_len);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < log_inv_k.size(); ++i) {
    sxy += (log_inv_k[i] - mx) * (log_len[i] - my);
    sxx += (log_inv_k[i] - mx) * (log_inv_k[i] - mx);
  }
  return sxy / sxx;
}

Moments moments(std::span<const double> x) {
  if (x.empty()) return {};
  const double mu = stats::mean(x);
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double d = v - mu;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  const double n = static_cast<double>(x.size());
  m2 /= n;
  m3 /= n;
  m4 /= n;
  if (!(m2 > 0.0)) return {};
  return {m3 / std::pow(m2, 1.5), m4 / (m2 * m2)};
}

double shannon_entropy(std::span<const double> x, std::size_t bins) {
  if (bins == 0) throw Error(ErrorCode::InvalidArgument, "entropy needs at least one bin");
  if (x.empty()) return 0.0;
  const auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
  const double lo = *lo_it;
  const double width = *hi_it - lo;
  if (!(width > 0.0)) return 0.0;

  std::vector<std::size_t> counts(bins, 0);
  for (double v : x) {
    auto b = static_cast<std::size_t>((v - lo) / width * static_cast<double>(bins));
    ++counts[std::min(b, bins - 1)];
  }
  double h = 0.0;
  const double n = static_cast<double>(x.size());
  for (std::size_t c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log(p);
  }
  return h;
}

double log_energy_entropy(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += std::log(v * v + kFeatureEpsilon);
  return s;
}

FeatureVector ImfFeatureSet::flatten() const {
  FeatureVector fv;
  for (std::size_t c = 0; c < channels.size(); ++c) {
    const std::string& ch = channels[c];
    for (std::size_t p = 0; p < imfs.size(); ++p) {
      const std::string prefix = ch + "_imf" + std::to_string(imfs[p]) + "_";
      for (std::size_t f = 0; f < kImfFeatureCount; ++f) {
        fv.columns.push_back({prefix + std::string(kImfFeatureNames[f]), ch, std::string(kImfFeatureNames[f]), imfs[p]});
        fv.values.push_back(cells[c][p][f]);
      }
    }
    for (std::size_t p = 0; p + 1 < imfs.size(); ++p) {
      fv.columns.push_back({ch + "_imf" + std::to_string(imfs[p]) + "-" + std::to_string(imfs[p + 1]) + "_" +
                                std::string(kFluctuationIndexName),
                            ch, std::string(kFluctuationIndexName), 0});
      fv.values.push_back(fluctuation[c][p]);
    }
  }
  return fv;
}

ImfFeatureSet extract_memd_features(const ImfStack& stack, std::span<const std::size_t> selected,
                                    std::span<const std::string> channel_labels, const FeatureOptions& options) {
  if (selected.empty()) throw Error(ErrorCode::EmptySelection, "no IMFs selected");
  for (std::size_t j : selected) {
    if (j < 1 || j > stack.imfs.size()) {
      throw Error(ErrorCode::InvalidArgument, "IMF " + std::to_string(j) + " not in stack of " +
                                                  std::to_string(stack.imfs.size()));
    }
  }
  const std::size_t channels = stack.channel_count();
  if (!channel_labels.empty() && channel_labels.size() != channels) {
    throw Error(ErrorCode::ChannelMismatch, "channel labels do not match the stack");
  }

  ImfFeatureSet set;
  set.imfs.assign(selected.begin(), selected.end());
  for (std::size_t c = 0; c < channels; ++c) {
    set.channels.push_back(channel_labels.empty() ? "ch" + std::to_string(c + 1) : channel_labels[c]);
  }
  set.cells.assign(channels, std::vector<std::array<double, kImfFeatureCount>>(selected.size()));
  set.fluctuation.assign(channels, std::vector<double>(selected.size() > 0 ? selected.size() - 1 : 0));

  for (std::size_t c = 0; c < channels; ++c) {
    double total_energy = 0.0;
    std::vector<double> energies(selected.size());
    std::vector<double> fluct(selected.size());
    for (std::size_t p = 0; p < selected.size(); ++p) {
      auto x = stack.imfs[selected[p] - 1].row(c);
      energies[p] = stats::energy(x);
      total_energy += energies[p];

      const Hjorth h = hjorth(x);
      const Moments mo = moments(x);
      auto& cell = set.cells[c][p];
      cell[static_cast<std::size_t>(ImfFeature::Activity)] = h.activity;
      cell[static_cast<std::size_t>(ImfFeature::Mobility)] = h.mobility;
      cell[static_cast<std::size_t>(ImfFeature::Complexity)] = h.complexity;
      cell[static_cast<std::size_t>(ImfFeature::StdDev)] = std::sqrt(h.activity);
      cell[static_cast<std::size_t>(ImfFeature::CoeffVariation)] = coeff_variation(x);
      cell[static_cast<std::size_t>(ImfFeature::HiguchiFd)] = higuchi_fd(x, options.higuchi_kmax);
      cell[static_cast<std::size_t>(ImfFeature::Skewness)] = mo.skewness;
      cell[static_cast<std::size_t>(ImfFeature::Kurtosis)] = mo.kurtosis;
      cell[static_cast<std::size_t>(ImfFeature::ShannonEntropy)] = shannon_entropy(x, options.entropy_bins);
      cell[static_cast<std::size_t>(ImfFeature::LogEnergyEntropy)] = log_energy_entropy(x);
      fluct[p] = fluctuation_index(x);
    }
    for (std::size_t p = 0; p < selected.size(); ++p) {
      set.cells[c][p][static_cast<std::size_t>(ImfFeature::NormalizedEnergy)] =
          total_energy > 0.0 ? energies[p] / total_energy : 0.0;
    }
    for (std::size_t p = 0; p + 1 < selected.size(); ++p) set.fluctuation[c][p] = std::abs(fluct[p] - fluct[p + 1]);
  }
  return set;
}

}  // namespace memdeeg
