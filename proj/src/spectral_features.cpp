#include "memdeeg/spectral_features.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include <fftw3.h>

#include "memdeeg/error.hpp"
#include "memdeeg/nonlinear_features.hpp"
#include "memdeeg/stats.hpp"

namespace memdeeg {

std::vector<BandDefinition> canonical_bands() {
  return {{"delta", 2.0, 4.0}, {"theta", 4.0, 8.0}, {"alpha", 8.0, 13.0}, {"beta", 13.0, 30.0}, {"gamma", 30.0, 45.0}};
}

const std::array<double, 8>& db4_lowpass() noexcept {
  static constexpr std::array<double, 8> h = {
      0.23037781330885523,  0.7148465705525415,  0.6308807679295904,  -0.02798376941698385,
      -0.18703481171888114, 0.030841381835986965, 0.032883011666982945, -0.010597401784997278};
  return h;
}

std::array<double, 8> db4_highpass() noexcept {
  const auto& h = db4_lowpass();
  std::array<double, 8> g{};
  for (std::size_t j = 0; j < 8; ++j) g[j] = (j % 2 == 0 ? 1.0 : -1.0) * h[7 - j];
  return g;
}

std::vector<std::span<const double>> WaveletDecomposition::subbands() const {
  std::vector<std::span<const double>> out;
  for (const auto& d : details) out.emplace_back(d);
  out.emplace_back(approx);
  return out;
}

WaveletDecomposition dwt_db4(std::span<const double> x) {
  if (x.size() < 8) throw Error(ErrorCode::InputTooShort, "db4 needs at least 8 samples");
  const auto& h = db4_lowpass();
  const auto g = db4_highpass();

  WaveletDecomposition w;
  w.padded_length = (x.size() + 7) / 8 * 8;
  std::vector<double> cur(w.padded_length, 0.0);
  std::copy(x.begin(), x.end(), cur.begin());

  for (std::size_t level = 0; level < w.levels; ++level) {
    const std::size_t n = cur.size();
    const std::size_t half = n / 2;
    std::vector<double> a(half, 0.0), d(half, 0.0);
    for (std::size_t k = 0; k < half; ++k) {
      double sa = 0.0, sd = 0.0;
      for (std::size_t j = 0; j < 8; ++j) {
        const double v = cur[(2 * k + j) % n];
        sa += h[j] * v;
        sd += g[j] * v;
      }
      a[k] = sa;
      d[k] = sd;
    }
    w.details.push_back(std::move(d));
    cur = std::move(a);
  }
  w.approx = std::move(cur);
  return w;
}

std::vector<double> idwt_db4(const WaveletDecomposition& w) {
  const auto& h = db4_lowpass();
  const auto g = db4_highpass();
  std::vector<double> cur = w.approx;
  for (std::size_t level = w.details.size(); level-- > 0;) {
    const auto& d = w.details[level];
    const std::size_t half = cur.size();
    const std::size_t n = 2 * half;
    std::vector<double> out(n, 0.0);
    for (std::size_t k = 0; k < half; ++k) {
      for (std::size_t j = 0; j < 8; ++j) {
        out[(2 * k + j) % n] += h[j] * cur[k] + g[j] * d[k];
      }
    }
    cur = std::move(out);
  }
  return cur;
}

std::vector<double> dwt_features(const WaveletDecomposition& w) {
  std::vector<double> out;
  out.reserve(24);
  for (auto band : w.subbands()) {
    if (band.empty()) {
      out.insert(out.end(), 6, 0.0);
      continue;
    }
    const auto [lo, hi] = std::minmax_element(band.begin(), band.end());
    const Moments mo = moments(band);
    out.push_back(*hi);
    out.push_back(*lo);
    out.push_back(mo.kurtosis);
    out.push_back(mo.skewness);
    out.push_back(stats::variance(band));
    out.push_back(stats::energy(band));
  }
  return out;
}

namespace {

struct FftwFree {
  void operator()(void* p) const noexcept { fftw_free(p); }
};
using RealBuffer = std::unique_ptr<double[], FftwFree>;
using ComplexBuffer = std::unique_ptr<fftw_complex[], FftwFree>;

// Plans are created once per length; fftw_execute_dft_r2c is thread-safe on
// fresh (fftw_malloc-aligned) buffers, plan creation is not.
fftw_plan r2c_plan(std::size_t n) {
  static std::mutex mutex;
  static std::map<std::size_t, fftw_plan> plans;
  std::lock_guard lock(mutex);
  auto it = plans.find(n);
  if (it != plans.end()) return it->second;
  RealBuffer in(static_cast<double*>(fftw_malloc(sizeof(double) * n)));
  ComplexBuffer out(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1))));
  fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.get(), out.get(), FFTW_ESTIMATE);
  plans.emplace(n, plan);
  return plan;
}

}  // namespace

PowerSpectrum welch_psd(std::span<const double> x, double fs, std::size_t segment_len) {
  if (!(fs > 0.0)) throw Error(ErrorCode::InvalidArgument, "sample rate must be positive");
  if (x.size() < 2) throw Error(ErrorCode::InputTooShort, "PSD needs at least 2 samples");
  std::size_t len = segment_len;
  if (len == 0) len = std::min(x.size(), static_cast<std::size_t>(std::llround(4.0 * fs)));
  len = std::min(len, x.size());
  const std::size_t step = len - len / 2;

  std::vector<double> window(len);
  double window_power = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(len));
    window_power += window[i] * window[i];
  }

  const std::size_t bins = len / 2 + 1;
  fftw_plan plan = r2c_plan(len);
  RealBuffer in(static_cast<double*>(fftw_malloc(sizeof(double) * len)));
  ComplexBuffer out(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * bins)));

  PowerSpectrum psd;
  psd.resolution = fs / static_cast<double>(len);
  psd.density.assign(bins, 0.0);
  psd.frequencies.resize(bins);
  for (std::size_t k = 0; k < bins; ++k) psd.frequencies[k] = static_cast<double>(k) * psd.resolution;

  std::size_t segments = 0;
  for (std::size_t start = 0; start + len <= x.size(); start += step) {
    const double mu = stats::mean(x.subspan(start, len));
    for (std::size_t i = 0; i < len; ++i) in[i] = (x[start + i] - mu) * window[i];
    fftw_execute_dft_r2c(plan, in.get(), out.get());
    for (std::size_t k = 0; k < bins; ++k) psd.density[k] += out[k][0] * out[k][0] + out[k][1] * out[k][1];
    ++segments;
  }

  const double scale = 1.0 / (fs * window_power * static_cast<double>(segments));
  for (std::size_t k = 0; k < bins; ++k) {
    const bool unpaired = k == 0 || (len % 2 == 0 && k == bins - 1);
    psd.density[k] *= scale * (unpaired ? 1.0 : 2.0);
  }
  return psd;
}

double integrate_band(const PowerSpectrum& psd, double low_hz, double high_hz) {
  double total = 0.0;
  for (std::size_t k = 0; k < psd.frequencies.size(); ++k) {
    const double f = psd.frequencies[k];
    if (f >= low_hz && f < high_hz) total += psd.density[k];
  }
  return total * psd.resolution;
}

namespace {

void check_band(const BandDefinition& band, double fs) {
  if (!(band.low_hz > 0.0) || !(band.high_hz > band.low_hz) || !(band.high_hz <= fs / 2.0)) {
    throw Error(ErrorCode::InvalidBand, "band '" + band.name + "' must satisfy 0 < low < high <= fs/2");
  }
}

}  // namespace

double bandpower(std::span<const double> x, double fs, const BandDefinition& band) {
  check_band(band, fs);
  return integrate_band(welch_psd(x, fs), band.low_hz, band.high_hz);
}

double spectral_entropy(const PowerSpectrum& psd, double low_hz, double high_hz) {
  std::vector<double> p;
  for (std::size_t k = 0; k < psd.frequencies.size(); ++k) {
    const double f = psd.frequencies[k];
    if (f >= low_hz && f < high_hz) p.push_back(psd.density[k]);
  }
  double total = 0.0;
  for (double v : p) total += v;
  if (p.size() < 2 || !(total > 0.0)) return 0.0;
  double h = 0.0;
  for (double v : p) {
    if (v <= 0.0) continue;
    const double q = v / total;
    h -= q * std::log(q);
  }
  return h / std::log(static_cast<double>(p.size()));
}

double spectral_entropy(std::span<const double> x, double fs) {
  if (x.size() < 64) throw Error(ErrorCode::InputTooShort, "spectral entropy needs at least 64 samples");
  return spectral_entropy(welch_psd(x, fs));
}

FeatureVector extract_dft_features(const MultichannelFrame& frame, std::span<const BandDefinition> bands) {
  for (const auto& b : bands) check_band(b, frame.sample_rate);
  FeatureVector fv;
  for (std::size_t c = 0; c < frame.samples.rows(); ++c) {
    const std::string& ch = frame.channel_labels.at(c);
    const PowerSpectrum psd = welch_psd(frame.samples.row(c), frame.sample_rate);
    for (const auto& b : bands) {
      fv.columns.push_back({ch + "_" + b.name + "_power", ch, b.name + "_power", 0});
      fv.values.push_back(integrate_band(psd, b.low_hz, b.high_hz));
    }
    fv.columns.push_back({ch + "_spectral_entropy", ch, "spectral_entropy", 0});
    fv.values.push_back(spectral_entropy(psd));
  }
  return fv;
}

FeatureVector extract_dwt_features(const MultichannelFrame& frame) {
  FeatureVector fv;
  for (std::size_t c = 0; c < frame.samples.rows(); ++c) {
    const std::string& ch = frame.channel_labels.at(c);
    const auto values = dwt_features(dwt_db4(frame.samples.row(c)));
    std::size_t i = 0;
    for (auto band : kSubbandNames) {
      for (auto stat : kSubbandStatNames) {
        const std::string kind = std::string(band) + "_" + std::string(stat);
        fv.columns.push_back({ch + "_" + kind, ch, kind, 0});
        fv.values.push_back(values[i++]);
      }
    }
  }
  return fv;
}

}  // namespace memdeeg
