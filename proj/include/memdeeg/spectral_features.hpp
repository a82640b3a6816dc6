#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "memdeeg/dataset.hpp"
#include "memdeeg/signal_model.hpp"

namespace memdeeg {

struct BandDefinition {
  std::string name;
  double low_hz = 0.0;
  double high_hz = 0.0;
};

// delta 2-4, theta 4-8, alpha 8-13, beta 13-30, gamma 30-45 Hz.
std::vector<BandDefinition> canonical_bands();

// Daubechies-4 scaling (reconstruction low-pass) filter, 8 taps.
const std::array<double, 8>& db4_lowpass() noexcept;
// Quadrature mirror high-pass: g[j] = (-1)^j h[7 - j].
std::array<double, 8> db4_highpass() noexcept;

struct WaveletDecomposition {
  std::vector<std::vector<double>> details;  // D1 (finest) .. D3
  std::vector<double> approx;                // A3
  std::size_t levels = 3;
  std::size_t padded_length = 0;  // input length after zero padding to a multiple of 8

  // Subbands in feature order: D1, D2, D3, A3.
  std::vector<std::span<const double>> subbands() const;
};

// Three-level periodic db4 pyramid. Inputs whose length is not a multiple of
// 8 are zero-padded up to the next multiple.
WaveletDecomposition dwt_db4(std::span<const double> x);

// Inverse transform; returns padded_length samples.
std::vector<double> idwt_db4(const WaveletDecomposition& w);

// max, min, kurtosis, skewness, variance, energy for each subband D1, D2, D3, A3.
inline constexpr std::array<std::string_view, 4> kSubbandNames = {"D1", "D2", "D3", "A3"};
inline constexpr std::array<std::string_view, 6> kSubbandStatNames = {"max", "min", "kurtosis", "skewness",
                                                                        "variance", "energy"};
std::vector<double> dwt_features(const WaveletDecomposition& w);

struct PowerSpectrum {
  std::vector<double> frequencies;
  std::vector<double> density;  // one-sided PSD, units^2 / Hz
  double resolution = 0.0;
};

// Welch estimate: Hann window, 50% overlap, per-segment mean removal.
// segment_len 0 selects min(N, 4 fs).
PowerSpectrum welch_psd(std::span<const double> x, double fs, std::size_t segment_len = 0);

// Rectangle-rule integral of the PSD over bins with low <= f < high.
double integrate_band(const PowerSpectrum& psd, double low_hz, double high_hz);

double bandpower(std::span<const double> x, double fs, const BandDefinition& band);

// Normalised Shannon entropy of the 2-45 Hz PSD, in [0, 1]; 0 for a flat-zero spectrum.
double spectral_entropy(std::span<const double> x, double fs);
double spectral_entropy(const PowerSpectrum& psd, double low_hz = 2.0, double high_hz = 45.0);

// Per channel: one power per band, then spectral entropy.
FeatureVector extract_dft_features(const MultichannelFrame& frame, std::span<const BandDefinition> bands);

// Per channel: dwt_features of the channel.
FeatureVector extract_dwt_features(const MultichannelFrame& frame);

}  // namespace memdeeg
