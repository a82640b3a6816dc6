#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "memdeeg/matrix.hpp"

namespace memdeeg {

// V unit direction vectors in R^n (one per row).
class DirectionSet {
 public:
  explicit DirectionSet(Matrix vectors);

  std::size_t count() const noexcept { return vectors_.rows(); }
  std::size_t dimension() const noexcept { return vectors_.cols(); }
  std::span<const double> operator[](std::size_t v) const { return vectors_.row(v); }
  const Matrix& vectors() const noexcept { return vectors_; }

 private:
  Matrix vectors_;
};

struct SiftConfig {
  std::size_t max_imfs = 10;
  std::size_t num_directions = 64;
  std::size_t max_sift_iters = 15;
  double stoppage_tolerance = 0.075;
  // Fraction of samples allowed to exceed stoppage_tolerance.
  double stoppage_outlier_fraction = 0.05;
  std::size_t min_extrema = 3;
  bool pad_to_max_imfs = true;

  void validate() const;
  bool operator==(const SiftConfig&) const = default;
};

struct ImfStack {
  std::vector<Matrix> imfs;  // each channels x samples, finest scale first
  Matrix residue;
  SiftConfig config;
  std::size_t extracted = 0;  // IMFs found before zero padding

  std::size_t channel_count() const noexcept { return residue.rows(); }
  std::size_t sample_count() const noexcept { return residue.cols(); }
  Matrix reconstruct() const;
};

// Deterministic quasi-uniform directions on the (n-1)-sphere: a Hammersley
// point set pushed through the inverse normal CDF and normalised, emitted in
// antipodal pairs so that every projection has its mirror.
DirectionSet generate_directions(std::size_t n, std::size_t count);

std::vector<double> project(const Matrix& x, std::span<const double> direction);

// Interior maxima p[i-1] < p[i] >= p[i+1]; a plateau that rises and then falls
// reports floor((first + last) / 2).
std::vector<std::size_t> find_maxima(std::span<const double> p);

struct EnvelopeMean {
  Matrix mean;                    // m(t), channels x samples
  std::vector<double> amplitude;  // RMS spread of the directional envelopes about m(t)
};

// Multichannel envelope along one direction: natural cubic spline through
// x(t_i) at the projection maxima, two extrema mirrored past each end.
Matrix direction_envelope(const Matrix& x, std::span<const double> direction, std::size_t min_extrema);

// Plain average of precomputed envelopes.
Matrix average_envelopes(std::span<const Matrix> envelopes);

EnvelopeMean envelope_mean(const Matrix& x, const DirectionSet& dirs, std::size_t min_extrema);

// True when ||m(t)|| / amplitude(t) <= tolerance on all but the allowed
// fraction of samples.
bool sifting_converged(const EnvelopeMean& em, double tolerance, double outlier_fraction);

struct SiftResult {
  Matrix imf;
  Matrix remainder;
  std::size_t iterations = 0;
};

SiftResult sift(const Matrix& x, const DirectionSet& dirs, const SiftConfig& cfg);

ImfStack decompose(const Matrix& x, const SiftConfig& cfg);

// Directory layout: imf_01.csv .. imf_MM.csv and residue.csv (rows = time,
// one column per channel, header row of channel labels) plus meta.json.
void save_imf_stack(const ImfStack& stack, std::span<const std::string> channel_labels,
                    const std::filesystem::path& dir);
ImfStack load_imf_stack(const std::filesystem::path& dir);

}  // namespace memdeeg
