#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "memdeeg/dataset.hpp"
#include "memdeeg/ensemble.hpp"
#include "memdeeg/memd.hpp"
#include "memdeeg/nonlinear_features.hpp"
#include "memdeeg/selection.hpp"
#include "memdeeg/signal_model.hpp"

namespace memdeeg {

enum class FeatureMode { Memd, Dwt, Dft, MemdDwt };

std::string_view to_string(FeatureMode mode) noexcept;
// Accepts memd, dwt, dft, memd-dwt (case-insensitive, '_' or '-').
FeatureMode parse_feature_mode(std::string_view text);

struct CvConfig {
  std::size_t folds = 5;
  std::size_t repeats = 5;
  std::uint64_t seed = 42;

  bool operator==(const CvConfig&) const = default;
};

struct ExperimentConfig {
  FeatureMode feature_mode = FeatureMode::Memd;
  double frame_s = 15.0;
  double overlap_s = 10.0;
  bool bandpass = true;
  double band_low_hz = 2.0;
  double band_high_hz = 45.0;
  SiftConfig sift;
  std::vector<std::size_t> selected_imfs = {1, 2, 3, 4, 5};
  // Feature names or kinds kept from the MEMD block; empty keeps all.
  std::vector<std::string> selected_features;
  FeatureOptions features;
  CvConfig cv;
  // Region tags to keep; empty keeps every channel.
  std::vector<std::string> regions;
  BoostParams boost;
  std::size_t imf_top_k = 5;
  std::size_t feature_top_m = 6;

  void validate() const;
  std::string to_json() const;  // stable key order, pretty-printed
  static ExperimentConfig from_json(std::string_view text);
  static ExperimentConfig load(const std::filesystem::path& path);

  bool operator==(const ExperimentConfig&) const = default;
};

// Feature vector of one frame under the configured mode.
FeatureVector frame_features(const MultichannelFrame& frame, const ExperimentConfig& cfg);

// Filter (optional) -> segment -> features, in recording then frame order.
// Frames are processed concurrently; assembly order is fixed.
Dataset build_dataset(std::span<const MultichannelRecording> recordings, const ExperimentConfig& cfg);

struct ImfDataset {
  Dataset data;                      // features of every IMF 1..max_imfs
  std::vector<double> correlations;  // mean |r(IMF_j, raw)| over channels and frames
};
ImfDataset build_imf_dataset(std::span<const MultichannelRecording> recordings, const ExperimentConfig& cfg);

class Standardizer {
 public:
  static Standardizer fit(const Matrix& x);
  Matrix transform(const Matrix& x) const;
  void transform_row(std::span<double> row) const;
  const std::vector<double>& means() const noexcept { return means_; }
  const std::vector<double>& scales() const noexcept { return scales_; }

  Standardizer() = default;
  Standardizer(std::vector<double> means, std::vector<double> scales)
      : means_(std::move(means)), scales_(std::move(scales)) {}

  bool operator==(const Standardizer&) const = default;

 private:
  std::vector<double> means_;
  std::vector<double> scales_;  // population std, 1 for constant columns
};

// Shuffled trial partition: fold f holds positions [f T / F, (f + 1) T / F).
std::vector<std::vector<std::string>> trial_folds(std::vector<std::string> trial_ids, std::size_t folds,
                                                  std::uint64_t seed, std::size_t repeat);

struct FoldResult {
  std::size_t repeat = 0;
  std::size_t fold = 0;
  std::size_t train_samples = 0;
  std::size_t test_samples = 0;
  std::vector<std::string> test_trials;
  Evaluation evaluation;
};

struct CvReport {
  std::vector<FoldResult> folds;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;  // population
  std::array<std::array<std::size_t, 2>, 2> confusion{};
  std::string config_snapshot;
};

CvReport cross_validate(const Dataset& data, const ExperimentConfig& cfg);

// Solo-accuracy evaluator used by the rankings: cross_validate under `cfg`.
Evaluator cv_evaluator(const ExperimentConfig& cfg);

// frontal: AF3 AF4 F7 F8 F3 F4; temporal: FC5 T7 T8 FC6; parietal: P7 O1 O2 P8.
std::map<std::string, std::vector<std::string>> default_region_groups();
std::map<std::string, std::vector<std::string>> region_groups(const std::map<std::string, std::string>& region_map);

struct RegionReport {
  std::string region;
  std::vector<std::string> channels;
  CvReport report;
};

// `regions` empty evaluates every group.
std::vector<RegionReport> evaluate_regions(const Dataset& data,
                                           const std::map<std::string, std::vector<std::string>>& groups,
                                           std::span<const std::string> regions, const ExperimentConfig& cfg);

struct PsdTable {
  std::vector<double> frequencies;
  struct Row {
    std::string channel;
    ClassLabel state;
    std::vector<double> density;
  };
  std::vector<Row> rows;  // channel-major, Relax before Working
};

// Mean Welch PSD per channel and state over all state intervals.
PsdTable compute_psd_table(std::span<const MultichannelRecording> recordings);
PsdTable export_psd(std::span<const MultichannelRecording> recordings, const std::filesystem::path& out_path);

struct TrainedModel {
  std::vector<FeatureColumn> columns;
  Standardizer standardizer;
  BoostedEnsemble ensemble;

  ClassLabel predict(std::span<const double> features) const;
  void save(std::ostream& os) const;
  static TrainedModel load(std::istream& is);
};

TrainedModel train_model(const Dataset& data, const ExperimentConfig& cfg);

void write_cv_report(const CvReport& report, const std::filesystem::path& dir, const std::string& prefix = "cv");
void write_region_reports(std::span<const RegionReport> reports, const std::filesystem::path& dir);
void write_psd_csv(const PsdTable& table, const std::filesystem::path& path);

}  // namespace memdeeg
