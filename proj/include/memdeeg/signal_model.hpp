#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "memdeeg/matrix.hpp"

namespace memdeeg {

enum class ClassLabel { Relax, Working };

std::string_view to_string(ClassLabel label) noexcept;
ClassLabel parse_label(std::string_view text);
// Binary encoding used by the classifiers: Relax -> -1, Working -> +1.
int to_sign(ClassLabel label) noexcept;
ClassLabel from_sign(int sign) noexcept;

struct StateInterval {
  double start_s = 0.0;
  double end_s = 0.0;
  ClassLabel label = ClassLabel::Relax;
};

// Descriptor that accompanies every CSV recording.
struct RecordingManifest {
  double sample_rate_hz = 0.0;
  std::vector<std::string> channels;
  std::map<std::string, std::string> regions;  // channel label -> region tag
  std::vector<StateInterval> timeline;
  std::string data_file;  // relative to the manifest; defaults to <stem>.csv
  std::string trial_id;   // defaults to the manifest stem
  std::string subject;
  std::string session;

  static RecordingManifest parse(std::string_view json_text);
  static RecordingManifest load(const std::filesystem::path& path);
};

struct RecordingProvenance {
  std::string trial_id;
  std::string subject;
  std::string session;
};

// One continuous multichannel session. Immutable once constructed; the
// constructor enforces the shape and timeline invariants.
class MultichannelRecording {
 public:
  MultichannelRecording(Matrix samples, double sample_rate, std::vector<std::string> channel_labels,
                        std::map<std::string, std::string> region_map,
                        std::vector<StateInterval> state_timeline, RecordingProvenance provenance = {});

  const Matrix& samples() const noexcept { return samples_; }
  double sample_rate() const noexcept { return sample_rate_; }
  const std::vector<std::string>& channel_labels() const noexcept { return channel_labels_; }
  const std::map<std::string, std::string>& region_map() const noexcept { return region_map_; }
  const std::vector<StateInterval>& state_timeline() const noexcept { return state_timeline_; }
  const RecordingProvenance& provenance() const noexcept { return provenance_; }
  const std::string& trial_id() const noexcept { return provenance_.trial_id; }

  std::size_t channel_count() const noexcept { return samples_.rows(); }
  std::size_t sample_count() const noexcept { return samples_.cols(); }
  double duration_s() const noexcept { return static_cast<double>(sample_count()) / sample_rate_; }

  // Same metadata, new sample block of identical shape.
  MultichannelRecording with_samples(Matrix samples) const;

 private:
  Matrix samples_;
  double sample_rate_;
  std::vector<std::string> channel_labels_;
  std::map<std::string, std::string> region_map_;
  std::vector<StateInterval> state_timeline_;
  RecordingProvenance provenance_;
};

struct MultichannelFrame {
  Matrix samples;  // channels x frame_len
  double sample_rate = 0.0;
  ClassLabel label = ClassLabel::Relax;
  std::string trial_id;
  std::vector<std::string> channel_labels;
  std::size_t start_sample = 0;
};

// Reads rows = time, columns = channels. An optional first header row must
// name the manifest channels in order.
MultichannelRecording load_recording(const std::filesystem::path& csv_path,
                                     const RecordingManifest& manifest);

// Loads every *.json manifest in `dir` (sorted by file name) with its CSV.
std::vector<MultichannelRecording> load_recordings_dir(const std::filesystem::path& dir);

// Hamming-windowed bandpass taps; tap count = ceil(4 fs / low_hz), bumped to odd.
std::vector<double> design_bandpass(double sample_rate, double low_hz, double high_hz);

// Zero-phase (forward-backward) FIR bandpass, odd-extension padded at the ends.
std::vector<double> filtfilt(std::span<const double> taps, std::span<const double> x);

MultichannelRecording bandpass_filter(const MultichannelRecording& rec, double low_hz, double high_hz);

std::vector<MultichannelFrame> segment(const MultichannelRecording& rec, double frame_s, double overlap_s);

}  // namespace memdeeg
