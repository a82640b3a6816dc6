#include "memdeeg/signal_model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>

#include <json.hpp>

#include "memdeeg/csv.hpp"
#include "memdeeg/error.hpp"

namespace memdeeg {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(ClassLabel label) noexcept {
  return label == ClassLabel::Relax ? "relax" : "working";
}

ClassLabel parse_label(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "relax") return ClassLabel::Relax;
  if (lower == "working") return ClassLabel::Working;
  throw Error(ErrorCode::MalformedFile, "unknown state label '" + std::string(text) + "'");
}

int to_sign(ClassLabel label) noexcept { return label == ClassLabel::Relax ? -1 : 1; }
ClassLabel from_sign(int sign) noexcept { return sign < 0 ? ClassLabel::Relax : ClassLabel::Working; }

RecordingManifest RecordingManifest::parse(std::string_view json_text) {
  RecordingManifest m;
  try {
    const json j = json::parse(json_text);
    m.sample_rate_hz = j.at("sample_rate_hz").get<double>();
    m.channels = j.at("channels").get<std::vector<std::string>>();
    if (j.contains("regions")) m.regions = j.at("regions").get<std::map<std::string, std::string>>();
    for (const auto& iv : j.at("timeline")) {
      m.timeline.push_back({iv.at("start_s").get<double>(), iv.at("end_s").get<double>(),
                            parse_label(iv.at("label").get<std::string>())});
    }
    m.data_file = j.value("data_file", std::string{});
    m.trial_id = j.value("trial_id", std::string{});
    m.subject = j.value("subject", std::string{});
    m.session = j.value("session", std::string{});
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedFile, std::string("manifest: ") + e.what());
  }
  return m;
}

RecordingManifest RecordingManifest::load(const fs::path& path) {
  RecordingManifest m = parse(csv::read_file(path));
  if (m.data_file.empty()) m.data_file = path.stem().string() + ".csv";
  if (m.trial_id.empty()) m.trial_id = path.stem().string();
  return m;
}

MultichannelRecording::MultichannelRecording(Matrix samples, double sample_rate,
                                             std::vector<std::string> channel_labels,
                                             std::map<std::string, std::string> region_map,
                                             std::vector<StateInterval> state_timeline, RecordingProvenance provenance)
    : samples_(std::move(samples)),
      sample_rate_(sample_rate),
      channel_labels_(std::move(channel_labels)),
      region_map_(std::move(region_map)),
      state_timeline_(std::move(state_timeline)),
      provenance_(std::move(provenance)) {
  if (!(sample_rate_ > 0.0) || !std::isfinite(sample_rate_)) {
    throw Error(ErrorCode::InvalidArgument, "sample rate must be positive");
  }
  if (samples_.rows() == 0) throw Error(ErrorCode::ChannelMismatch, "recording has no channels");
  if (channel_labels_.size() != samples_.rows()) {
    throw Error(ErrorCode::ChannelMismatch, std::to_string(channel_labels_.size()) + " labels for " +
                                                std::to_string(samples_.rows()) + " channels");
  }
  for (const auto& [channel, region] : region_map_) {
    if (std::find(channel_labels_.begin(), channel_labels_.end(), channel) == channel_labels_.end()) {
      throw Error(ErrorCode::ChannelMismatch, "region map names unknown channel " + channel);
    }
  }
  std::sort(state_timeline_.begin(), state_timeline_.end(),
            [](const StateInterval& a, const StateInterval& b) { return a.start_s < b.start_s; });
  const double duration = duration_s();
  const double slack = 0.5 / sample_rate_;
  for (std::size_t i = 0; i < state_timeline_.size(); ++i) {
    const auto& iv = state_timeline_[i];
    if (!(iv.start_s >= 0.0) || !(iv.end_s > iv.start_s)) {
      throw Error(ErrorCode::TimelineOutOfRange, "interval must satisfy 0 <= start < end");
    }
    if (iv.end_s > duration + slack) {
      throw Error(ErrorCode::TimelineOutOfRange, "interval ends at " + csv::format_double(iv.end_s) +
                                                     " s beyond duration " + csv::format_double(duration));
    }
    if (i > 0 && iv.start_s < state_timeline_[i - 1].end_s) {
      throw Error(ErrorCode::TimelineOutOfRange, "timeline intervals overlap");
    }
  }
}

MultichannelRecording MultichannelRecording::with_samples(Matrix samples) const {
  if (samples.rows() != samples_.rows() || samples.cols() != samples_.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "replacement samples change the recording shape");
  }
  return MultichannelRecording(std::move(samples), sample_rate_, channel_labels_, region_map_, state_timeline_,
                               provenance_);
}

MultichannelRecording load_recording(const fs::path& csv_path, const RecordingManifest& manifest) {
  csv::NumericTable table = csv::read_numeric(csv_path);
  const std::size_t columns = table.header ? table.header->size() : table.rows.cols();
  if (columns != manifest.channels.size()) {
    throw Error(ErrorCode::ChannelMismatch, csv_path.string() + ": manifest declares " +
                                                std::to_string(manifest.channels.size()) +
                                                " channels but file has " + std::to_string(columns));
  }
  if (table.header && *table.header != manifest.channels) {
    throw Error(ErrorCode::ChannelMismatch, csv_path.string() + ": header does not match manifest channel order");
  }
  if (table.rows.rows() == 0) throw Error(ErrorCode::MalformedFile, csv_path.string() + ": no samples");

  // File is time-major; the recording is channel-major.
  const std::size_t n_time = table.rows.rows();
  Matrix samples(columns, n_time);
  for (std::size_t t = 0; t < n_time; ++t) {
    for (std::size_t c = 0; c < columns; ++c) samples(c, t) = table.rows(t, c);
  }
  return MultichannelRecording(std::move(samples), manifest.sample_rate_hz, manifest.channels, manifest.regions,
                               manifest.timeline,
                               RecordingProvenance{manifest.trial_id, manifest.subject, manifest.session});
}

std::vector<MultichannelRecording> load_recordings_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::Io, "not a directory: " + dir.string());
  std::vector<fs::path> manifests;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") manifests.push_back(entry.path());
  }
  std::sort(manifests.begin(), manifests.end());
  std::vector<MultichannelRecording> out;
  out.reserve(manifests.size());
  for (const auto& path : manifests) {
    RecordingManifest m = RecordingManifest::load(path);
    out.push_back(load_recording(dir / m.data_file, m));
  }
  return out;
}

std::vector<double> design_bandpass(double sample_rate, double low_hz, double high_hz) {
  if (!(low_hz > 0.0) || !(high_hz > low_hz) || !(high_hz < sample_rate / 2.0)) {
    throw Error(ErrorCode::InvalidBand, "band edges must satisfy 0 < low < high < fs/2");
  }
  auto taps = static_cast<std::size_t>(std::ceil(4.0 * sample_rate / low_hz));
  if (taps % 2 == 0) ++taps;

  const double f1 = low_hz / sample_rate;
  const double f2 = high_hz / sample_rate;
  const double center = static_cast<double>(taps - 1) / 2.0;
  auto sinc = [](double x) { return x == 0.0 ? 1.0 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x); };

  std::vector<double> h(taps);
  for (std::size_t n = 0; n < taps; ++n) {
    const double k = static_cast<double>(n) - center;
    const double window =
        0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) / static_cast<double>(taps - 1));
    h[n] = (2.0 * f2 * sinc(2.0 * f2 * k) - 2.0 * f1 * sinc(2.0 * f1 * k)) * window;
  }
  // Unit gain at the passband centre.
  const double f0 = (f1 + f2) / 2.0;
  double gain = 0.0;
  for (std::size_t n = 0; n < taps; ++n) {
    gain += h[n] * std::cos(2.0 * std::numbers::pi * f0 * (static_cast<double>(n) - center));
  }
  for (double& v : h) v /= gain;
  return h;
}

namespace {

void causal_fir(std::span<const double> taps, std::span<const double> x, std::span<double> y) {
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t kmax = std::min(taps.size(), i + 1);
    double acc = 0.0;
    for (std::size_t k = 0; k < kmax; ++k) acc += taps[k] * x[i - k];
    y[i] = acc;
  }
}

}  // namespace

std::vector<double> filtfilt(std::span<const double> taps, std::span<const double> x) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  const std::size_t pad = std::min(3 * taps.size(), n - 1);

  std::vector<double> ext(n + 2 * pad);
  for (std::size_t i = 0; i < pad; ++i) ext[i] = 2.0 * x[0] - x[pad - i];
  std::copy(x.begin(), x.end(), ext.begin() + static_cast<std::ptrdiff_t>(pad));
  for (std::size_t i = 0; i < pad; ++i) ext[pad + n + i] = 2.0 * x[n - 1] - x[n - 2 - i];

  std::vector<double> tmp(ext.size());
  causal_fir(taps, ext, tmp);
  std::reverse(tmp.begin(), tmp.end());
  causal_fir(taps, tmp, ext);
  std::reverse(ext.begin(), ext.end());
  return {ext.begin() + static_cast<std::ptrdiff_t>(pad), ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

MultichannelRecording bandpass_filter(const MultichannelRecording& rec, double low_hz, double high_hz) {
  const auto taps = design_bandpass(rec.sample_rate(), low_hz, high_hz);
  Matrix out(rec.channel_count(), rec.sample_count());
  for (std::size_t c = 0; c < rec.channel_count(); ++c) {
    const auto y = filtfilt(taps, rec.samples().row(c));
    std::copy(y.begin(), y.end(), out.row(c).begin());
  }
  return rec.with_samples(std::move(out));
}

std::vector<MultichannelFrame> segment(const MultichannelRecording& rec, double frame_s, double overlap_s) {
  if (!(frame_s > 0.0) || !(overlap_s >= 0.0) || !(overlap_s < frame_s)) {
    throw Error(ErrorCode::InvalidArgument, "segmentation requires 0 <= overlap < frame length");
  }
  const double fs = rec.sample_rate();
  const auto frame_len = static_cast<std::size_t>(std::llround(frame_s * fs));
  const auto hop = static_cast<std::size_t>(std::llround((frame_s - overlap_s) * fs));
  if (frame_len == 0 || hop == 0) throw Error(ErrorCode::InvalidArgument, "frame or hop rounds to zero samples");

  std::vector<MultichannelFrame> frames;
  for (const auto& iv : rec.state_timeline()) {
    const auto begin = static_cast<std::size_t>(std::llround(iv.start_s * fs));
    const auto end = std::min<std::size_t>(static_cast<std::size_t>(std::llround(iv.end_s * fs)), rec.sample_count());
    if (end < begin + frame_len) {
      throw Error(ErrorCode::FrameTooLong, "frame of " + csv::format_double(frame_s) +
                                               " s does not fit state interval starting at " +
                                               csv::format_double(iv.start_s) + " s");
    }
    for (std::size_t start = begin; start + frame_len <= end; start += hop) {
      MultichannelFrame frame;
      frame.samples = Matrix(rec.channel_count(), frame_len);
      for (std::size_t c = 0; c < rec.channel_count(); ++c) {
        auto src = rec.samples().row(c).subspan(start, frame_len);
        std::copy(src.begin(), src.end(), frame.samples.row(c).begin());
      }
      frame.sample_rate = fs;
      frame.label = iv.label;
      frame.trial_id = rec.trial_id();
      frame.channel_labels = rec.channel_labels();
      frame.start_sample = start;
      frames.push_back(std::move(frame));
    }
  }
  return frames;
}

}  // namespace memdeeg
