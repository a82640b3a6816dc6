#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "memdeeg/csv.hpp"
#include "memdeeg/error.hpp"
#include "memdeeg/signal_model.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

using namespace memdeeg;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::vector<StateInterval> rwr_timeline() {
  return {{0, 60, ClassLabel::Relax}, {60, 120, ClassLabel::Working}, {120, 180, ClassLabel::Relax}};
}

MultichannelRecording simple_recording(std::size_t channels, std::size_t samples, double fs,
                                       std::vector<StateInterval> timeline, std::uint64_t seed = 1) {
  std::vector<std::string> labels;
  for (std::size_t c = 0; c < channels; ++c) labels.push_back("ch" + std::to_string(c));
  return MultichannelRecording(synth::noise_matrix(channels, samples, seed), fs, labels, {}, std::move(timeline),
                               {"trial", "", ""});
}

void write_csv(const fs::path& p, std::size_t cols, std::size_t rows, bool header) {
  std::ofstream os(p);
  if (header) {
    for (std::size_t c = 0; c < cols; ++c) os << (c ? "," : "") << "ch" << c;
    os << '\n';
  }
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) os << (c ? "," : "") << (double(r) * 0.01 + double(c));
    os << '\n';
  }
}

RecordingManifest manifest(std::size_t channels, double fs, double duration) {
  RecordingManifest m;
  m.sample_rate_hz = fs;
  for (std::size_t c = 0; c < channels; ++c) m.channels.push_back("ch" + std::to_string(c));
  m.timeline = {{0.0, duration, ClassLabel::Relax}};
  m.trial_id = "t";
  return m;
}

double rms_of(std::span<const double> x) { return oracle::rms(x); }

}  // namespace

TEST_SUITE("labels") {
  TEST_CASE("sign encoding") {
    CHECK(to_sign(ClassLabel::Relax) == -1);
    CHECK(to_sign(ClassLabel::Working) == 1);
    CHECK(from_sign(-1) == ClassLabel::Relax);
    CHECK(from_sign(1) == ClassLabel::Working);
    CHECK(parse_label("Working") == ClassLabel::Working);
    CHECK(parse_label("relax") == ClassLabel::Relax);
    CHECK_THROWS_AS(parse_label("sleep"), Error);
  }
}

TEST_SUITE("recording invariants") {
  TEST_CASE("non-positive sample rate is rejected") {
    CHECK_THROWS_AS(simple_recording(2, 100, 0.0, {}), Error);
  }

  TEST_CASE("label count must match channel count") {
    CHECK_THROWS_AS(MultichannelRecording(Matrix(3, 10), 10.0, {"a", "b"}, {}, {}), Error);
  }

  TEST_CASE("timeline beyond duration is rejected") {
    try {
      simple_recording(1, 128, 128.0, {{0.0, 2.0, ClassLabel::Relax}});
      FAIL("expected an exception");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::TimelineOutOfRange);
    }
  }

  TEST_CASE("overlapping intervals are rejected") {
    CHECK_THROWS_AS(simple_recording(1, 1280, 128.0, {{0, 6, ClassLabel::Relax}, {5, 10, ClassLabel::Working}}),
                    Error);
  }

  TEST_CASE("region map must name known channels") {
    CHECK_THROWS_AS(MultichannelRecording(Matrix(1, 10), 10.0, {"a"}, {{"b", "frontal"}}, {}), Error);
  }
}

TEST_SUITE("loading") {
  TEST_CASE("14 columns x 23040 rows at 128 Hz is a 180 s recording") {
    TempDir dir("memdeeg_load_14");
    write_csv(dir.path / "r.csv", 14, 23040, true);
    auto m = manifest(14, 128.0, 180.0);
    const auto rec = load_recording(dir.path / "r.csv", m);
    CHECK(rec.channel_count() == 14);
    CHECK(rec.sample_count() == 23040);
    CHECK(rec.duration_s() == doctest::Approx(180.0));
    CHECK(rec.samples()(3, 2) == doctest::Approx(3.02));
  }

  TEST_CASE("1 column x 128 rows is a 1 s single-channel recording") {
    TempDir dir("memdeeg_load_1");
    write_csv(dir.path / "r.csv", 1, 128, false);
    const auto rec = load_recording(dir.path / "r.csv", manifest(1, 128.0, 1.0));
    CHECK(rec.channel_count() == 1);
    CHECK(rec.duration_s() == doctest::Approx(1.0));
  }

  TEST_CASE("13 columns against a 14-channel manifest is a channel mismatch") {
    TempDir dir("memdeeg_load_13");
    write_csv(dir.path / "r.csv", 13, 256, false);
    try {
      load_recording(dir.path / "r.csv", manifest(14, 128.0, 2.0));
      FAIL("expected an exception");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ChannelMismatch);
    }
  }

  TEST_CASE("header naming channels out of order is a channel mismatch") {
    TempDir dir("memdeeg_load_hdr");
    write_csv(dir.path / "r.csv", 2, 64, true);
    auto m = manifest(2, 32.0, 2.0);
    std::swap(m.channels[0], m.channels[1]);
    CHECK_THROWS_AS(load_recording(dir.path / "r.csv", m), Error);
  }

  TEST_CASE("malformed cells are reported") {
    TempDir dir("memdeeg_load_bad");
    std::ofstream(dir.path / "r.csv") << "1,2\n3,abc\n";
    try {
      load_recording(dir.path / "r.csv", manifest(2, 1.0, 1.0));
      FAIL("expected an exception");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::MalformedFile);
    }
  }

  TEST_CASE("manifest parsing and directory loading") {
    const auto m = RecordingManifest::parse(R"({"sample_rate_hz": 128, "channels": ["AF3", "AF4"],
      "regions": {"AF3": "frontal", "AF4": "frontal"},
      "timeline": [{"start_s": 0, "end_s": 1, "label": "relax"}, {"start_s": 1, "end_s": 2, "label": "working"}]})");
    CHECK(m.sample_rate_hz == 128.0);
    CHECK(m.channels.size() == 2);
    CHECK(m.regions.at("AF4") == "frontal");
    CHECK(m.timeline[1].label == ClassLabel::Working);
    CHECK_THROWS_AS(RecordingManifest::parse(R"({"channels": []})"), Error);

    TempDir dir("memdeeg_load_dir");
    const auto recs = synth::surrogate_trials({.trials = 3, .channels = 2, .intervals = 2, .interval_s = 1.0});
    synth::write_recordings(dir.path, recs);
    const auto back = load_recordings_dir(dir.path);
    REQUIRE(back.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(back[i].trial_id() == recs[i].trial_id());
      CHECK(back[i].samples() == recs[i].samples());
      CHECK(back[i].state_timeline().size() == 2);
    }
  }
}

TEST_SUITE("bandpass") {
  TEST_CASE("60 Hz is attenuated below 5% RMS") {
    const auto x = synth::sine(1920, 128.0, 60.0);
    const auto y = filtfilt(design_bandpass(128.0, 2.0, 45.0), x);
    REQUIRE(y.size() == x.size());
    CHECK(rms_of(y) < 0.05 * rms_of(x));
  }

  TEST_CASE("10 Hz passes within 5% RMS") {
    const auto x = synth::sine(1920, 128.0, 10.0);
    const auto y = filtfilt(design_bandpass(128.0, 2.0, 45.0), x);
    CHECK(rms_of(y) == doctest::Approx(rms_of(x)).epsilon(0.05));
  }

  TEST_CASE("invalid band edges") {
    try {
      design_bandpass(128.0, 45.0, 2.0);
      FAIL("expected an exception");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::InvalidBand);
    }
    CHECK_THROWS_AS(design_bandpass(128.0, 2.0, 64.0), Error);
  }

  TEST_CASE("tap count is ceil(4 fs / low) bumped to odd") {
    CHECK(design_bandpass(128.0, 2.0, 45.0).size() == 257);
    CHECK(design_bandpass(100.0, 3.0, 30.0).size() == 135);
  }

  TEST_CASE("filter is linear") {
    const auto taps = design_bandpass(128.0, 2.0, 45.0);
    const auto a = synth::white_noise(700, 1);
    const auto b = synth::white_noise(700, 2);
    std::vector<double> mix(700);
    for (std::size_t i = 0; i < 700; ++i) mix[i] = 2.5 * a[i] - 0.75 * b[i];
    const auto fa = filtfilt(taps, a);
    const auto fb = filtfilt(taps, b);
    const auto fm = filtfilt(taps, mix);
    double err = 0.0, peak = 0.0;
    for (std::size_t i = 0; i < 700; ++i) {
      err = std::max(err, std::abs(fm[i] - (2.5 * fa[i] - 0.75 * fb[i])));
      peak = std::max(peak, std::abs(fm[i]));
    }
    CHECK(err / peak <= 1e-9);
  }

  TEST_CASE("recording filter keeps shape and metadata") {
    const auto rec = simple_recording(3, 512, 128.0, {{0, 4, ClassLabel::Working}});
    const auto f = bandpass_filter(rec, 2.0, 45.0);
    CHECK(f.sample_count() == 512);
    CHECK(f.channel_labels() == rec.channel_labels());
    CHECK(f.trial_id() == rec.trial_id());
  }
}

TEST_SUITE("segmentation") {
  TEST_CASE("60 s interval, 15 s frames, 10 s overlap gives 10 frames of 1920 samples") {
    const auto rec = simple_recording(1, 7680, 128.0, {{0, 60, ClassLabel::Relax}});
    const auto frames = segment(rec, 15.0, 10.0);
    CHECK(frames.size() == 10);
    for (const auto& f : frames) CHECK(f.samples.cols() == 1920);
  }

  TEST_CASE("180 s relax/working/relax gives 30 frames, 20 Relax and 10 Working") {
    const auto rec = simple_recording(2, 23040, 128.0, rwr_timeline());
    const auto frames = segment(rec, 15.0, 10.0);
    // Enumerate admissible starts per interval independently.
    std::size_t expected = 0, relax = 0;
    for (const auto& iv : rwr_timeline()) {
      for (double s = iv.start_s; s + 15.0 <= iv.end_s + 1e-9; s += 5.0) {
        ++expected;
        relax += iv.label == ClassLabel::Relax;
      }
    }
    CHECK(frames.size() == expected);
    CHECK(frames.size() == 30);
    std::size_t got_relax = 0;
    for (const auto& f : frames) got_relax += f.label == ClassLabel::Relax;
    CHECK(got_relax == relax);
    CHECK(got_relax == 20);
  }

  TEST_CASE("frames are exact slices, labelled by their start time, never crossing boundaries") {
    const auto rec = simple_recording(3, 23040, 128.0, rwr_timeline(), 9);
    for (const auto& f : segment(rec, 15.0, 10.0)) {
      CHECK(f.trial_id == "trial");
      for (std::size_t c = 0; c < 3; ++c) {
        for (std::size_t t = 0; t < f.samples.cols(); ++t) CHECK(f.samples(c, t) == rec.samples()(c, f.start_sample + t));
      }
      const double start = double(f.start_sample) / 128.0;
      const double end = start + 15.0;
      bool inside = false;
      for (const auto& iv : rwr_timeline()) {
        if (start >= iv.start_s && end <= iv.end_s) {
          inside = true;
          CHECK(f.label == iv.label);
        }
      }
      CHECK(inside);
    }
  }

  TEST_CASE("frame longer than an interval is rejected") {
    const auto rec = simple_recording(1, 2560, 128.0, {{0, 10, ClassLabel::Relax}, {10, 20, ClassLabel::Working}});
    try {
      segment(rec, 15.0, 10.0);
      FAIL("expected an exception");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::FrameTooLong);
    }
  }

  TEST_CASE("invalid overlap is rejected") {
    const auto rec = simple_recording(1, 2560, 128.0, {{0, 20, ClassLabel::Relax}});
    CHECK_THROWS_AS(segment(rec, 5.0, 5.0), Error);
    CHECK_THROWS_AS(segment(rec, 5.0, -1.0), Error);
  }
}

TEST_SUITE("csv") {
  TEST_CASE("format_double round trips") {
    for (double v : {0.1, -3.0, 1e-300, 123456.789, 0.30000000000000004}) {
      const auto text = csv::format_double(v);
      CHECK(std::stod(text) == v);
    }
  }

  TEST_CASE("header detection and numeric parsing") {
    const auto t = csv::parse_numeric("a,b\n1,2\n3,4.5\n");
    REQUIRE(t.header.has_value());
    CHECK(t.header->at(1) == "b");
    CHECK(t.rows.rows() == 2);
    CHECK(t.rows(1, 1) == 4.5);
    const auto u = csv::parse_numeric("1,2\n3,4\n");
    CHECK_FALSE(u.header.has_value());
    CHECK(u.rows.rows() == 2);
    CHECK_THROWS_AS(csv::parse_numeric("1,2\n3\n"), Error);
  }
}
