#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "memdeeg/error.hpp"
#include "memdeeg/spectral_features.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

using namespace memdeeg;

namespace {

double energy(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

MultichannelFrame frame_of(Matrix samples, std::vector<std::string> labels, double fs = 128.0) {
  MultichannelFrame f;
  f.samples = std::move(samples);
  f.sample_rate = fs;
  f.channel_labels = std::move(labels);
  return f;
}

// Welch by direct summation: Hann (periodic), 50% overlap, mean removal, one-sided density.
std::vector<double> reference_welch(const std::vector<double>& x, double fs, std::size_t len) {
  const std::size_t step = len - len / 2;
  std::vector<double> w(len);
  double wp = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    w[i] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * double(i) / double(len)));
    wp += w[i] * w[i];
  }
  std::vector<double> acc(len / 2 + 1, 0.0);
  std::size_t segs = 0;
  for (std::size_t s = 0; s + len <= x.size(); s += step) {
    double mu = 0.0;
    for (std::size_t i = 0; i < len; ++i) mu += x[s + i];
    mu /= double(len);
    std::vector<double> seg(len);
    for (std::size_t i = 0; i < len; ++i) seg[i] = (x[s + i] - mu) * w[i];
    const auto p = oracle::dft_power(seg);
    for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += p[k];
    ++segs;
  }
  for (std::size_t k = 0; k < acc.size(); ++k) {
    const double twice = (k == 0 || k == len / 2) ? 1.0 : 2.0;
    acc[k] *= twice / (fs * wp * double(segs));
  }
  return acc;
}

}  // namespace

TEST_SUITE("db4") {
  TEST_CASE("filter orthogonality identities") {
    const auto& h = db4_lowpass();
    double sum = 0.0;
    for (double v : h) sum += v;
    CHECK(sum == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
    for (int m = 0; m < 4; ++m) {
      double s = 0.0;
      for (int k = 0; k + 2 * m < 8; ++k) s += h[k] * h[k + 2 * m];
      CHECK(std::abs(s - (m == 0 ? 1.0 : 0.0)) <= 1e-12);
    }
    const auto g = db4_highpass();
    double gh = 0.0, gs = 0.0;
    for (int k = 0; k < 8; ++k) {
      gh += g[k] * h[k];
      gs += g[k];
    }
    CHECK(std::abs(gh) <= 1e-12);
    CHECK(std::abs(gs) <= 1e-12);
  }

  TEST_CASE("constant series has zero detail coefficients") {
    const auto w = dwt_db4(std::vector<double>(256, 3.3));
    for (const auto& d : w.details) {
      for (double v : d) CHECK(std::abs(v) <= 1e-10);
    }
  }

  TEST_CASE("perfect reconstruction and energy conservation, N=1024") {
    for (std::uint64_t s = 0; s < 20; ++s) {
      const auto x = synth::white_noise(1024, s);
      const auto w = dwt_db4(x);
      const auto y = idwt_db4(w);
      REQUIRE(y.size() == 1024);
      double err = 0.0, peak = 0.0;
      for (std::size_t i = 0; i < 1024; ++i) {
        err = std::max(err, std::abs(y[i] - x[i]));
        peak = std::max(peak, std::abs(x[i]));
      }
      CHECK(err / peak <= 1e-8);
      double e = 0.0;
      for (auto b : w.subbands()) e += energy(b);
      CHECK(std::abs(e - energy(x)) / energy(x) <= 1e-8);
    }
  }

  TEST_CASE("coefficient counts halve per level") {
    const auto w = dwt_db4(synth::white_noise(1000, 1));
    CHECK(w.levels == 3);
    CHECK(w.details[0].size() == 500);
    CHECK(w.details[1].size() == 250);
    CHECK(w.details[2].size() == 125);
    CHECK(w.approx.size() == 125);
  }

  TEST_CASE("length not divisible by 8 is zero padded") {
    const auto x = synth::white_noise(1001, 2);
    const auto w = dwt_db4(x);
    CHECK(w.padded_length == 1008);
    const auto y = idwt_db4(w);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(y[i] == doctest::Approx(x[i]).epsilon(1e-10));
    for (std::size_t i = x.size(); i < y.size(); ++i) CHECK(std::abs(y[i]) <= 1e-10);
  }

  TEST_CASE("one level matches a direct periodic filter bank") {
    std::vector<double> x(32);
    for (std::size_t i = 0; i < 32; ++i) x[i] = std::sin(0.7 * double(i)) + 0.1 * double(i);
    const auto w = dwt_db4(x);
    const auto& h = db4_lowpass();
    for (std::size_t k = 0; k < 16; ++k) {
      double d = 0.0;
      for (std::size_t j = 0; j < 8; ++j) d += (j % 2 ? -1.0 : 1.0) * h[7 - j] * x[(2 * k + j) % 32];
      CHECK(w.details[0][k] == doctest::Approx(d).epsilon(1e-13));
    }
  }

  TEST_CASE("shorter than the filter is rejected") { CHECK_THROWS_AS(dwt_db4(std::vector<double>(7, 1.0)), Error); }
}

TEST_SUITE("dwt features") {
  TEST_CASE("zero signal gives 24 zeros") {
    const auto f = dwt_features(dwt_db4(std::vector<double>(128, 0.0)));
    REQUIRE(f.size() == 24);
    for (double v : f) CHECK(v == 0.0);
  }

  TEST_CASE("subband [-1, 2] statistics") {
    WaveletDecomposition w;
    w.details = {{-1.0, 2.0}, {-1.0, 2.0}, {-1.0, 2.0}};
    w.approx = {-1.0, 2.0};
    const auto f = dwt_features(w);
    for (std::size_t b = 0; b < 4; ++b) {
      CHECK(f[6 * b + 0] == 2.0);
      CHECK(f[6 * b + 1] == -1.0);
      CHECK(f[6 * b + 4] == doctest::Approx(2.25));
      CHECK(f[6 * b + 5] == doctest::Approx(5.0));
    }
  }

  TEST_CASE("scaling by 2 scales max/min by 2, variance/energy by 4, moments unchanged") {
    auto x = synth::white_noise(512, 4);
    const auto a = dwt_features(dwt_db4(x));
    for (double& v : x) v *= 2.0;
    const auto b = dwt_features(dwt_db4(x));
    for (std::size_t band = 0; band < 4; ++band) {
      const std::size_t o = 6 * band;
      CHECK(b[o + 0] == doctest::Approx(2.0 * a[o + 0]));
      CHECK(b[o + 1] == doctest::Approx(2.0 * a[o + 1]));
      CHECK(b[o + 2] == doctest::Approx(a[o + 2]));
      CHECK(b[o + 3] == doctest::Approx(a[o + 3]));
      CHECK(b[o + 4] == doctest::Approx(4.0 * a[o + 4]));
      CHECK(b[o + 5] == doctest::Approx(4.0 * a[o + 5]));
    }
  }

  TEST_CASE("frame layout names D1..A3 statistics per channel") {
    const auto fv = extract_dwt_features(frame_of(synth::noise_matrix(2, 256, 1), {"F3", "F4"}));
    REQUIRE(fv.values.size() == 48);
    CHECK(fv.columns[0].name == "F3_D1_max");
    CHECK(fv.columns[23].name == "F3_A3_energy");
    CHECK(fv.columns[24].name == "F4_D1_max");
    CHECK(fv.columns[24].kind == "D1_max");
  }
}

TEST_SUITE("welch and bandpower") {
  TEST_CASE("welch matches a direct-summation reference") {
    const auto x = synth::white_noise(700, 8);
    const auto psd = welch_psd(x, 128.0, 256);
    const auto ref = reference_welch(x, 128.0, 256);
    REQUIRE(psd.density.size() == ref.size());
    for (std::size_t k = 0; k < ref.size(); ++k) CHECK(psd.density[k] == doctest::Approx(ref[k]).epsilon(1e-9));
    CHECK(psd.frequencies[1] == doctest::Approx(0.5));
  }

  TEST_CASE("default segment is min(N, 4 fs)") {
    CHECK(welch_psd(synth::white_noise(1920, 1), 128.0).density.size() == 257);
    CHECK(welch_psd(synth::white_noise(300, 1), 128.0).density.size() == 151);
  }

  TEST_CASE("zero signal has zero power in every band") {
    const std::vector<double> x(512, 0.0);
    for (const auto& b : canonical_bands()) CHECK(bandpower(x, 128.0, b) == 0.0);
  }

  TEST_CASE("10 Hz sine puts at least 99% of 2-45 Hz power in alpha") {
    const auto x = synth::sine(1920, 128.0, 10.0);
    const double total = bandpower(x, 128.0, {"all", 2.0, 45.0});
    CHECK(bandpower(x, 128.0, {"alpha", 8.0, 13.0}) >= 0.99 * total);
  }

  TEST_CASE("white noise band power is proportional to bandwidth") {
    const auto bands = canonical_bands();
    std::vector<double> mean(bands.size(), 0.0);
    double total = 0.0;
    for (std::uint64_t s = 0; s < 100; ++s) {
      const auto x = synth::white_noise(1920, 300 + s);
      for (std::size_t b = 0; b < bands.size(); ++b) mean[b] += bandpower(x, 128.0, bands[b]);
      total += bandpower(x, 128.0, {"all", 2.0, 45.0});
    }
    for (std::size_t b = 0; b < bands.size(); ++b) {
      const double expected = total * (bands[b].high_hz - bands[b].low_hz) / 43.0;
      CHECK(mean[b] == doctest::Approx(expected).epsilon(0.1));
    }
  }

  TEST_CASE("band powers over the tiling add up to the 2-45 Hz power") {
    const auto x = synth::white_noise(1920, 6);
    double sum = 0.0;
    for (const auto& b : canonical_bands()) sum += bandpower(x, 128.0, b);
    CHECK(sum == doctest::Approx(bandpower(x, 128.0, {"all", 2.0, 45.0})).epsilon(1e-6));
  }

  TEST_CASE("invalid bands are rejected") {
    const auto x = synth::white_noise(256, 1);
    for (const BandDefinition& b : {BandDefinition{"rev", 45.0, 2.0}, BandDefinition{"neg", -1.0, 4.0},
                                    BandDefinition{"nyq", 30.0, 70.0}}) {
      try {
        bandpower(x, 128.0, b);
        FAIL("expected an exception");
      } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InvalidBand);
      }
    }
  }
}

TEST_SUITE("spectral entropy") {
  TEST_CASE("pure tone is concentrated") { CHECK(spectral_entropy(synth::sine(1920, 128.0, 10.0), 128.0) <= 0.2); }

  TEST_CASE("white noise is flat") {
    for (std::uint64_t s = 0; s < 10; ++s) CHECK(spectral_entropy(synth::white_noise(1920, s), 128.0) >= 0.9);
  }

  TEST_CASE("zero signal gives 0") { CHECK(spectral_entropy(std::vector<double>(256, 0.0), 128.0) == 0.0); }

  TEST_CASE("fewer than 64 samples is rejected") {
    CHECK_THROWS_AS(spectral_entropy(std::vector<double>(63, 1.0), 128.0), Error);
  }
}

TEST_SUITE("dft features") {
  TEST_CASE("14-channel frame gives 84 values") {
    const auto fv = extract_dft_features(frame_of(synth::noise_matrix(14, 512, 3), synth::emotiv_channels()),
                                         canonical_bands());
    CHECK(fv.values.size() == 84);
    CHECK(fv.columns[0].name == "AF3_delta_power");
    CHECK(fv.columns[5].name == "AF3_spectral_entropy");
    CHECK(fv.columns[6].channel == "F7");
  }

  TEST_CASE("zero frame gives zeros") {
    const auto fv = extract_dft_features(frame_of(Matrix(3, 256), {"a", "b", "c"}), canonical_bands());
    for (double v : fv.values) CHECK(v == 0.0);
  }

  TEST_CASE("channel permutation permutes the output blocks") {
    const Matrix x = synth::noise_matrix(3, 512, 12);
    Matrix y(3, 512);
    const std::size_t perm[3] = {2, 0, 1};
    for (std::size_t c = 0; c < 3; ++c) std::copy(x.row(perm[c]).begin(), x.row(perm[c]).end(), y.row(c).begin());
    const auto bands = canonical_bands();
    const auto a = extract_dft_features(frame_of(x, {"a", "b", "c"}), bands);
    const auto b = extract_dft_features(frame_of(y, {"c", "a", "b"}), bands);
    for (std::size_t c = 0; c < 3; ++c) {
      for (std::size_t i = 0; i < 6; ++i) CHECK(b.values[6 * c + i] == a.values[6 * perm[c] + i]);
    }
  }
}
