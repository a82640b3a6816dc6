#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "memdeeg/error.hpp"
#include "memdeeg/memd.hpp"
#include "memdeeg/nonlinear_features.hpp"
#include "memdeeg/rng.hpp"
#include "synthetic.hpp"

using namespace memdeeg;

namespace {

// Textbook Higuchi: L_m(k) = (sum |x[m+ik] - x[m+(i-1)k]|) (N-1) / (floor((N-m)/k) k) / k
// with 1-based m; FD = slope of ln<L(k)> against ln(1/k).
double reference_higuchi(const std::vector<double>& x, int kmax) {
  const int n = static_cast<int>(x.size());
  std::vector<double> lx, ly;
  for (int k = 1; k <= kmax; ++k) {
    double sum = 0.0;
    for (int m = 1; m <= k; ++m) {
      const int steps = (n - m) / k;
      double len = 0.0;
      for (int i = 1; i <= steps; ++i) len += std::abs(x[m - 1 + i * k] - x[m - 1 + (i - 1) * k]);
      sum += len * (n - 1) / (double(steps) * k) / k;
    }
    lx.push_back(std::log(1.0 / k));
    ly.push_back(std::log(sum / k));
  }
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= double(lx.size());
  my /= double(ly.size());
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  return sxy / sxx;
}

double pop_variance(std::span<const double> x) {
  double m = 0;
  for (double v : x) m += v;
  m /= double(x.size());
  double s = 0;
  for (double v : x) s += (v - m) * (v - m);
  return s / double(x.size());
}

ImfStack stack_from(std::vector<Matrix> imfs) {
  ImfStack s;
  s.residue = Matrix(imfs.front().rows(), imfs.front().cols());
  s.extracted = imfs.size();
  s.imfs = std::move(imfs);
  return s;
}

}  // namespace

TEST_SUITE("hjorth") {
  TEST_CASE("constant series gives zeros") {
    const std::vector<double> x(50, 4.0);
    const auto h = hjorth(x);
    CHECK(h.activity == 0.0);
    CHECK(h.mobility == 0.0);
    CHECK(h.complexity == 0.0);
  }

  TEST_CASE("sinusoid matches the closed form within 1%") {
    const auto x = synth::sine(1920, 128.0, 8.0, 2.0);
    const auto h = hjorth(x);
    CHECK(h.activity == doctest::Approx(2.0).epsilon(0.01));
    CHECK(h.mobility == doctest::Approx(2.0 * std::numbers::pi * 8.0 / 128.0).epsilon(0.01));
  }

  TEST_CASE("white noise has complexity above 1 for 100 seeds") {
    for (std::uint64_t s = 0; s < 100; ++s) CHECK(hjorth(synth::white_noise(1920, s)).complexity > 1.0);
  }

  TEST_CASE("activity equals population variance exactly") {
    const auto x = synth::white_noise(777, 3, 2.5);
    CHECK(hjorth(x).activity == doctest::Approx(pop_variance(x)).epsilon(1e-14));
  }
}

TEST_SUITE("coefficient of variation") {
  TEST_CASE("constant 5 gives 0") { CHECK(coeff_variation(std::vector<double>(10, 5.0)) == 0.0); }

  TEST_CASE("[1, 3] gives 0.5") { CHECK(coeff_variation(std::vector<double>{1.0, 3.0}) == doctest::Approx(0.5)); }

  TEST_CASE("zero-mean sine uses the epsilon floor") {
    const auto x = synth::sine(128, 128.0, 4.0);
    const double cv = coeff_variation(x);
    CHECK(std::isfinite(cv));
    CHECK(cv > 1e9);
  }
}

TEST_SUITE("fluctuation index") {
  TEST_CASE("constant gives 0") { CHECK(fluctuation_index(std::vector<double>(9, 1.5)) == 0.0); }

  TEST_CASE("alternating +-1 gives 2") {
    std::vector<double> x(20);
    for (std::size_t i = 0; i < 20; ++i) x[i] = i % 2 ? -1.0 : 1.0;
    CHECK(fluctuation_index(x) == doctest::Approx(2.0));
  }

  TEST_CASE("sine A=1, f=4, fs=128 gives about 4 A f / fs") {
    CHECK(fluctuation_index(synth::sine(1920, 128.0, 4.0)) == doctest::Approx(0.125).epsilon(0.03));
  }
}

TEST_SUITE("higuchi") {
  TEST_CASE("straight line lies in [1.0, 1.05]") {
    std::vector<double> x(1920);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = double(i);
    const double fd = higuchi_fd(x, 10);
    CHECK(fd >= 1.0 - 1e-12);
    CHECK(fd <= 1.05);
  }

  TEST_CASE("white noise averages 2.0 +- 0.1 over 100 seeds") {
    double sum = 0.0;
    for (std::uint64_t s = 0; s < 100; ++s) sum += higuchi_fd(synth::white_noise(1920, 1000 + s), 10);
    CHECK(sum / 100.0 == doctest::Approx(2.0).epsilon(0.05));
  }

  TEST_CASE("pure sinusoid lies in [1.0, 1.3] and matches the reference") {
    const auto x = synth::sine(1920, 128.0, 5.0);
    const double fd = higuchi_fd(x, 10);
    CHECK(fd >= 1.0);
    CHECK(fd <= 1.3);
    CHECK(fd == doctest::Approx(reference_higuchi(x, 10)).epsilon(1e-12));
  }

  TEST_CASE("agrees with the reference on noise and mixtures") {
    for (std::uint64_t s = 0; s < 5; ++s) {
      auto x = synth::white_noise(500, s);
      const auto t = synth::sine(500, 128.0, 3.0, 4.0);
      for (std::size_t i = 0; i < x.size(); ++i) x[i] += t[i];
      for (int k : {2, 5, 10}) CHECK(higuchi_fd(x, k) == doctest::Approx(reference_higuchi(x, k)).epsilon(1e-12));
    }
  }

  TEST_CASE("too short or bad k_max is rejected") {
    CHECK_THROWS_AS(higuchi_fd(synth::white_noise(99, 1), 10), Error);
    CHECK_THROWS_AS(higuchi_fd(synth::white_noise(500, 1), 1), Error);
  }

  TEST_CASE("flat series returns 1") { CHECK(higuchi_fd(std::vector<double>(200, 3.0), 10) == 1.0); }
}

TEST_SUITE("moments") {
  TEST_CASE("symmetric series has zero skewness") {
    CHECK(moments(std::vector<double>{-1.0, 0.0, 1.0}).skewness == doctest::Approx(0.0));
  }

  TEST_CASE("gaussian sample has kurtosis 3 +- 0.1") {
    CHECK(moments(synth::white_noise(100000, 99)).kurtosis == doctest::Approx(3.0).epsilon(0.1 / 3.0));
  }

  TEST_CASE("constant series gives (0, 0)") {
    const auto m = moments(std::vector<double>(10, 2.0));
    CHECK(m.skewness == 0.0);
    CHECK(m.kurtosis == 0.0);
  }

  TEST_CASE("hand-computed skewed sample") {
    // {0, 0, 0, 4}: mean 1, m2 = 3, m3 = 6, m4 = 21.
    const auto m = moments(std::vector<double>{0, 0, 0, 4});
    CHECK(m.skewness == doctest::Approx(6.0 / std::pow(3.0, 1.5)));
    CHECK(m.kurtosis == doctest::Approx(21.0 / 9.0));
  }
}

TEST_SUITE("entropy") {
  TEST_CASE("uniform 16-bin filler gives ln 16") {
    std::vector<double> x;
    for (int rep = 0; rep < 10; ++rep) {
      for (int b = 0; b < 16; ++b) x.push_back(double(b) + 0.5);
    }
    x.push_back(0.0);
    x.push_back(16.0);
    // The two extremes fall in the first and last bins; fill the rest to match.
    for (int b = 1; b < 15; ++b) x.push_back(double(b) + 0.5);
    CHECK(std::abs(shannon_entropy(x, 16) - std::log(16.0)) <= 1e-9);
  }

  TEST_CASE("constant series gives 0") { CHECK(shannon_entropy(std::vector<double>(40, 1.0), 16) == 0.0); }

  TEST_CASE("gaussian has lower entropy than uniform") {
    memdeeg::Rng rng(5);
    std::vector<double> u(5000);
    for (double& v : u) v = rng.uniform();
    CHECK(shannon_entropy(synth::white_noise(5000, 5), 16) < shannon_entropy(u, 16));
  }

  TEST_CASE("entropy lies in [0, ln bins]") {
    for (std::uint64_t s = 0; s < 20; ++s) {
      const double h = shannon_entropy(synth::white_noise(300, s), 16);
      CHECK(h >= 0.0);
      CHECK(h <= std::log(16.0) + 1e-12);
    }
  }

  TEST_CASE("log energy entropy cases") {
    CHECK(std::abs(log_energy_entropy(std::vector<double>(100, 1.0))) < 1e-9);
    const double e = std::numbers::e;
    CHECK(log_energy_entropy(std::vector<double>{e, e}) == doctest::Approx(4.0).epsilon(1e-9));
    const double z = log_energy_entropy(std::vector<double>(10, 0.0));
    CHECK(std::isfinite(z));
    CHECK(z == doctest::Approx(10.0 * std::log(kFeatureEpsilon)));
  }
}

TEST_SUITE("memd feature set") {
  TEST_CASE("single nonzero selected IMF has normalized energy 1") {
    Matrix a(2, 200);
    const auto s = synth::sine(200, 128.0, 10.0);
    std::copy(s.begin(), s.end(), a.row(0).begin());
    std::copy(s.begin(), s.end(), a.row(1).begin());
    const auto stack = stack_from({a, Matrix(2, 200)});
    const std::vector<std::size_t> sel{1, 2};
    const auto f = extract_memd_features(stack, sel);
    CHECK(f.at(0, 0, ImfFeature::NormalizedEnergy) == 1.0);
    CHECK(f.at(1, 1, ImfFeature::NormalizedEnergy) == 0.0);
  }

  TEST_CASE("14 channels x IMFs 1..5 gives 826 values with the documented names") {
    SiftConfig cfg;
    cfg.num_directions = 16;
    cfg.max_imfs = 6;
    const auto stack = decompose(synth::noise_matrix(14, 400, 8), cfg);
    const std::vector<std::size_t> sel{1, 2, 3, 4, 5};
    const auto labels = synth::emotiv_channels();
    const auto fv = extract_memd_features(stack, sel, labels).flatten();
    CHECK(fv.values.size() == 826);
    CHECK(fv.columns.size() == 826);
    CHECK(fv.columns[0].name == "AF3_imf1_activity");
    CHECK(fv.columns[10].name == "AF3_imf1_normalized_energy");
    CHECK(fv.columns[55].name == "AF3_imf1-2_fluctuation_index");
    CHECK(fv.columns[59].name == "F7_imf1_activity");
    CHECK(fv.columns[59].channel == "F7");
    CHECK(fv.columns[59].imf == 1);
  }

  TEST_CASE("scaling every IMF by 2 leaves scale-free features unchanged") {
    SiftConfig cfg;
    cfg.num_directions = 16;
    const auto stack = decompose(synth::noise_matrix(3, 512, 19), cfg);
    ImfStack scaled = stack;
    for (auto& m : scaled.imfs) m *= 2.0;
    const std::vector<std::size_t> sel{1, 2, 3, 4, 5};
    const auto a = extract_memd_features(stack, sel);
    const auto b = extract_memd_features(scaled, sel);
    for (std::size_t c = 0; c < 3; ++c) {
      for (std::size_t p = 0; p < sel.size(); ++p) {
        for (auto f : {ImfFeature::NormalizedEnergy, ImfFeature::Skewness, ImfFeature::Kurtosis,
                       ImfFeature::HiguchiFd, ImfFeature::Mobility, ImfFeature::Complexity}) {
          CHECK(std::abs(a.at(c, p, f) - b.at(c, p, f)) <= 1e-9);
        }
      }
    }
  }

  TEST_CASE("invariants on a decomposed frame") {
    SiftConfig cfg;
    cfg.num_directions = 32;
    const auto stack = decompose(synth::noise_matrix(4, 1920, 44), cfg);
    std::vector<std::size_t> sel;
    for (std::size_t j = 1; j <= stack.extracted; ++j) sel.push_back(j);
    const auto f = extract_memd_features(stack, sel);
    for (std::size_t c = 0; c < 4; ++c) {
      double sum = 0.0;
      for (std::size_t p = 0; p < sel.size(); ++p) {
        CHECK(f.at(c, p, ImfFeature::Activity) >= 0.0);
        CHECK(f.at(c, p, ImfFeature::StdDev) >= 0.0);
        const double ne = f.at(c, p, ImfFeature::NormalizedEnergy);
        CHECK(ne >= 0.0);
        CHECK(ne <= 1.0);
        sum += ne;
        const double fd = f.at(c, p, ImfFeature::HiguchiFd);
        CHECK(fd >= 0.9);
        CHECK(fd <= 2.1);
        for (double v : f.cells[c][p]) CHECK(std::isfinite(v));
      }
      CHECK(std::abs(sum - 1.0) <= 1e-9);
    }
  }

  TEST_CASE("all-zero IMFs give finite features") {
    const auto stack = stack_from({Matrix(2, 128), Matrix(2, 128)});
    const std::vector<std::size_t> sel{1, 2};
    for (double v : extract_memd_features(stack, sel).flatten().values) CHECK(std::isfinite(v));
  }

  TEST_CASE("fluctuation pair feature is |F_i - F_(i+1)|") {
    Matrix a(1, 128), b(1, 128);
    for (std::size_t i = 0; i < 128; ++i) {
      a(0, i) = i % 2 ? -1.0 : 1.0;
      b(0, i) = 0.25 * double(i);
    }
    const std::vector<std::size_t> sel{1, 2};
    const auto f = extract_memd_features(stack_from({a, b}), sel);
    CHECK(f.fluctuation[0][0] == doctest::Approx(2.0 - 0.25));
  }

  TEST_CASE("empty or out-of-range selection is rejected") {
    const auto stack = stack_from({Matrix(1, 128)});
    try {
      extract_memd_features(stack, std::vector<std::size_t>{});
      FAIL("expected an exception");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::EmptySelection);
    }
    CHECK_THROWS_AS(extract_memd_features(stack, std::vector<std::size_t>{2}), Error);
  }

  TEST_CASE("identical input gives identical vectors") {
    SiftConfig cfg;
    cfg.num_directions = 16;
    const auto stack = decompose(synth::noise_matrix(2, 300, 1), cfg);
    const std::vector<std::size_t> sel{1, 2, 3};
    CHECK(extract_memd_features(stack, sel).flatten().values == extract_memd_features(stack, sel).flatten().values);
  }
}
