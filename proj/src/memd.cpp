#include "memdeeg/memd.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <boost/math/special_functions/erf.hpp>
#include <json.hpp>

#include "memdeeg/csv.hpp"
#include "memdeeg/error.hpp"
#include "memdeeg/spline.hpp"

namespace memdeeg {

namespace {

std::vector<unsigned> first_primes(std::size_t count) {
  std::vector<unsigned> primes;
  for (unsigned c = 2; primes.size() < count; ++c) {
    bool prime = true;
    for (unsigned p : primes) {
      if (p * p > c) break;
      if (c % p == 0) {
        prime = false;
        break;
      }
    }
    if (prime) primes.push_back(c);
  }
  return primes;
}

double radical_inverse(std::uint64_t i, unsigned base) {
  double inv = 1.0 / base;
  double f = inv;
  double r = 0.0;
  while (i > 0) {
    r += f * static_cast<double>(i % base);
    i /= base;
    f *= inv;
  }
  return r;
}

double normal_quantile(double u) { return std::sqrt(2.0) * boost::math::erf_inv(2.0 * u - 1.0); }

}  // namespace

DirectionSet::DirectionSet(Matrix vectors) : vectors_(std::move(vectors)) {
  if (vectors_.rows() == 0 || vectors_.cols() == 0) throw Error(ErrorCode::InvalidArgument, "empty direction set");
}

void SiftConfig::validate() const {
  if (max_imfs < 1) throw Error(ErrorCode::InvalidArgument, "max_imfs must be >= 1");
  if (!(stoppage_tolerance > 0.0)) throw Error(ErrorCode::InvalidArgument, "stoppage_tolerance must be > 0");
  if (!(stoppage_outlier_fraction >= 0.0 && stoppage_outlier_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "stoppage_outlier_fraction must lie in [0, 1)");
  }
  if (max_sift_iters < 1) throw Error(ErrorCode::InvalidArgument, "max_sift_iters must be >= 1");
  if (min_extrema < 1) throw Error(ErrorCode::InvalidArgument, "min_extrema must be >= 1");
  if (num_directions < 1) throw Error(ErrorCode::InvalidArgument, "num_directions must be >= 1");
}

Matrix ImfStack::reconstruct() const {
  Matrix sum = residue;
  for (const auto& imf : imfs) sum += imf;
  return sum;
}

DirectionSet generate_directions(std::size_t n, std::size_t count) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "direction dimension must be >= 1");
  if (count < n) {
    throw Error(ErrorCode::InvalidArgument, "need at least n directions (" + std::to_string(count) + " < " +
                                                std::to_string(n) + ")");
  }
  const std::size_t base_points = (count + 1) / 2;
  const auto primes = first_primes(n > 1 ? n - 1 : 0);

  Matrix base(base_points, n);
  for (std::size_t i = 0; i < base_points; ++i) {
    auto v = base.row(i);
    const double u0 = (static_cast<double>(i) + 0.5) / static_cast<double>(base_points);
    if (n == 1) {
      v[0] = 1.0;
      continue;
    }
    v[0] = normal_quantile(u0);
    for (std::size_t k = 1; k < n; ++k) v[k] = normal_quantile(radical_inverse(i + 1, primes[k - 1]));
    double norm = 0.0;
    for (double c : v) norm += c * c;
    if (norm == 0.0) {
      // Only the centre point of a one-point set in two dimensions lands here.
      v[0] = 1.0;
      continue;
    }
    norm = std::sqrt(norm);
    for (double& c : v) c /= norm;
  }

  // Each base point followed by its antipode; an odd count drops the last antipode.
  Matrix out(count, n);
  for (std::size_t v = 0; v < count; ++v) {
    auto src = base.row(v / 2);
    const double sign = (v % 2 == 0) ? 1.0 : -1.0;
    auto dst = out.row(v);
    for (std::size_t k = 0; k < n; ++k) dst[k] = sign * src[k];
  }
  return DirectionSet(std::move(out));
}

std::vector<double> project(const Matrix& x, std::span<const double> direction) {
  if (direction.size() != x.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "direction has " + std::to_string(direction.size()) +
                                                  " components for " + std::to_string(x.rows()) + " channels");
  }
  std::vector<double> p(x.cols(), 0.0);
  for (std::size_t c = 0; c < x.rows(); ++c) {
    const double d = direction[c];
    auto row = x.row(c);
    for (std::size_t t = 0; t < p.size(); ++t) p[t] += d * row[t];
  }
  return p;
}

std::vector<std::size_t> find_maxima(std::span<const double> p) {
  std::vector<std::size_t> out;
  const std::size_t n = p.size();
  std::size_t i = 1;
  while (i + 1 < n) {
    if (p[i - 1] < p[i]) {
      std::size_t j = i;
      while (j + 1 < n && p[j + 1] == p[i]) ++j;
      if (j + 1 < n && p[j + 1] < p[i]) out.push_back((i + j) / 2);
      i = j + 1;
    } else {
      ++i;
    }
  }
  return out;
}

namespace {

enum class KnotStatus { Ok, TooFewMaxima, NullProjection };

// Relative magnitude below which a projection is treated as identically zero
// (direction orthogonal to the span of the data).
constexpr double kNullProjection = 1e-12;

// Knot times and multichannel knot values for one direction.
KnotStatus envelope_knots(const Matrix& x, std::span<const double> direction, std::size_t min_extrema,
                          double scale, std::vector<double>& knots, Matrix& values) {
  const auto p = project(x, direction);
  double peak = 0.0;
  for (double v : p) peak = std::max(peak, std::abs(v));
  if (peak <= kNullProjection * scale) return KnotStatus::NullProjection;
  const auto maxima = find_maxima(p);
  if (maxima.size() < std::max<std::size_t>(min_extrema, 1)) return KnotStatus::TooFewMaxima;

  const std::size_t n = x.cols();
  const std::size_t mirror = std::min<std::size_t>(2, maxima.size());
  const double last = static_cast<double>(n - 1);
  std::vector<std::size_t> source;
  knots.clear();
  for (std::size_t k = mirror; k-- > 0;) {
    knots.push_back(-static_cast<double>(maxima[k]));
    source.push_back(maxima[k]);
  }
  for (std::size_t m : maxima) {
    knots.push_back(static_cast<double>(m));
    source.push_back(m);
  }
  for (std::size_t k = 0; k < mirror; ++k) {
    const std::size_t m = maxima[maxima.size() - 1 - k];
    knots.push_back(2.0 * last - static_cast<double>(m));
    source.push_back(m);
  }

  values = Matrix(x.rows(), knots.size());
  for (std::size_t c = 0; c < x.rows(); ++c) {
    auto row = x.row(c);
    auto dst = values.row(c);
    for (std::size_t k = 0; k < source.size(); ++k) dst[k] = row[source[k]];
  }
  return KnotStatus::Ok;
}

[[noreturn]] void throw_insufficient(std::size_t v) {
  throw Error(ErrorCode::InsufficientExtrema, "projection " + std::to_string(v) + " has too few maxima");
}

}  // namespace

Matrix direction_envelope(const Matrix& x, std::span<const double> direction, std::size_t min_extrema) {
  std::vector<double> knots;
  Matrix values;
  if (envelope_knots(x, direction, min_extrema, max_abs(x), knots, values) != KnotStatus::Ok) {
    throw_insufficient(0);
  }
  NaturalCubicSpline spline(knots, values);
  Matrix env(x.rows(), x.cols());
  for (std::size_t c = 0; c < x.rows(); ++c) spline.evaluate_grid(c, env.row(c));
  return env;
}

Matrix average_envelopes(std::span<const Matrix> envelopes) {
  if (envelopes.empty()) throw Error(ErrorCode::EmptyInput, "no envelopes to average");
  Matrix mean(envelopes.front().rows(), envelopes.front().cols());
  for (const auto& e : envelopes) mean += e;
  mean *= 1.0 / static_cast<double>(envelopes.size());
  return mean;
}

EnvelopeMean envelope_mean(const Matrix& x, const DirectionSet& dirs, std::size_t min_extrema) {
  if (dirs.dimension() != x.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "direction set dimension differs from channel count");
  }
  const std::size_t channels = x.rows();
  const std::size_t n = x.cols();
  Matrix sum(channels, n);
  std::vector<double> sum_sq(n, 0.0);
  std::vector<double> env_row(n);
  std::vector<double> knots;
  Matrix values;
  const double scale = max_abs(x);
  std::size_t used = 0;

  // Fixed summation order over directions keeps the result reproducible.
  // Null projections carry no envelope information and are left out.
  for (std::size_t v = 0; v < dirs.count(); ++v) {
    const KnotStatus status = envelope_knots(x, dirs[v], min_extrema, scale, knots, values);
    if (status == KnotStatus::NullProjection) continue;
    if (status == KnotStatus::TooFewMaxima) throw_insufficient(v);
    ++used;
    NaturalCubicSpline spline(knots, values);
    for (std::size_t c = 0; c < channels; ++c) {
      spline.evaluate_grid(c, env_row);
      auto acc = sum.row(c);
      for (std::size_t t = 0; t < n; ++t) {
        acc[t] += env_row[t];
        sum_sq[t] += env_row[t] * env_row[t];
      }
    }
  }

  if (used == 0) {
    throw Error(ErrorCode::InsufficientExtrema, "every projection of the block is identically zero");
  }
  EnvelopeMean em;
  const double inv_v = 1.0 / static_cast<double>(used);
  sum *= inv_v;
  em.mean = std::move(sum);
  em.amplitude.assign(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    double mean_sq = 0.0;
    for (std::size_t c = 0; c < channels; ++c) mean_sq += em.mean(c, t) * em.mean(c, t);
    em.amplitude[t] = std::sqrt(std::max(0.0, sum_sq[t] * inv_v - mean_sq));
  }
  return em;
}

bool sifting_converged(const EnvelopeMean& em, double tolerance, double outlier_fraction) {
  const std::size_t n = em.amplitude.size();
  if (n == 0) return true;
  std::size_t over = 0;
  for (std::size_t t = 0; t < n; ++t) {
    double norm_sq = 0.0;
    for (std::size_t c = 0; c < em.mean.rows(); ++c) norm_sq += em.mean(c, t) * em.mean(c, t);
    const double norm = std::sqrt(norm_sq);
    const double amp = em.amplitude[t];
    const bool exceeds = amp > 0.0 ? norm / amp > tolerance : norm > 0.0;
    if (exceeds) ++over;
  }
  return static_cast<double>(over) <= outlier_fraction * static_cast<double>(n);
}

SiftResult sift(const Matrix& x, const DirectionSet& dirs, const SiftConfig& cfg) {
  SiftResult result;
  Matrix d = x;
  for (std::size_t iter = 1; iter <= cfg.max_sift_iters; ++iter) {
    EnvelopeMean em;
    try {
      em = envelope_mean(d, dirs, cfg.min_extrema);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::InsufficientExtrema || iter == 1) throw;
      break;
    }
    result.iterations = iter;
    if (sifting_converged(em, cfg.stoppage_tolerance, cfg.stoppage_outlier_fraction)) break;
    d -= em.mean;
  }
  result.remainder = x - d;
  result.imf = std::move(d);
  return result;
}

ImfStack decompose(const Matrix& x, const SiftConfig& cfg) {
  cfg.validate();
  if (x.rows() == 0) throw Error(ErrorCode::InvalidArgument, "no channels");
  if (x.cols() < 16) throw Error(ErrorCode::InputTooShort, "decomposition needs at least 16 samples");
  for (double v : x.values()) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "input contains non-finite samples");
  }
  const DirectionSet dirs = generate_directions(x.rows(), cfg.num_directions);

  ImfStack stack;
  stack.config = cfg;
  Matrix remainder = x;
  while (stack.imfs.size() < cfg.max_imfs) {
    SiftResult sr;
    try {
      sr = sift(remainder, dirs, cfg);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::InsufficientExtrema) throw;
      break;
    }
    remainder -= sr.imf;
    stack.imfs.push_back(std::move(sr.imf));
  }
  stack.extracted = stack.imfs.size();
  if (cfg.pad_to_max_imfs) {
    while (stack.imfs.size() < cfg.max_imfs) stack.imfs.emplace_back(x.rows(), x.cols(), 0.0);
  }
  stack.residue = std::move(remainder);
  return stack;
}

namespace {

void write_block(const Matrix& block, std::span<const std::string> labels, const std::filesystem::path& path) {
  auto os = csv::open_for_write(path);
  csv::write_row(os, labels);
  std::vector<std::string> cells(block.rows());
  for (std::size_t t = 0; t < block.cols(); ++t) {
    for (std::size_t c = 0; c < block.rows(); ++c) cells[c] = csv::format_double(block(c, t));
    csv::write_row(os, cells);
  }
}

Matrix read_block(const std::filesystem::path& path) {
  auto table = csv::read_numeric(path);
  Matrix out(table.rows.cols(), table.rows.rows());
  for (std::size_t t = 0; t < table.rows.rows(); ++t) {
    for (std::size_t c = 0; c < table.rows.cols(); ++c) out(c, t) = table.rows(t, c);
  }
  return out;
}

std::string imf_file_name(std::size_t j) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "imf_%02zu.csv", j);
  return buf;
}

}  // namespace

void save_imf_stack(const ImfStack& stack, std::span<const std::string> channel_labels,
                    const std::filesystem::path& dir) {
  if (channel_labels.size() != stack.channel_count()) {
    throw Error(ErrorCode::ChannelMismatch, "channel labels do not match the stack");
  }
  std::filesystem::create_directories(dir);
  for (std::size_t j = 0; j < stack.imfs.size(); ++j) write_block(stack.imfs[j], channel_labels, dir / imf_file_name(j + 1));
  write_block(stack.residue, channel_labels, dir / "residue.csv");

  const auto& c = stack.config;
  nlohmann::ordered_json meta;
  meta["channels"] = std::vector<std::string>(channel_labels.begin(), channel_labels.end());
  meta["imf_count"] = stack.imfs.size();
  meta["extracted"] = stack.extracted;
  meta["samples"] = stack.sample_count();
  meta["config"] = {{"max_imfs", c.max_imfs},
                    {"num_directions", c.num_directions},
                    {"max_sift_iters", c.max_sift_iters},
                    {"stoppage_tolerance", c.stoppage_tolerance},
                    {"stoppage_outlier_fraction", c.stoppage_outlier_fraction},
                    {"min_extrema", c.min_extrema},
                    {"pad_to_max_imfs", c.pad_to_max_imfs}};
  auto os = csv::open_for_write(dir / "meta.json");
  os << meta.dump(2) << '\n';
}

ImfStack load_imf_stack(const std::filesystem::path& dir) {
  ImfStack stack;
  try {
    const auto meta = nlohmann::json::parse(csv::read_file(dir / "meta.json"));
    const auto& c = meta.at("config");
    stack.config.max_imfs = c.at("max_imfs").get<std::size_t>();
    stack.config.num_directions = c.at("num_directions").get<std::size_t>();
    stack.config.max_sift_iters = c.at("max_sift_iters").get<std::size_t>();
    stack.config.stoppage_tolerance = c.at("stoppage_tolerance").get<double>();
    stack.config.stoppage_outlier_fraction = c.at("stoppage_outlier_fraction").get<double>();
    stack.config.min_extrema = c.at("min_extrema").get<std::size_t>();
    stack.config.pad_to_max_imfs = c.at("pad_to_max_imfs").get<bool>();
    stack.extracted = meta.at("extracted").get<std::size_t>();
    const auto count = meta.at("imf_count").get<std::size_t>();
    for (std::size_t j = 0; j < count; ++j) stack.imfs.push_back(read_block(dir / imf_file_name(j + 1)));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedFile, std::string("imf stack metadata: ") + e.what());
  }
  stack.residue = read_block(dir / "residue.csv");
  return stack;
}

}  // namespace memdeeg
