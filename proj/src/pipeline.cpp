#include "memdeeg/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>

#include <json.hpp>

#include "memdeeg/csv.hpp"
#include "memdeeg/error.hpp"
#include "memdeeg/parallel.hpp"
#include "memdeeg/rng.hpp"
#include "memdeeg/spectral_features.hpp"

namespace memdeeg {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

std::string_view to_string(FeatureMode mode) noexcept {
  switch (mode) {
    case FeatureMode::Memd: return "memd";
    case FeatureMode::Dwt: return "dwt";
    case FeatureMode::Dft: return "dft";
    case FeatureMode::MemdDwt: return "memd-dwt";
  }
  return "memd";
}

FeatureMode parse_feature_mode(std::string_view text) {
  std::string s(text);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return c == '_' ? '-' : std::tolower(c); });
  if (s == "memd") return FeatureMode::Memd;
  if (s == "dwt") return FeatureMode::Dwt;
  if (s == "dft") return FeatureMode::Dft;
  if (s == "memd-dwt") return FeatureMode::MemdDwt;
  throw Error(ErrorCode::InvalidArgument, "unknown feature mode '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------
// Configuration

void ExperimentConfig::validate() const {
  if (!(frame_s > 0.0) || !(overlap_s >= 0.0) || !(overlap_s < frame_s)) {
    throw Error(ErrorCode::InvalidArgument, "segmentation requires 0 <= overlap_s < frame_s");
  }
  if (bandpass && (!(band_low_hz > 0.0) || !(band_high_hz > band_low_hz))) {
    throw Error(ErrorCode::InvalidBand, "bandpass requires 0 < low_hz < high_hz");
  }
  sift.validate();
  if (selected_imfs.empty()) throw Error(ErrorCode::EmptySelection, "selected_imfs is empty");
  for (std::size_t j : selected_imfs) {
    if (j < 1 || j > sift.max_imfs) {
      throw Error(ErrorCode::InvalidArgument, "selected IMF " + std::to_string(j) + " outside 1..max_imfs");
    }
  }
  if (cv.folds < 2) throw Error(ErrorCode::InvalidArgument, "cv.folds must be >= 2");
  if (cv.repeats < 1) throw Error(ErrorCode::InvalidArgument, "cv.repeats must be >= 1");
  if (boost.rounds < 1) throw Error(ErrorCode::InvalidArgument, "boost.rounds must be >= 1");
  if (boost.forest.trees < 1) throw Error(ErrorCode::InvalidArgument, "forest.trees must be >= 1");
  if (features.higuchi_kmax < 2) throw Error(ErrorCode::InvalidArgument, "higuchi_kmax must be >= 2");
  if (features.entropy_bins < 1) throw Error(ErrorCode::InvalidArgument, "entropy_bins must be >= 1");
}

std::string ExperimentConfig::to_json() const {
  ojson j;
  j["feature_mode"] = std::string(to_string(feature_mode));
  j["segmentation"] = {{"frame_s", frame_s}, {"overlap_s", overlap_s}};
  j["bandpass"] = {{"enabled", bandpass}, {"low_hz", band_low_hz}, {"high_hz", band_high_hz}};
  j["sift"] = {{"max_imfs", sift.max_imfs},
               {"num_directions", sift.num_directions},
               {"max_sift_iters", sift.max_sift_iters},
               {"stoppage_tolerance", sift.stoppage_tolerance},
               {"stoppage_outlier_fraction", sift.stoppage_outlier_fraction},
               {"min_extrema", sift.min_extrema},
               {"pad_to_max_imfs", sift.pad_to_max_imfs}};
  j["selected_imfs"] = selected_imfs;
  j["selected_features"] = selected_features;
  j["features"] = {{"higuchi_kmax", features.higuchi_kmax}, {"entropy_bins", features.entropy_bins}};
  j["cv"] = {{"folds", cv.folds}, {"repeats", cv.repeats}, {"seed", cv.seed}};
  j["regions"] = regions;
  j["boost"] = {{"rounds", boost.rounds},
                {"forest",
                 {{"trees", boost.forest.trees},
                  {"features_per_split", boost.forest.features_per_split},
                  {"max_depth", boost.forest.max_depth},
                  {"min_samples_leaf", boost.forest.min_samples_leaf},
                  {"bootstrap", boost.forest.bootstrap}}}};
  j["selection"] = {{"imf_top_k", imf_top_k}, {"feature_top_m", feature_top_m}};
  return j.dump(2) + "\n";
}

namespace {

void reject_unknown_keys(const nlohmann::json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) throw Error(ErrorCode::MalformedFile, "config: '" + where + "' must be an object");
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw Error(ErrorCode::MalformedFile, "config: unknown key '" + where + key + "'");
  }
}

template <typename T>
void read_opt(const nlohmann::json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(std::string_view text) {
  ExperimentConfig cfg;
  try {
    const auto j = nlohmann::json::parse(text);
    reject_unknown_keys(j,
                        {"feature_mode", "segmentation", "bandpass", "sift", "selected_imfs", "selected_features",
                         "features", "cv", "regions", "boost", "selection"},
                        "");
    if (j.contains("feature_mode")) cfg.feature_mode = parse_feature_mode(j.at("feature_mode").get<std::string>());
    if (j.contains("segmentation")) {
      const auto& s = j.at("segmentation");
      reject_unknown_keys(s, {"frame_s", "overlap_s"}, "segmentation.");
      read_opt(s, "frame_s", cfg.frame_s);
      read_opt(s, "overlap_s", cfg.overlap_s);
    }
    if (j.contains("bandpass")) {
      const auto& b = j.at("bandpass");
      reject_unknown_keys(b, {"enabled", "low_hz", "high_hz"}, "bandpass.");
      read_opt(b, "enabled", cfg.bandpass);
      read_opt(b, "low_hz", cfg.band_low_hz);
      read_opt(b, "high_hz", cfg.band_high_hz);
    }
    if (j.contains("sift")) {
      const auto& s = j.at("sift");
      reject_unknown_keys(s,
                          {"max_imfs", "num_directions", "max_sift_iters", "stoppage_tolerance",
                           "stoppage_outlier_fraction", "min_extrema", "pad_to_max_imfs"},
                          "sift.");
      read_opt(s, "max_imfs", cfg.sift.max_imfs);
      read_opt(s, "num_directions", cfg.sift.num_directions);
      read_opt(s, "max_sift_iters", cfg.sift.max_sift_iters);
      read_opt(s, "stoppage_tolerance", cfg.sift.stoppage_tolerance);
      read_opt(s, "stoppage_outlier_fraction", cfg.sift.stoppage_outlier_fraction);
      read_opt(s, "min_extrema", cfg.sift.min_extrema);
      read_opt(s, "pad_to_max_imfs", cfg.sift.pad_to_max_imfs);
    }
    read_opt(j, "selected_imfs", cfg.selected_imfs);
    read_opt(j, "selected_features", cfg.selected_features);
    if (j.contains("features")) {
      const auto& f = j.at("features");
      reject_unknown_keys(f, {"higuchi_kmax", "entropy_bins"}, "features.");
      read_opt(f, "higuchi_kmax", cfg.features.higuchi_kmax);
      read_opt(f, "entropy_bins", cfg.features.entropy_bins);
    }
    if (j.contains("cv")) {
      const auto& c = j.at("cv");
      reject_unknown_keys(c, {"folds", "repeats", "seed"}, "cv.");
      read_opt(c, "folds", cfg.cv.folds);
      read_opt(c, "repeats", cfg.cv.repeats);
      read_opt(c, "seed", cfg.cv.seed);
    }
    read_opt(j, "regions", cfg.regions);
    if (j.contains("boost")) {
      const auto& b = j.at("boost");
      reject_unknown_keys(b, {"rounds", "forest"}, "boost.");
      read_opt(b, "rounds", cfg.boost.rounds);
      if (b.contains("forest")) {
        const auto& f = b.at("forest");
        reject_unknown_keys(f, {"trees", "features_per_split", "max_depth", "min_samples_leaf", "bootstrap"},
                            "boost.forest.");
        read_opt(f, "trees", cfg.boost.forest.trees);
        read_opt(f, "features_per_split", cfg.boost.forest.features_per_split);
        read_opt(f, "max_depth", cfg.boost.forest.max_depth);
        read_opt(f, "min_samples_leaf", cfg.boost.forest.min_samples_leaf);
        read_opt(f, "bootstrap", cfg.boost.forest.bootstrap);
      }
    }
    if (j.contains("selection")) {
      const auto& s = j.at("selection");
      reject_unknown_keys(s, {"imf_top_k", "feature_top_m"}, "selection.");
      read_opt(s, "imf_top_k", cfg.imf_top_k);
      read_opt(s, "feature_top_m", cfg.feature_top_m);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedFile, std::string("config: ") + e.what());
  }
  cfg.boost.seed = cfg.cv.seed;
  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) { return from_json(csv::read_file(path)); }

// ---------------------------------------------------------------------------
// Dataset assembly

namespace {

FeatureVector memd_block(const MultichannelFrame& frame, const ExperimentConfig& cfg,
                         std::span<const std::size_t> selected) {
  const ImfStack stack = decompose(frame.samples, cfg.sift);
  return extract_memd_features(stack, selected, frame.channel_labels, cfg.features).flatten();
}

FeatureVector keep_selected_features(const FeatureVector& fv, std::span<const std::string> names) {
  if (names.empty()) return fv;
  FeatureVector out;
  std::vector<bool> matched(names.size(), false);
  for (std::size_t c = 0; c < fv.columns.size(); ++c) {
    bool keep = false;
    for (std::size_t n = 0; n < names.size(); ++n) {
      if (fv.columns[c].name == names[n] || fv.columns[c].kind == names[n]) {
        keep = true;
        matched[n] = true;
      }
    }
    if (keep) {
      out.columns.push_back(fv.columns[c]);
      out.values.push_back(fv.values[c]);
    }
  }
  for (std::size_t n = 0; n < names.size(); ++n) {
    if (!matched[n]) throw Error(ErrorCode::UnknownFeature, "no MEMD feature named '" + names[n] + "'");
  }
  return out;
}

std::vector<MultichannelFrame> prepare_frames(const MultichannelRecording& rec, const ExperimentConfig& cfg) {
  if (cfg.bandpass) return segment(bandpass_filter(rec, cfg.band_low_hz, cfg.band_high_hz), cfg.frame_s, cfg.overlap_s);
  return segment(rec, cfg.frame_s, cfg.overlap_s);
}

void append_samples(Dataset& data, std::vector<FeatureVector>& vectors, const std::vector<MultichannelFrame>& frames,
                    const MultichannelRecording& rec) {
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (data.columns.empty() && data.samples.empty()) {
      data.columns = vectors[i].columns;
    } else if (vectors[i].columns != data.columns) {
      throw Error(ErrorCode::ChannelMismatch, "recording " + rec.trial_id() + " yields a different feature layout");
    }
    data.samples.push_back({std::move(vectors[i].values), frames[i].label, rec.trial_id(), rec.provenance().subject,
                            rec.provenance().session});
  }
}

}  // namespace

FeatureVector frame_features(const MultichannelFrame& frame, const ExperimentConfig& cfg) {
  switch (cfg.feature_mode) {
    case FeatureMode::Memd:
      return keep_selected_features(memd_block(frame, cfg, cfg.selected_imfs), cfg.selected_features);
    case FeatureMode::Dwt:
      return extract_dwt_features(frame);
    case FeatureMode::Dft: {
      const auto bands = canonical_bands();
      return extract_dft_features(frame, bands);
    }
    case FeatureMode::MemdDwt: {
      FeatureVector fv = keep_selected_features(memd_block(frame, cfg, cfg.selected_imfs), cfg.selected_features);
      fv.append(extract_dwt_features(frame));
      return fv;
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unhandled feature mode");
}

Dataset build_dataset(std::span<const MultichannelRecording> recordings, const ExperimentConfig& cfg) {
  cfg.validate();
  Dataset data;
  std::map<std::string, std::string> region_of;
  for (const auto& rec : recordings) {
    const auto frames = prepare_frames(rec, cfg);
    std::vector<FeatureVector> vectors(frames.size());
    parallel_for(frames.size(), [&](std::size_t i) { vectors[i] = frame_features(frames[i], cfg); });
    append_samples(data, vectors, frames, rec);
    region_of.insert(rec.region_map().begin(), rec.region_map().end());
  }
  if (cfg.regions.empty() || data.columns.empty()) return data;

  std::set<std::string> known;
  for (const auto& [channel, region] : region_of) known.insert(region);
  for (const auto& r : cfg.regions) {
    if (!known.count(r)) throw Error(ErrorCode::UnknownRegion, "no channel belongs to region '" + r + "'");
  }
  const std::set<std::string> wanted(cfg.regions.begin(), cfg.regions.end());
  return select_columns_if(data, [&](const FeatureColumn& c) {
    auto it = region_of.find(c.channel);
    return it != region_of.end() && wanted.count(it->second);
  });
}

ImfDataset build_imf_dataset(std::span<const MultichannelRecording> recordings, const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentConfig local = cfg;
  local.sift.pad_to_max_imfs = true;
  std::vector<std::size_t> all(local.sift.max_imfs);
  std::iota(all.begin(), all.end(), std::size_t{1});

  ImfDataset out;
  out.correlations.assign(local.sift.max_imfs, 0.0);
  std::size_t frame_count = 0;
  for (const auto& rec : recordings) {
    const auto frames = prepare_frames(rec, local);
    std::vector<FeatureVector> vectors(frames.size());
    std::vector<std::vector<double>> corr(frames.size());
    parallel_for(frames.size(), [&](std::size_t i) {
      const ImfStack stack = decompose(frames[i].samples, local.sift);
      corr[i] = mean_abs_correlation(stack, frames[i].samples);
      vectors[i] = extract_memd_features(stack, all, frames[i].channel_labels, local.features).flatten();
    });
    append_samples(out.data, vectors, frames, rec);
    for (const auto& c : corr) {
      for (std::size_t j = 0; j < c.size(); ++j) out.correlations[j] += c[j];
    }
    frame_count += frames.size();
  }
  if (frame_count > 0) {
    for (double& c : out.correlations) c /= static_cast<double>(frame_count);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Standardisation and cross-validation

Standardizer Standardizer::fit(const Matrix& x) {
  std::vector<double> means(x.cols(), 0.0), scales(x.cols(), 1.0);
  if (x.rows() == 0) return {means, scales};
  const double n = static_cast<double>(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) means[c] += x(r, c);
  }
  for (double& m : means) m /= n;
  std::vector<double> var(x.cols(), 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) var[c] += (x(r, c) - means[c]) * (x(r, c) - means[c]);
  }
  for (std::size_t c = 0; c < x.cols(); ++c) {
    const double sd = std::sqrt(var[c] / n);
    scales[c] = sd > 0.0 ? sd : 1.0;
  }
  return {means, scales};
}

void Standardizer::transform_row(std::span<double> row) const {
  if (row.size() != means_.size()) throw Error(ErrorCode::DimensionMismatch, "standardizer dimension mismatch");
  for (std::size_t c = 0; c < row.size(); ++c) row[c] = (row[c] - means_[c]) / scales_[c];
}

Matrix Standardizer::transform(const Matrix& x) const {
  Matrix out = x;
  for (std::size_t r = 0; r < out.rows(); ++r) transform_row(out.row(r));
  return out;
}

std::vector<std::vector<std::string>> trial_folds(std::vector<std::string> trial_ids, std::size_t folds,
                                                  std::uint64_t seed, std::size_t repeat) {
  if (folds < 2) throw Error(ErrorCode::InvalidArgument, "need at least two folds");
  std::sort(trial_ids.begin(), trial_ids.end());
  trial_ids.erase(std::unique(trial_ids.begin(), trial_ids.end()), trial_ids.end());
  if (trial_ids.size() < folds) {
    throw Error(ErrorCode::TooFewTrials, std::to_string(trial_ids.size()) + " trials for " + std::to_string(folds) +
                                             " folds");
  }
  Rng rng(derive_seed(seed, {0x6366u, repeat}));
  rng.shuffle(trial_ids.begin(), trial_ids.end());
  std::vector<std::vector<std::string>> out(folds);
  const std::size_t t = trial_ids.size();
  for (std::size_t f = 0; f < folds; ++f) {
    for (std::size_t i = f * t / folds; i < (f + 1) * t / folds; ++i) out[f].push_back(trial_ids[i]);
  }
  return out;
}

CvReport cross_validate(const Dataset& data, const ExperimentConfig& cfg) {
  cfg.validate();
  if (data.empty()) throw Error(ErrorCode::EmptyInput, "cross-validation on an empty dataset");
  if (data.dimension() == 0) throw Error(ErrorCode::EmptySelection, "dataset has no feature columns");
  const std::vector<int> y = data.signs();
  if (std::find(y.begin(), y.end(), -1) == y.end() || std::find(y.begin(), y.end(), 1) == y.end()) {
    throw Error(ErrorCode::SingleClass, "cross-validation needs both classes");
  }
  const Matrix x = data.feature_matrix();
  const auto trials = data.trial_ids();

  const std::size_t folds = cfg.cv.folds;
  std::vector<std::vector<std::vector<std::string>>> partitions;
  for (std::size_t r = 0; r < cfg.cv.repeats; ++r) partitions.push_back(trial_folds(trials, folds, cfg.cv.seed, r));

  CvReport report;
  report.folds.resize(cfg.cv.repeats * folds);
  parallel_for(report.folds.size(), [&](std::size_t task) {
    const std::size_t r = task / folds;
    const std::size_t f = task % folds;
    const std::set<std::string> test_set(partitions[r][f].begin(), partitions[r][f].end());
    std::vector<std::size_t> train_idx, test_idx;
    for (std::size_t i = 0; i < data.size(); ++i) {
      (test_set.count(data.samples[i].trial_id) ? test_idx : train_idx).push_back(i);
    }
    std::vector<int> y_train, y_test;
    for (std::size_t i : train_idx) y_train.push_back(y[i]);
    for (std::size_t i : test_idx) y_test.push_back(y[i]);

    const Matrix x_train_raw = select_rows(x, train_idx);
    const Standardizer scaler = Standardizer::fit(x_train_raw);
    BoostParams params = cfg.boost;
    params.seed = derive_seed(cfg.cv.seed, {r, f});
    const BoostedEnsemble model = train_boosted(scaler.transform(x_train_raw), y_train, params);

    FoldResult& out = report.folds[task];
    out.repeat = r;
    out.fold = f;
    out.train_samples = train_idx.size();
    out.test_samples = test_idx.size();
    out.test_trials = partitions[r][f];
    out.evaluation = evaluate(model, scaler.transform(select_rows(x, test_idx)), y_test);
  });

  double sum = 0.0;
  for (const auto& f : report.folds) {
    sum += f.evaluation.accuracy;
    for (std::size_t a = 0; a < 2; ++a) {
      for (std::size_t p = 0; p < 2; ++p) report.confusion[a][p] += f.evaluation.confusion[a][p];
    }
  }
  const double n = static_cast<double>(report.folds.size());
  report.mean_accuracy = sum / n;
  double var = 0.0;
  for (const auto& f : report.folds) {
    var += (f.evaluation.accuracy - report.mean_accuracy) * (f.evaluation.accuracy - report.mean_accuracy);
  }
  report.std_accuracy = std::sqrt(var / n);
  report.config_snapshot = cfg.to_json();
  return report;
}

Evaluator cv_evaluator(const ExperimentConfig& cfg) {
  return [cfg](const Dataset& data) { return cross_validate(data, cfg).mean_accuracy; };
}

// ---------------------------------------------------------------------------
// Regions

std::map<std::string, std::vector<std::string>> default_region_groups() {
  return {{"frontal", {"AF3", "AF4", "F7", "F8", "F3", "F4"}},
          {"temporal", {"FC5", "T7", "T8", "FC6"}},
          {"parietal", {"P7", "O1", "O2", "P8"}}};
}

std::map<std::string, std::vector<std::string>> region_groups(const std::map<std::string, std::string>& region_map) {
  std::map<std::string, std::vector<std::string>> groups;
  for (const auto& [channel, region] : region_map) groups[region].push_back(channel);
  return groups;
}

std::vector<RegionReport> evaluate_regions(const Dataset& data,
                                           const std::map<std::string, std::vector<std::string>>& groups,
                                           std::span<const std::string> regions, const ExperimentConfig& cfg) {
  std::vector<std::string> names(regions.begin(), regions.end());
  if (names.empty()) {
    for (const auto& [name, channels] : groups) names.push_back(name);
  }
  std::vector<RegionReport> out;
  for (const auto& name : names) {
    auto it = groups.find(name);
    if (it == groups.end()) throw Error(ErrorCode::UnknownRegion, "unknown region '" + name + "'");
    const std::set<std::string> channels(it->second.begin(), it->second.end());
    const Dataset restricted = select_columns_if(data, [&](const FeatureColumn& c) { return channels.count(c.channel) > 0; });
    if (restricted.dimension() == 0) {
      throw Error(ErrorCode::UnknownRegion, "region '" + name + "' matches no feature columns");
    }
    out.push_back({name, it->second, cross_validate(restricted, cfg)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// PSD export

PsdTable compute_psd_table(std::span<const MultichannelRecording> recordings) {
  PsdTable table;
  if (recordings.empty()) return table;
  const auto& channels = recordings.front().channel_labels();
  const double fs = recordings.front().sample_rate();

  std::size_t segment_len = static_cast<std::size_t>(std::llround(4.0 * fs));
  for (const auto& rec : recordings) {
    if (rec.channel_labels() != channels) throw Error(ErrorCode::ChannelMismatch, "recordings use different channels");
    if (rec.sample_rate() != fs) throw Error(ErrorCode::InvalidArgument, "recordings use different sample rates");
    for (const auto& iv : rec.state_timeline()) {
      const auto b = static_cast<std::size_t>(std::llround(iv.start_s * fs));
      const auto e = std::min<std::size_t>(static_cast<std::size_t>(std::llround(iv.end_s * fs)), rec.sample_count());
      segment_len = std::min(segment_len, e - b);
    }
  }
  if (segment_len < 2) throw Error(ErrorCode::InputTooShort, "state intervals too short for a PSD");

  const std::size_t bins = segment_len / 2 + 1;
  std::vector<std::array<std::vector<double>, 2>> sums(channels.size());
  std::array<std::size_t, 2> counts{};
  for (auto& s : sums) s = {std::vector<double>(bins, 0.0), std::vector<double>(bins, 0.0)};

  for (const auto& rec : recordings) {
    for (const auto& iv : rec.state_timeline()) {
      const auto b = static_cast<std::size_t>(std::llround(iv.start_s * fs));
      const auto e = std::min<std::size_t>(static_cast<std::size_t>(std::llround(iv.end_s * fs)), rec.sample_count());
      const std::size_t state = iv.label == ClassLabel::Working ? 1 : 0;
      ++counts[state];
      for (std::size_t c = 0; c < channels.size(); ++c) {
        const PowerSpectrum psd = welch_psd(rec.samples().row(c).subspan(b, e - b), fs, segment_len);
        if (table.frequencies.empty()) table.frequencies = psd.frequencies;
        for (std::size_t k = 0; k < bins; ++k) sums[c][state][k] += psd.density[k];
      }
    }
  }
  for (std::size_t c = 0; c < channels.size(); ++c) {
    for (std::size_t state = 0; state < 2; ++state) {
      if (counts[state] == 0) continue;
      PsdTable::Row row{channels[c], state ? ClassLabel::Working : ClassLabel::Relax, sums[c][state]};
      for (double& v : row.density) v /= static_cast<double>(counts[state]);
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

void write_psd_csv(const PsdTable& table, const fs::path& path) {
  auto os = csv::open_for_write(path);
  std::vector<std::string> cells{"channel", "state"};
  for (double f : table.frequencies) cells.push_back(csv::format_double(f));
  csv::write_row(os, cells);
  for (const auto& row : table.rows) {
    cells.assign({row.channel, std::string(to_string(row.state))});
    for (double v : row.density) cells.push_back(csv::format_double(v));
    csv::write_row(os, cells);
  }
}

PsdTable export_psd(std::span<const MultichannelRecording> recordings, const fs::path& out_path) {
  PsdTable table = compute_psd_table(recordings);
  write_psd_csv(table, out_path);
  return table;
}

// ---------------------------------------------------------------------------
// Trained model

ClassLabel TrainedModel::predict(std::span<const double> features) const {
  std::vector<double> row(features.begin(), features.end());
  standardizer.transform_row(row);
  return from_sign(ensemble.predict(row));
}

namespace {

std::string hex(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

bool has_space(const std::string& s) {
  return std::any_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

}  // namespace

void TrainedModel::save(std::ostream& os) const {
  os << "memdeeg-model 1\n";
  os << "columns " << columns.size() << '\n';
  for (const auto& c : columns) {
    if (has_space(c.name) || has_space(c.channel) || has_space(c.kind) || c.name.empty()) {
      throw Error(ErrorCode::InvalidArgument, "feature names must not contain whitespace: '" + c.name + "'");
    }
    os << c.name << ' ' << (c.channel.empty() ? "-" : c.channel) << ' ' << c.kind << ' ' << c.imf << '\n';
  }
  os << "standardizer\n";
  for (std::size_t i = 0; i < columns.size(); ++i) {
    os << hex(standardizer.means()[i]) << ' ' << hex(standardizer.scales()[i]) << '\n';
  }
  ensemble.save(os);
}

TrainedModel TrainedModel::load(std::istream& is) {
  auto word = [&is] {
    std::string s;
    if (!(is >> s)) throw Error(ErrorCode::MalformedFile, "model file truncated");
    return s;
  };
  auto real = [&] {
    const std::string s = word();
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size()) throw Error(ErrorCode::MalformedFile, "bad number '" + s + "'");
    return v;
  };
  if (word() != "memdeeg-model" || word() != "1") throw Error(ErrorCode::MalformedFile, "not a model file");
  if (word() != "columns") throw Error(ErrorCode::MalformedFile, "expected columns");
  const std::size_t n = std::stoul(word());
  TrainedModel m;
  for (std::size_t i = 0; i < n; ++i) {
    FeatureColumn c;
    c.name = word();
    c.channel = word();
    if (c.channel == "-") c.channel.clear();
    c.kind = word();
    c.imf = std::stoul(word());
    m.columns.push_back(std::move(c));
  }
  if (word() != "standardizer") throw Error(ErrorCode::MalformedFile, "expected standardizer");
  std::vector<double> means(n), scales(n);
  for (std::size_t i = 0; i < n; ++i) {
    means[i] = real();
    scales[i] = real();
  }
  m.standardizer = Standardizer(std::move(means), std::move(scales));
  m.ensemble = BoostedEnsemble::load(is);
  if (m.ensemble.dimension() != n) throw Error(ErrorCode::MalformedFile, "model dimension mismatch");
  return m;
}

TrainedModel train_model(const Dataset& data, const ExperimentConfig& cfg) {
  cfg.validate();
  if (data.empty()) throw Error(ErrorCode::EmptyInput, "training on an empty dataset");
  const Matrix x = data.feature_matrix();
  TrainedModel m;
  m.columns = data.columns;
  m.standardizer = Standardizer::fit(x);
  BoostParams params = cfg.boost;
  params.seed = cfg.cv.seed;
  m.ensemble = train_boosted(m.standardizer.transform(x), data.signs(), params);
  return m;
}

// ---------------------------------------------------------------------------
// Reports

namespace {

void write_fold_rows(std::ostream& os, const std::string& lead, const CvReport& report) {
  for (const auto& f : report.folds) {
    const auto& cm = f.evaluation.confusion;
    os << lead << f.repeat << ',' << f.fold << ',' << f.train_samples << ',' << f.test_samples << ','
       << csv::format_double(f.evaluation.accuracy) << ',' << cm[0][0] << ',' << cm[0][1] << ',' << cm[1][0] << ','
       << cm[1][1] << '\n';
  }
}

}  // namespace

void write_cv_report(const CvReport& report, const fs::path& dir, const std::string& prefix) {
  {
    auto os = csv::open_for_write(dir / (prefix + "_folds.csv"));
    os << "repeat,fold,train_samples,test_samples,accuracy,tn,fp,fn,tp\n";
    write_fold_rows(os, "", report);
  }
  auto os = csv::open_for_write(dir / (prefix + "_summary.csv"));
  const auto& cm = report.confusion;
  os << "metric,value\n";
  os << "folds," << report.folds.size() << '\n';
  os << "mean_accuracy," << csv::format_double(report.mean_accuracy) << '\n';
  os << "std_accuracy," << csv::format_double(report.std_accuracy) << '\n';
  os << "tn," << cm[0][0] << "\nfp," << cm[0][1] << "\nfn," << cm[1][0] << "\ntp," << cm[1][1] << '\n';
}

void write_region_reports(std::span<const RegionReport> reports, const fs::path& dir) {
  {
    auto os = csv::open_for_write(dir / "regions_summary.csv");
    os << "region,channels,mean_accuracy,std_accuracy,tn,fp,fn,tp\n";
    for (const auto& r : reports) {
      std::string channels;
      for (const auto& c : r.channels) channels += (channels.empty() ? "" : ";") + c;
      const auto& cm = r.report.confusion;
      os << r.region << ',' << channels << ',' << csv::format_double(r.report.mean_accuracy) << ','
         << csv::format_double(r.report.std_accuracy) << ',' << cm[0][0] << ',' << cm[0][1] << ',' << cm[1][0] << ','
         << cm[1][1] << '\n';
    }
  }
  auto os = csv::open_for_write(dir / "regions_folds.csv");
  os << "region,repeat,fold,train_samples,test_samples,accuracy,tn,fp,fn,tp\n";
  for (const auto& r : reports) write_fold_rows(os, r.region + ",", r.report);
}

}  // namespace memdeeg
