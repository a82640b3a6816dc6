// memdeeg: MEMD feature extraction and boosted-forest mental state classification.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "memdeeg/csv.hpp"
#include "memdeeg/error.hpp"
#include "memdeeg/memd.hpp"
#include "memdeeg/nonlinear_features.hpp"
#include "memdeeg/pipeline.hpp"
#include "memdeeg/selection.hpp"
#include "memdeeg/signal_model.hpp"

namespace fs = std::filesystem;
using namespace memdeeg;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

struct CommonOptions {
  std::string config;
  std::string data;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mode;
};

void add_common(CLI::App* cmd, CommonOptions& opt) {
  cmd->add_option("--config", opt.config, "Experiment configuration (JSON)")->check(CLI::ExistingFile);
  cmd->add_option("--data", opt.data, "Directory of recording manifests and CSV files")
      ->required()
      ->check(CLI::ExistingDirectory);
  cmd->add_option("--out", opt.out, "Output directory")->required();
  cmd->add_option("--seed", opt.seed, "Random seed");
  cmd->add_option("--mode", opt.mode, "Feature mode: memd, dwt, dft, memd-dwt");
}

ExperimentConfig resolve_config(const CommonOptions& opt) {
  ExperimentConfig cfg = opt.config.empty() ? ExperimentConfig{} : ExperimentConfig::load(opt.config);
  if (opt.seed) {
    cfg.cv.seed = *opt.seed;
    cfg.boost.seed = *opt.seed;
  }
  if (opt.mode) cfg.feature_mode = parse_feature_mode(*opt.mode);
  cfg.validate();
  return cfg;
}

void echo_config(const ExperimentConfig& cfg, const fs::path& out) {
  auto os = csv::open_for_write(out / "config.json");
  os << cfg.to_json();
}

int run_decompose(const ExperimentConfig& cfg, const std::vector<MultichannelRecording>& recs, const fs::path& out) {
  auto summary = csv::open_for_write(out / "decompose_summary.csv");
  summary << "trial_id,frame,start_sample,label,imf_count,extracted,max_abs_reconstruction_error\n";
  for (const auto& rec : recs) {
    const auto filtered = cfg.bandpass ? bandpass_filter(rec, cfg.band_low_hz, cfg.band_high_hz) : rec;
    const auto frames = segment(filtered, cfg.frame_s, cfg.overlap_s);
    for (std::size_t i = 0; i < frames.size(); ++i) {
      const ImfStack stack = decompose(frames[i].samples, cfg.sift);
      char dir[32];
      std::snprintf(dir, sizeof(dir), "frame_%03zu", i);
      save_imf_stack(stack, frames[i].channel_labels, out / rec.trial_id() / dir);
      const double err = max_abs(stack.reconstruct() - frames[i].samples);
      summary << rec.trial_id() << ',' << i << ',' << frames[i].start_sample << ',' << to_string(frames[i].label)
              << ',' << stack.imfs.size() << ',' << stack.extracted << ',' << csv::format_double(err) << '\n';
    }
  }
  return kExitOk;
}

int run_extract(const ExperimentConfig& cfg, const std::vector<MultichannelRecording>& recs, const fs::path& out) {
  write_dataset_csv(build_dataset(recs, cfg), out / "features.csv");
  return kExitOk;
}

int run_rank_imfs(const ExperimentConfig& cfg, const std::vector<MultichannelRecording>& recs, const fs::path& out) {
  const ImfDataset imf = build_imf_dataset(recs, cfg);
  const SelectionRule rule{SelectionRule::Mode::TopK, cfg.imf_top_k, 0.0};
  write_imf_ranking_csv(rank_imfs(imf.data, imf.correlations, cv_evaluator(cfg), rule), out / "imf_ranking.csv");
  return kExitOk;
}

int run_rank_features(ExperimentConfig cfg, const std::vector<MultichannelRecording>& recs, const fs::path& out) {
  cfg.feature_mode = FeatureMode::Memd;
  cfg.selected_features.clear();
  const Dataset data = build_dataset(recs, cfg);
  std::vector<std::string> names(kImfFeatureNames.begin(), kImfFeatureNames.end());
  names.emplace_back(kFluctuationIndexName);
  const SelectionRule rule{SelectionRule::Mode::TopK, cfg.feature_top_m, 0.0};
  write_feature_ranking_csv(rank_features(data, names, cv_evaluator(cfg), rule), out / "feature_ranking.csv");
  return kExitOk;
}

int run_train(const ExperimentConfig& cfg, const std::vector<MultichannelRecording>& recs, const fs::path& out) {
  const Dataset data = build_dataset(recs, cfg);
  const TrainedModel model = train_model(data, cfg);
  {
    std::ofstream os(out / "model.txt");
    if (!os) throw Error(ErrorCode::Io, "cannot write " + (out / "model.txt").string());
    model.save(os);
  }
  auto os = csv::open_for_write(out / "train_summary.csv");
  os << "metric,value\n";
  os << "samples," << data.size() << '\n';
  os << "features," << data.dimension() << '\n';
  os << "rounds_trained," << model.ensemble.rounds_trained() << '\n';
  os << "training_accuracy," << csv::format_double(model.ensemble.training_accuracy()) << '\n';
  return kExitOk;
}

int run_evaluate(const ExperimentConfig& cfg, const std::vector<MultichannelRecording>& recs, const fs::path& out) {
  write_cv_report(cross_validate(build_dataset(recs, cfg), cfg), out);
  return kExitOk;
}

int run_regions(const ExperimentConfig& cfg, const std::vector<MultichannelRecording>& recs, const fs::path& out) {
  ExperimentConfig all = cfg;
  all.regions.clear();
  const Dataset data = build_dataset(recs, all);
  std::map<std::string, std::string> region_map;
  for (const auto& rec : recs) region_map.insert(rec.region_map().begin(), rec.region_map().end());
  const auto groups = region_map.empty() ? default_region_groups() : region_groups(region_map);
  write_region_reports(evaluate_regions(data, groups, cfg.regions, all), out);
  return kExitOk;
}

int run_psd(const std::vector<MultichannelRecording>& recs, const fs::path& out) {
  export_psd(recs, out / "psd.csv");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MEMD feature extraction and boosted-forest EEG mental state classification"};
  app.require_subcommand(1);

  CommonOptions opt;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"decompose", "Decompose every frame into IMFs"},
      {"extract", "Write the feature table"},
      {"rank-imfs", "Rank IMFs by correlation and solo accuracy"},
      {"rank-features", "Rank MEMD features by solo accuracy"},
      {"train", "Train a boosted forest on all data"},
      {"evaluate", "Repeated trial-level cross-validation"},
      {"regions", "Cross-validation per brain region"},
      {"psd", "Mean power spectral density per channel and state"},
  };
  for (const auto& [name, help] : commands) add_common(app.add_subcommand(name, help), opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    const ExperimentConfig cfg = resolve_config(opt);
    const fs::path out = opt.out;
    fs::create_directories(out);
    const auto recs = load_recordings_dir(opt.data);
    echo_config(cfg, out);

    if (cmd == "decompose") return run_decompose(cfg, recs, out);
    if (cmd == "extract") return run_extract(cfg, recs, out);
    if (cmd == "rank-imfs") return run_rank_imfs(cfg, recs, out);
    if (cmd == "rank-features") return run_rank_features(cfg, recs, out);
    if (cmd == "train") return run_train(cfg, recs, out);
    if (cmd == "evaluate") return run_evaluate(cfg, recs, out);
    if (cmd == "regions") return run_regions(cfg, recs, out);
    if (cmd == "psd") return run_psd(recs, out);
  } catch (const Error& e) {
    std::cerr << "memdeeg " << cmd << ": " << to_string(e.code()) << ": " << e.what() << '\n';
    return e.is_validation() ? kExitValidation : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "memdeeg " << cmd << ": " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitRuntime;
}
