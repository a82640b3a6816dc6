#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "memdeeg/matrix.hpp"
#include "memdeeg/signal_model.hpp"

namespace memdeeg {

// Metadata for one feature column. `kind` names the quantity independent of
// channel and IMF (e.g. "mobility", "D2_energy"); `imf` is 1-based, 0 when the
// column is not tied to a single IMF.
struct FeatureColumn {
  std::string name;
  std::string channel;
  std::string kind;
  std::size_t imf = 0;

  bool operator==(const FeatureColumn&) const = default;
};

struct FeatureVector {
  std::vector<FeatureColumn> columns;
  std::vector<double> values;

  void append(const FeatureVector& other);
};

struct LabeledSample {
  std::vector<double> values;
  ClassLabel label = ClassLabel::Relax;
  std::string trial_id;
  std::string subject;
  std::string session;
};

struct Dataset {
  std::vector<FeatureColumn> columns;
  std::vector<LabeledSample> samples;

  std::size_t dimension() const noexcept { return columns.size(); }
  std::size_t size() const noexcept { return samples.size(); }
  bool empty() const noexcept { return samples.empty(); }

  // Samples as rows.
  Matrix feature_matrix() const;
  std::vector<int> signs() const;
  std::vector<std::string> trial_ids() const;  // distinct, sorted
};

Dataset select_columns(const Dataset& data, std::span<const std::size_t> columns);
Dataset select_columns_if(const Dataset& data, const std::function<bool(const FeatureColumn&)>& keep);

// Header: trial_id,subject,session,label,<feature names...>
void write_dataset_csv(const Dataset& data, const std::filesystem::path& path);

}  // namespace memdeeg
