#include "memdeeg/dataset.hpp"

#include <algorithm>
#include <set>

#include "memdeeg/csv.hpp"
#include "memdeeg/error.hpp"

namespace memdeeg {

void FeatureVector::append(const FeatureVector& other) {
  columns.insert(columns.end(), other.columns.begin(), other.columns.end());
  values.insert(values.end(), other.values.begin(), other.values.end());
}

Matrix Dataset::feature_matrix() const {
  Matrix x(samples.size(), columns.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].values.size() != columns.size()) {
      throw Error(ErrorCode::DimensionMismatch, "sample " + std::to_string(i) + " has wrong feature count");
    }
    std::copy(samples[i].values.begin(), samples[i].values.end(), x.row(i).begin());
  }
  return x;
}

std::vector<int> Dataset::signs() const {
  std::vector<int> y;
  y.reserve(samples.size());
  for (const auto& s : samples) y.push_back(to_sign(s.label));
  return y;
}

std::vector<std::string> Dataset::trial_ids() const {
  std::set<std::string> ids;
  for (const auto& s : samples) ids.insert(s.trial_id);
  return {ids.begin(), ids.end()};
}

Dataset select_columns(const Dataset& data, std::span<const std::size_t> columns) {
  Dataset out;
  out.columns.reserve(columns.size());
  for (std::size_t c : columns) {
    if (c >= data.columns.size()) throw Error(ErrorCode::InvalidArgument, "column index out of range");
    out.columns.push_back(data.columns[c]);
  }
  out.samples.reserve(data.samples.size());
  for (const auto& s : data.samples) {
    LabeledSample copy{{}, s.label, s.trial_id, s.subject, s.session};
    copy.values.reserve(columns.size());
    for (std::size_t c : columns) copy.values.push_back(s.values[c]);
    out.samples.push_back(std::move(copy));
  }
  return out;
}

Dataset select_columns_if(const Dataset& data, const std::function<bool(const FeatureColumn&)>& keep) {
  std::vector<std::size_t> idx;
  for (std::size_t c = 0; c < data.columns.size(); ++c) {
    if (keep(data.columns[c])) idx.push_back(c);
  }
  return select_columns(data, idx);
}

void write_dataset_csv(const Dataset& data, const std::filesystem::path& path) {
  auto os = csv::open_for_write(path);
  std::vector<std::string> cells{"trial_id", "subject", "session", "label"};
  for (const auto& c : data.columns) cells.push_back(c.name);
  csv::write_row(os, cells);
  for (const auto& s : data.samples) {
    cells.assign({s.trial_id, s.subject, s.session, std::string(to_string(s.label))});
    for (double v : s.values) cells.push_back(csv::format_double(v));
    csv::write_row(os, cells);
  }
}

}  // namespace memdeeg
