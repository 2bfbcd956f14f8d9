#include "spectraforge/types.hpp"

#include <algorithm>
#include <set>

namespace spectraforge {

const char* to_string(ScaleState state) {
  switch (state) {
    case ScaleState::raw: return "raw";
    case ScaleState::log_minmax: return "log_minmax";
  }
  return "raw";
}

const char* to_string(Provenance provenance) {
  switch (provenance) {
    case Provenance::original: return "original";
    case Provenance::reconstructed: return "reconstructed";
    case Provenance::synthetic: return "synthetic";
  }
  return "original";
}

ScaleState scale_state_from_string(const std::string& name) {
  if (name == "raw") return ScaleState::raw;
  if (name == "log_minmax") return ScaleState::log_minmax;
  throw FormatError("unknown scale_state '" + name + "'");
}

Provenance provenance_from_string(const std::string& name) {
  if (name == "original") return Provenance::original;
  if (name == "reconstructed") return Provenance::reconstructed;
  if (name == "synthetic") return Provenance::synthetic;
  throw FormatError("unknown provenance '" + name + "'");
}

void validate(const Spectrum2D& spectrum) {
  if (spectrum.rows() < 1 || spectrum.cols() < 1) {
    throw SpecError("spectrum '" + spectrum.id + "' must have m >= 1 and n >= 1");
  }
  if (!spectrum.data.allFinite()) {
    throw DataError("spectrum '" + spectrum.id + "' contains non-finite values");
  }
}

Dataset make_dataset(std::vector<Spectrum2D> records) {
  std::set<Label> seen;
  for (const auto& record : records) {
    if (record.label) seen.insert(*record.label);
  }
  Dataset dataset;
  dataset.records = std::move(records);
  dataset.labels.assign(seen.begin(), seen.end());
  return dataset;
}

void validate(const Dataset& dataset) {
  const std::set<Label> declared(dataset.labels.begin(), dataset.labels.end());
  for (std::size_t i = 0; i < dataset.records.size(); ++i) {
    const auto& record = dataset.records[i];
    validate(record);
    if (record.rows() != dataset.rows() || record.cols() != dataset.cols()) {
      throw ShapeError("record '" + record.id + "' dimensions differ from the dataset's");
    }
    if (record.label && !declared.count(*record.label)) {
      throw SpecError("record '" + record.id + "' carries an undeclared label '" +
                      record.label->name + "'");
    }
  }
}

std::map<Label, std::vector<std::size_t>> indices_by_label(const Dataset& dataset) {
  std::map<Label, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < dataset.records.size(); ++i) {
    if (dataset.records[i].label) groups[*dataset.records[i].label].push_back(i);
  }
  return groups;
}

Vector flatten(const Matrix& matrix) {
  Vector flat(matrix.size());
  Index pos = 0;
  for (Index i = 0; i < matrix.rows(); ++i)
    for (Index j = 0; j < matrix.cols(); ++j) flat(pos++) = matrix(i, j);
  return flat;
}

Matrix unflatten(const Vector& values, Index rows, Index cols) {
  if (values.size() != rows * cols) {
    throw ShapeError("unflatten: vector length does not match rows*cols");
  }
  Matrix matrix(rows, cols);
  Index pos = 0;
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) matrix(i, j) = values(pos++);
  return matrix;
}

}  // namespace spectraforge
