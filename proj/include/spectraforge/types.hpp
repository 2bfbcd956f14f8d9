#pragma once

#include <Eigen/Dense>
#include <compare>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "spectraforge/errors.hpp"

namespace spectraforge {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

enum class ScaleState { raw, log_minmax };
enum class Provenance { original, reconstructed, synthetic };

const char* to_string(ScaleState state);
const char* to_string(Provenance provenance);
ScaleState scale_state_from_string(const std::string& name);
Provenance provenance_from_string(const std::string& name);

// Chemical-composition class of a record. Canonical ordering is the sorted
// name order; every tie-break in the library uses it.
struct Label {
  std::string name;
  auto operator<=>(const Label&) const = default;
};

// One 2D spectral record: drift-time samples down the rows, retention-time
// points across the columns.
struct Spectrum2D {
  std::string id;
  Matrix data;
  std::optional<Label> label;
  ScaleState scale_state = ScaleState::raw;
  Provenance provenance = Provenance::original;

  Index rows() const { return data.rows(); }
  Index cols() const { return data.cols(); }
};

// Checks m >= 1, n >= 1 and finiteness of every entry.
void validate(const Spectrum2D& spectrum);

struct Dataset {
  std::vector<Spectrum2D> records;
  std::vector<Label> labels;  // canonical label set (sorted, unique)

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
  Index rows() const { return records.empty() ? 0 : records.front().rows(); }
  Index cols() const { return records.empty() ? 0 : records.front().cols(); }
};

// Builds a dataset whose label set is derived from the records.
Dataset make_dataset(std::vector<Spectrum2D> records);

// Uniform dimensions, finite entries, record labels within the declared set.
void validate(const Dataset& dataset);

// Indices of records grouped per label, canonical label order.
std::map<Label, std::vector<std::size_t>> indices_by_label(const Dataset& dataset);

// Row-major flattening; the inverse must use the same ordering.
Vector flatten(const Matrix& matrix);
Matrix unflatten(const Vector& values, Index rows, Index cols);

}  // namespace spectraforge
