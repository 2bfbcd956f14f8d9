#include "spectraforge/preprocess.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "spectraforge/errors.hpp"

namespace spectraforge {

namespace {

void check_interval(const IndexInterval& interval, Index bound, const char* what) {
  if (interval.empty()) throw SpecError(std::string(what) + ": interval is empty");
  if (interval.lo < 0 || interval.hi > bound) {
    throw SpecError(std::string(what) + ": interval [" + std::to_string(interval.lo) +
                    ", " + std::to_string(interval.hi) + ") out of bounds for size " +
                    std::to_string(bound));
  }
}

// One analysis level along the columns of a matrix: adjacent row pairs are
// averaged, odd row counts get a symmetric pad of one row. Combined with the
// final renormalization this equals the Haar approximation subband.
Matrix halve_rows(const Matrix& input) {
  const Index rows = input.rows();
  const Index out_rows = (rows + 1) / 2;
  Matrix out(out_rows, input.cols());
  for (Index i = 0; i < out_rows; ++i) {
    const Index a = 2 * i;
    const Index b = std::min(a + 1, rows - 1);
    out.row(i) = 0.5 * (input.row(a) + input.row(b));
  }
  return out;
}

}  // namespace

Spectrum2D remove_rip(const Spectrum2D& spectrum, IndexInterval rip_cols) {
  check_interval(rip_cols, spectrum.cols(), "remove_rip");
  if (rip_cols.size() >= spectrum.cols()) {
    throw SpecError("remove_rip: removing every column leaves an empty matrix");
  }
  Spectrum2D out = spectrum;
  const Index right = spectrum.cols() - rip_cols.hi;
  out.data.resize(spectrum.rows(), spectrum.cols() - rip_cols.size());
  out.data.leftCols(rip_cols.lo) = spectrum.data.leftCols(rip_cols.lo);
  out.data.rightCols(right) = spectrum.data.rightCols(right);
  return out;
}

Spectrum2D wavelet_reduce(const Spectrum2D& spectrum, int levels_rows, int levels_cols) {
  if (levels_rows < 0 || levels_cols < 0 || levels_rows > 62 || levels_cols > 62) {
    throw SpecError("wavelet_reduce: level counts must lie in [0, 62]");
  }
  Spectrum2D out = spectrum;
  for (int level = 0; level < levels_rows; ++level) out.data = halve_rows(out.data);
  if (levels_cols > 0) {
    Matrix transposed = out.data.transpose();
    for (int level = 0; level < levels_cols; ++level) transposed = halve_rows(transposed);
    out.data = transposed.transpose();
  }
  return out;
}

Spectrum2D crop(const Spectrum2D& spectrum, const CropSpec& spec) {
  check_interval(spec.row_range, spectrum.rows(), "crop rows");
  check_interval(spec.col_range, spectrum.cols(), "crop cols");
  Spectrum2D out = spectrum;
  out.data = spectrum.data.block(spec.row_range.lo, spec.col_range.lo,
                                 spec.row_range.size(), spec.col_range.size());
  return out;
}

ScalingParams fit_scaling(const Dataset& train, bool clamp) {
  if (train.empty()) throw SpecError("fit_scaling: empty training set");

  double min_raw = std::numeric_limits<double>::infinity();
  for (const auto& record : train.records) {
    if (record.scale_state != ScaleState::raw) {
      throw SpecError("fit_scaling: record '" + record.id + "' is already scaled");
    }
    min_raw = std::min(min_raw, record.data.minCoeff());
  }

  ScalingParams params;
  params.clamp = clamp;
  params.shift = min_raw < 0.0 ? -min_raw : 0.0;

  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& record : train.records) {
    const Matrix logged = (record.data.array() + params.shift).log1p().matrix();
    lo = std::min(lo, logged.minCoeff());
    hi = std::max(hi, logged.maxCoeff());
  }
  if (!(hi > lo)) {
    throw DegenerateScaleError("training intensities are constant; cannot fit min-max");
  }
  params.lo = lo;
  params.hi = hi;
  return params;
}

Spectrum2D apply_scaling(const Spectrum2D& spectrum, const ScalingParams& params) {
  if (spectrum.scale_state != ScaleState::raw) {
    throw SpecError("apply_scaling: record '" + spectrum.id + "' is already scaled");
  }
  const Matrix shifted = (spectrum.data.array() + params.shift).matrix();
  if ((shifted.array() <= -1.0).any()) {
    throw DataError("apply_scaling: record '" + spectrum.id +
                    "' has intensities at or below -1 after shift");
  }
  Spectrum2D out = spectrum;
  out.data = ((shifted.array().log1p() - params.lo) / (params.hi - params.lo)).matrix();
  if (params.clamp) out.data = out.data.array().min(1.0).max(0.0).matrix();
  out.scale_state = ScaleState::log_minmax;
  return out;
}

Spectrum2D invert_scaling(const Spectrum2D& spectrum, const ScalingParams& params) {
  if (spectrum.scale_state != ScaleState::log_minmax) {
    throw SpecError("invert_scaling: record '" + spectrum.id + "' is not scaled");
  }
  Spectrum2D out = spectrum;
  out.data = ((spectrum.data.array() * (params.hi - params.lo) + params.lo).expm1() -
              params.shift)
                 .matrix();
  out.scale_state = ScaleState::raw;
  return out;
}

Spectrum2D apply_profile(const Spectrum2D& spectrum, const DatasetProfile& profile) {
  Spectrum2D out = spectrum;
  if (profile.rip_cols && !profile.rip_cols->empty()) {
    out = remove_rip(out, *profile.rip_cols);
  }
  out = wavelet_reduce(out, profile.wavelet_levels_rows, profile.wavelet_levels_cols);
  if (profile.crop_rows || profile.crop_cols) {
    CropSpec spec;
    spec.row_range = profile.crop_rows.value_or(IndexInterval{0, out.rows()});
    spec.col_range = profile.crop_cols.value_or(IndexInterval{0, out.cols()});
    out = crop(out, spec);
  }
  return out;
}

namespace {

std::optional<IndexInterval> interval_from_json(const nlohmann::json& doc,
                                                const std::string& key) {
  if (!doc.contains(key) || doc[key].is_null()) return std::nullopt;
  const auto& value = doc[key];
  if (!value.is_array() || value.size() != 2) {
    throw FormatError("profile field '" + key + "' must be [lo, hi]");
  }
  return IndexInterval{value[0].get<Index>(), value[1].get<Index>()};
}

nlohmann::json interval_to_json(const std::optional<IndexInterval>& interval) {
  if (!interval) return nullptr;
  return nlohmann::json::array({interval->lo, interval->hi});
}

}  // namespace

DatasetProfile load_profile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open profile '" + path.string() + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("profile '" + path.string() + "': " + e.what());
  }
  DatasetProfile profile;
  profile.rip_cols = interval_from_json(doc, "rip_cols");
  profile.crop_rows = interval_from_json(doc, "crop_rows");
  profile.crop_cols = interval_from_json(doc, "crop_cols");
  profile.wavelet_levels_rows = doc.value("wavelet_levels_rows", 0);
  profile.wavelet_levels_cols = doc.value("wavelet_levels_cols", 0);
  profile.clamp = doc.value("clamp", true);
  return profile;
}

void save_profile(const DatasetProfile& profile, const std::filesystem::path& path) {
  nlohmann::json doc;
  doc["rip_cols"] = interval_to_json(profile.rip_cols);
  doc["crop_rows"] = interval_to_json(profile.crop_rows);
  doc["crop_cols"] = interval_to_json(profile.crop_cols);
  doc["wavelet_levels_rows"] = profile.wavelet_levels_rows;
  doc["wavelet_levels_cols"] = profile.wavelet_levels_cols;
  doc["clamp"] = profile.clamp;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open profile '" + path.string() + "' for writing");
  out << doc.dump(2) << "\n";
  if (!out.good()) throw IoError("write failed for '" + path.string() + "'");
}

ScalingParams load_scaling(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scaling file '" + path.string() + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("scaling file '" + path.string() + "': " + e.what());
  }
  ScalingParams params;
  params.lo = doc.at("lo").get<double>();
  params.hi = doc.at("hi").get<double>();
  params.clamp = doc.value("clamp", true);
  params.shift = doc.value("shift", 0.0);
  if (!(params.hi > params.lo)) {
    throw FormatError("scaling file '" + path.string() + "': hi must exceed lo");
  }
  return params;
}

void save_scaling(const ScalingParams& params, const std::filesystem::path& path) {
  nlohmann::json doc;
  doc["lo"] = params.lo;
  doc["hi"] = params.hi;
  doc["clamp"] = params.clamp;
  doc["shift"] = params.shift;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open scaling file '" + path.string() + "' for writing");
  out << doc.dump(2) << "\n";
  if (!out.good()) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace spectraforge
