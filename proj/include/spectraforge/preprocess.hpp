#pragma once

#include <filesystem>
#include <optional>

#include "spectraforge/types.hpp"

namespace spectraforge {

// Half-open index interval [lo, hi).
struct IndexInterval {
  Index lo = 0;
  Index hi = 0;
  Index size() const { return hi - lo; }
  bool empty() const { return hi <= lo; }
};

// Log + min-max coefficients fitted on training records only. shift is the
// non-negativity offset recorded when the training pool contains negatives.
struct ScalingParams {
  double lo = 0.0;
  double hi = 1.0;
  bool clamp = true;
  double shift = 0.0;
};

struct CropSpec {
  IndexInterval row_range;
  IndexInterval col_range;
  IndexInterval rip_cols;  // deleted before cropping
};

// Per-dataset preprocessing profile; crop coordinates refer to the matrix
// after RIP removal and wavelet reduction.
struct DatasetProfile {
  std::optional<IndexInterval> rip_cols;
  std::optional<IndexInterval> crop_rows;
  std::optional<IndexInterval> crop_cols;
  int wavelet_levels_rows = 0;
  int wavelet_levels_cols = 0;
  bool clamp = true;
};

// Deletes the given column interval (the reactant-ion-peak line).
Spectrum2D remove_rip(const Spectrum2D& spectrum, IndexInterval rip_cols);

// Separable Haar analysis keeping the approximation subband at each level,
// normalized so constants are preserved; each level maps a length-L axis to
// ceil(L/2) with a symmetric pad of one sample when L is odd.
Spectrum2D wavelet_reduce(const Spectrum2D& spectrum, int levels_rows, int levels_cols);

// Submatrix copy over spec.row_range x spec.col_range.
Spectrum2D crop(const Spectrum2D& spectrum, const CropSpec& spec);

// lo/hi are min/max of log1p over every training intensity (after the
// recorded non-negativity shift).
ScalingParams fit_scaling(const Dataset& train, bool clamp = true);

// y = (log1p(x + shift) - lo) / (hi - lo), clipped to [0, 1] when clamp is set.
Spectrum2D apply_scaling(const Spectrum2D& spectrum, const ScalingParams& params);

// x = expm1(y * (hi - lo) + lo) - shift.
Spectrum2D invert_scaling(const Spectrum2D& spectrum, const ScalingParams& params);

// RIP removal, wavelet reduction and crop in profile order (no scaling).
Spectrum2D apply_profile(const Spectrum2D& spectrum, const DatasetProfile& profile);

DatasetProfile load_profile(const std::filesystem::path& path);
void save_profile(const DatasetProfile& profile, const std::filesystem::path& path);

ScalingParams load_scaling(const std::filesystem::path& path);
void save_scaling(const ScalingParams& params, const std::filesystem::path& path);

}  // namespace spectraforge
