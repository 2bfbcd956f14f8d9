#pragma once

#include "spectraforge/rng.hpp"
#include "spectraforge/types.hpp"

namespace spectraforge {

struct SplitResult {
  Dataset train;
  Dataset val;
  bool stratified = true;  // false when the per-label split fell back to global
};

// Record-level train/validation split, stratified per label where class sizes
// permit. Validation receives ceil(val_fraction * class_size) records per
// class, capped at class_size - 1 so the training half keeps every class.
// Records are canonicalized by id before the seeded shuffle, so the partition
// depends only on (record set, seed). When a class has fewer than 2 records
// the split falls back to a global one; with require_stratified it throws
// StratifyError instead.
SplitResult split_dataset(const Dataset& dataset, double val_fraction, Rng rng,
                          bool require_stratified = false);

// Draws exactly k original-provenance records per class into the validation
// half; everything else stays in training. Synthetic or reconstructed records
// are never eligible for validation.
SplitResult holdout_per_class(const Dataset& dataset, std::size_t k, Rng rng);

}  // namespace spectraforge
