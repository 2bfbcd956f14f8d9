#include "spectraforge/split.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <set>

namespace spectraforge {

namespace {

// Indices 0..n-1 ordered by record id; seeded shuffles start from this
// canonical order so directory listing order never matters.
std::vector<std::size_t> canonical_order(const Dataset& dataset) {
  std::vector<std::size_t> order(dataset.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ra = dataset.records[a];
    const auto& rb = dataset.records[b];
    return ra.id != rb.id ? ra.id < rb.id : a < b;
  });
  return order;
}

SplitResult build(const Dataset& dataset, const std::set<std::size_t>& val_indices,
                  bool stratified) {
  SplitResult result;
  result.stratified = stratified;
  result.train.labels = dataset.labels;
  result.val.labels = dataset.labels;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    (val_indices.count(i) ? result.val : result.train).records.push_back(dataset.records[i]);
  }
  return result;
}

std::size_t val_count(double fraction, std::size_t group_size) {
  auto count = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(group_size)));
  if (count >= group_size) count = group_size - 1;  // keep the training half non-empty
  return count;
}

}  // namespace

SplitResult split_dataset(const Dataset& dataset, double val_fraction, Rng rng,
                          bool require_stratified) {
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
    throw SpecError("val_fraction must lie strictly between 0 and 1");
  }
  if (dataset.size() < 2) {
    throw SpecError("split_dataset needs at least 2 records");
  }

  // Group canonical-order indices per label.
  std::map<Label, std::vector<std::size_t>> groups;
  bool all_labelled = true;
  for (std::size_t i : canonical_order(dataset)) {
    const auto& record = dataset.records[i];
    if (record.label) {
      groups[*record.label].push_back(i);
    } else {
      all_labelled = false;
    }
  }

  bool can_stratify = all_labelled && !groups.empty();
  for (const auto& [label, members] : groups) {
    if (members.size() < 2) can_stratify = false;
  }

  if (!can_stratify) {
    if (require_stratified) {
      throw StratifyError("stratified split impossible: a class has fewer than 2 records");
    }
    std::cerr << "warning: stratified split impossible, falling back to a global split\n";
    std::vector<std::size_t> order = canonical_order(dataset);
    rng.shuffle(order);
    const std::size_t count = val_count(val_fraction, order.size());
    std::set<std::size_t> val_indices(order.begin(),
                                      order.begin() + static_cast<std::ptrdiff_t>(count));
    return build(dataset, val_indices, false);
  }

  std::set<std::size_t> val_indices;
  for (auto& [label, members] : groups) {
    rng.shuffle(members);
    const std::size_t count = val_count(val_fraction, members.size());
    val_indices.insert(members.begin(),
                       members.begin() + static_cast<std::ptrdiff_t>(count));
  }
  return build(dataset, val_indices, true);
}

SplitResult holdout_per_class(const Dataset& dataset, std::size_t k, Rng rng) {
  if (k == 0) {
    SplitResult result;
    result.train = dataset;
    result.val.labels = dataset.labels;
    return result;
  }

  std::map<Label, std::vector<std::size_t>> eligible;
  for (std::size_t i : canonical_order(dataset)) {
    const auto& record = dataset.records[i];
    if (!record.label) {
      throw HoldoutError("record '" + record.id + "' has no label");
    }
    if (record.provenance == Provenance::original) {
      eligible[*record.label].push_back(i);
    }
  }

  std::set<std::size_t> val_indices;
  for (const auto& label : dataset.labels) {
    auto it = eligible.find(label);
    const std::size_t available = it == eligible.end() ? 0 : it->second.size();
    if (available <= k) {
      throw HoldoutError("class '" + label.name + "' has " + std::to_string(available) +
                         " original records, needs more than " + std::to_string(k));
    }
    auto& members = it->second;
    rng.shuffle(members);
    val_indices.insert(members.begin(), members.begin() + static_cast<std::ptrdiff_t>(k));
  }
  return build(dataset, val_indices, true);
}

}  // namespace spectraforge
