#pragma once

#include <filesystem>
#include <vector>

#include "spectraforge/rng.hpp"
#include "spectraforge/split.hpp"
#include "spectraforge/types.hpp"

namespace spectraforge::classify {

struct PcaModel {
  Vector mean;               // feature mean, length D
  Matrix components;         // k x D, rows orthonormal, descending variance
  Vector explained_variance; // k entries, non-increasing
  double total_variance = 0.0;
  Index k = 0;
};

// Smallest k whose cumulative explained-variance ratio reaches the target.
// Uses the D x D covariance eigendecomposition when D <= N and the N x N Gram
// route otherwise; both give identical nonzero spectra. Component signs are
// fixed so the largest-magnitude coordinate is positive.
PcaModel pca_fit(const std::vector<Vector>& records, double variance_target = 0.90);

Vector pca_transform(const PcaModel& model, const Vector& record);

struct ForestConfig {
  int n_trees = 100;
  bool bootstrap = true;
  std::uint64_t seed = 0;
  int max_features = 0;  // 0 selects ceil(sqrt(feature count))
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::vector<int> class_counts;  // leaves only
  int majority = -1;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;
};

struct ForestModel {
  std::vector<DecisionTree> trees;
  std::vector<Label> classes;  // canonical order, used for every tie-break
  Index n_features = 0;
  ForestConfig config;
};

// Gini-impurity CART trees on bootstrap resamples, grown to purity.
ForestModel forest_train(const std::vector<Vector>& features,
                         const std::vector<Label>& labels,
                         const std::vector<Label>& classes, ForestConfig config);

Label forest_predict(const ForestModel& model, const Vector& features);

// Per-class vote histogram (one vote per tree), canonical class order.
std::vector<int> forest_votes(const ForestModel& model, const Vector& features);

double accuracy_rating(const std::vector<Label>& predictions,
                       const std::vector<Label>& truth);

enum class Condition { baseline, augmented, reconstructed_plus_synthetic };

const char* to_string(Condition condition);

struct ExperimentReport {
  Condition condition;
  std::vector<double> per_seed_ar;
  double mean = 0.0;
  double stddev = 0.0;
  bool stddev_defined = true;  // false for single-run experiments
};

// Per-seed record of exactly which ids entered validation and each
// condition's training pool; lets callers audit split hygiene.
struct SeedAudit {
  std::uint64_t seed = 0;
  std::vector<std::string> val_ids;
  std::vector<std::pair<Condition, std::vector<std::string>>> train_ids;
};

struct ExperimentConfig {
  std::size_t runs = 5;
  std::size_t holdout_k = 5;
  std::vector<std::uint64_t> seeds;  // empty selects 1..runs
  double variance_target = 0.90;
  ForestConfig forest;
};

struct ExperimentResult {
  std::vector<ExperimentReport> reports;
  std::vector<SeedAudit> audits;
  std::size_t holdout_k = 0;
  std::vector<std::uint64_t> seeds;
};

// The repeated-split protocol: per seed the validation half holds k original
// records per class; baseline trains on the remaining originals, augmented
// adds every synthetic record, and the third condition swaps the training
// originals for their reconstructions before adding the synthetic records.
// PCA is fitted per condition on its training pool only. An empty
// reconstructed dataset skips the third condition.
ExperimentResult run_experiment(const Dataset& original, const Dataset& synthetic,
                                const Dataset& reconstructed,
                                const ExperimentConfig& config);

void save_report(const ExperimentResult& result, const std::filesystem::path& path);
ExperimentResult load_report(const std::filesystem::path& path);

}  // namespace spectraforge::classify
