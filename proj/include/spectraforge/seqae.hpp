#pragma once

#include <filesystem>
#include <utility>

#include "spectraforge/nn.hpp"
#include "spectraforge/rng.hpp"
#include "spectraforge/types.hpp"

namespace spectraforge::seqae {

enum class LatentProvenance { encoded, sampled };

const char* to_string(LatentProvenance provenance);
LatentProvenance latent_provenance_from_string(const std::string& name);

// Fully encoded d x d representation of one record.
struct LatentMatrix {
  Matrix E;
  std::string source_id;
  std::optional<Label> label;
  LatentProvenance provenance = LatentProvenance::encoded;
};

// First autoencoder compresses columns (length m), the second compresses the
// rows of the intermediate d x n matrix (length n); both bottlenecks share d.
struct SeqAeBundle {
  nn::AutoencoderModel first;
  nn::AutoencoderModel second;
  Index d = 0;
  Index m = 0;
  Index n = 0;
};

void validate(const SeqAeBundle& bundle);

struct UndersampleResult {
  std::vector<Vector> series;  // surviving column series, record-major order
  std::vector<std::pair<std::size_t, Index>> kept;  // (record index, column)
  std::vector<double> stds;    // std of every column series, record-major
  double median_std = 0.0;
};

// Pools the per-column standard deviations of every record, takes their
// median, always keeps columns at or above it and keeps the rest with
// probability keep_prob.
UndersampleResult undersample_columns(const Dataset& records, double keep_prob, Rng rng);

LatentMatrix encode_record(const Spectrum2D& record, const SeqAeBundle& bundle);

// Inverse composition of both decoders. Encoded latents decode to
// reconstructed records, sampled latents to synthetic ones.
Spectrum2D decode_record(const LatentMatrix& latent, const SeqAeBundle& bundle);

struct BundleTrainResult {
  SeqAeBundle bundle;
  nn::TrainHistory first_history;
  nn::TrainHistory second_history;
  std::size_t first_train_count = 0, first_val_count = 0;
  std::size_t second_train_count = 0, second_val_count = 0;
};

// Stage 1 trains on undersampled column series of the training records;
// stage 2 trains on every row of the stage-1 encodings (d per record).
BundleTrainResult train_bundle(const Dataset& train, const Dataset& val, Index d,
                               const nn::TrainConfig& cfg, double keep_prob = 0.25);

// Bundle directory: first.model, second.model, bundle.json.
void save_bundle(const SeqAeBundle& bundle, const std::filesystem::path& dir);
SeqAeBundle load_bundle(const std::filesystem::path& dir);

// Latent directory: one SPB per latent plus manifest.json; returns the
// manifest path.
std::filesystem::path save_latents(const std::vector<LatentMatrix>& latents,
                                   const std::filesystem::path& dir);
std::vector<LatentMatrix> load_latents(const std::filesystem::path& manifest_path);

}  // namespace spectraforge::seqae
