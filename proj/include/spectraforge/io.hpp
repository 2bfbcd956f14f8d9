#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "spectraforge/types.hpp"

namespace spectraforge {

// SPB matrix file, little-endian:
//   magic "SPB1" | uint8 dtype (0 = float64) | uint32 rows | uint32 cols |
//   20 reserved zero bytes | rows*cols float64, row-major.
inline constexpr std::size_t kSpbHeaderSize = 33;

Matrix load_spb(const std::filesystem::path& path);
void save_spb(const Matrix& matrix, const std::filesystem::path& path);

// CSV ingestion: comma-separated rows, one matrix row per line.
Matrix load_csv(const std::filesystem::path& path);

// Sniffs the SPB magic and falls back to CSV. The record id defaults to the
// file stem; label and provenance come from manifests, not from matrix files.
Spectrum2D load_matrix(const std::filesystem::path& path);
void save_matrix(const Spectrum2D& spectrum, const std::filesystem::path& path);

struct ManifestEntry {
  std::string id;
  std::string path;  // relative to the manifest's directory
  std::optional<Label> label;
  Provenance provenance = Provenance::original;
  ScaleState scale_state = ScaleState::raw;
};

struct Manifest {
  std::vector<Label> labels;
  std::vector<ManifestEntry> entries;
};

Manifest load_manifest(const std::filesystem::path& path);
void save_manifest(const Manifest& manifest, const std::filesystem::path& path);

// Loads every record listed in a manifest (paths resolved against it).
Dataset load_dataset(const std::filesystem::path& manifest_path);

// Writes records under dir/records/ plus dir/manifest.json; returns the
// manifest path. Record ids become file names after sanitization.
std::filesystem::path save_dataset(const Dataset& dataset,
                                   const std::filesystem::path& dir);

// Container file for checkpoints and statistics: magic "SFC1", uint32 JSON
// header length, the header bytes, then SPB blocks back to back.
void write_blob(const std::filesystem::path& path, const nlohmann::json& header,
                const std::vector<Matrix>& blocks);
std::pair<nlohmann::json, std::vector<Matrix>> read_blob(
    const std::filesystem::path& path);

std::string sanitize_filename(const std::string& id);

}  // namespace spectraforge
