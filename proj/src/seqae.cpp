#include "spectraforge/seqae.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "spectraforge/io.hpp"

namespace spectraforge::seqae {

const char* to_string(LatentProvenance provenance) {
  return provenance == LatentProvenance::encoded ? "encoded" : "sampled";
}

LatentProvenance latent_provenance_from_string(const std::string& name) {
  if (name == "encoded") return LatentProvenance::encoded;
  if (name == "sampled") return LatentProvenance::sampled;
  throw FormatError("unknown latent provenance '" + name + "'");
}

void validate(const SeqAeBundle& bundle) {
  nn::validate(bundle.first);
  nn::validate(bundle.second);
  if (bundle.first.input_dim() != bundle.m || bundle.first.latent_dim != bundle.d) {
    throw ShapeError("first autoencoder does not map R^m to R^d");
  }
  if (bundle.second.input_dim() != bundle.n || bundle.second.latent_dim != bundle.d) {
    throw ShapeError("second autoencoder does not map R^n to R^d");
  }
}

UndersampleResult undersample_columns(const Dataset& records, double keep_prob, Rng rng) {
  if (!(keep_prob >= 0.0 && keep_prob <= 1.0)) {
    throw SpecError("keep_prob must lie in [0, 1]");
  }
  if (records.empty()) throw SpecError("undersample_columns: empty dataset");
  validate(records);

  UndersampleResult result;
  const Index m = records.rows();
  for (const auto& record : records.records) {
    if (record.scale_state != ScaleState::log_minmax) {
      throw SpecError("undersample_columns: record '" + record.id +
                      "' is not preprocessed");
    }
    for (Index j = 0; j < record.cols(); ++j) {
      const Vector column = record.data.col(j);
      const double mean = column.mean();
      const double var =
          (column.array() - mean).square().sum() / static_cast<double>(m);
      result.stds.push_back(std::sqrt(var));
    }
  }

  std::vector<double> sorted = result.stds;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t count = sorted.size();
  result.median_std = count % 2 == 1
                          ? sorted[count / 2]
                          : 0.5 * (sorted[count / 2 - 1] + sorted[count / 2]);

  std::size_t flat = 0;
  for (std::size_t r = 0; r < records.size(); ++r) {
    const auto& record = records.records[r];
    for (Index j = 0; j < record.cols(); ++j, ++flat) {
      const bool keep = result.stds[flat] >= result.median_std
                            ? true
                            : rng.bernoulli(keep_prob);
      if (keep) {
        result.series.push_back(record.data.col(j));
        result.kept.emplace_back(r, j);
      }
    }
  }
  return result;
}

LatentMatrix encode_record(const Spectrum2D& record, const SeqAeBundle& bundle) {
  if (record.rows() != bundle.m || record.cols() != bundle.n) {
    throw ShapeError("encode_record: record is " + std::to_string(record.rows()) + "x" +
                     std::to_string(record.cols()) + ", bundle expects " +
                     std::to_string(bundle.m) + "x" + std::to_string(bundle.n));
  }
  if (record.scale_state != ScaleState::log_minmax) {
    throw SpecError("encode_record: record '" + record.id + "' is not preprocessed");
  }
  // Columns through the first encoder, rows of the result through the second.
  const Matrix z = nn::encode_batch(bundle.first, record.data);        // d x n
  const Matrix e = nn::encode_batch(bundle.second, z.transpose());     // d x d

  LatentMatrix latent;
  latent.E = e.transpose();
  latent.source_id = record.id;
  latent.label = record.label;
  latent.provenance = LatentProvenance::encoded;
  return latent;
}

Spectrum2D decode_record(const LatentMatrix& latent, const SeqAeBundle& bundle) {
  if (latent.E.rows() != bundle.d || latent.E.cols() != bundle.d) {
    throw ShapeError("decode_record: latent side " + std::to_string(latent.E.rows()) +
                     ", bundle expects " + std::to_string(bundle.d));
  }
  const Matrix z_hat = nn::decode_batch(bundle.second, latent.E.transpose());  // n x d
  const Matrix x_hat = nn::decode_batch(bundle.first, z_hat.transpose());      // m x n

  Spectrum2D record;
  record.id = latent.source_id;
  record.data = x_hat;
  record.label = latent.label;
  record.scale_state = ScaleState::log_minmax;
  record.provenance = latent.provenance == LatentProvenance::sampled
                          ? Provenance::synthetic
                          : Provenance::reconstructed;
  return record;
}

namespace {

// Every row of every record's stage-1 encoding, as length-n series.
std::vector<Vector> stage_two_series(const Dataset& records,
                                     const nn::AutoencoderModel& first) {
  std::vector<Vector> series;
  series.reserve(records.size() * static_cast<std::size_t>(first.latent_dim));
  for (const auto& record : records.records) {
    const Matrix z = nn::encode_batch(first, record.data);  // d x n
    for (Index i = 0; i < z.rows(); ++i) series.push_back(z.row(i).transpose());
  }
  return series;
}

}  // namespace

BundleTrainResult train_bundle(const Dataset& train, const Dataset& val, Index d,
                               const nn::TrainConfig& cfg, double keep_prob) {
  if (train.empty() || val.empty()) {
    throw SpecError("train_bundle: empty training or validation dataset");
  }
  if (train.rows() != val.rows() || train.cols() != val.cols()) {
    throw ShapeError("train_bundle: training and validation dimensions differ");
  }
  if (d < 1) throw SpecError("train_bundle: d must be at least 1");

  const Rng root(cfg.seed);
  BundleTrainResult result;
  result.bundle.d = d;
  result.bundle.m = train.rows();
  result.bundle.n = train.cols();

  auto train_sampled = undersample_columns(train, keep_prob, root.child(0));
  auto val_sampled = undersample_columns(val, keep_prob, root.child(1));
  result.first_train_count = train_sampled.series.size();
  result.first_val_count = val_sampled.series.size();

  Rng first_init = root.child(2);
  result.bundle.first =
      nn::make_autoencoder(result.bundle.m, d, cfg.model, first_init);
  nn::TrainConfig first_cfg = cfg;
  first_cfg.seed = root.child(3).seed();
  result.first_history = nn::train(result.bundle.first, train_sampled.series,
                                   val_sampled.series, first_cfg);

  const auto second_train = stage_two_series(train, result.bundle.first);
  const auto second_val = stage_two_series(val, result.bundle.first);
  result.second_train_count = second_train.size();
  result.second_val_count = second_val.size();

  Rng second_init = root.child(4);
  result.bundle.second =
      nn::make_autoencoder(result.bundle.n, d, cfg.model, second_init);
  nn::TrainConfig second_cfg = cfg;
  second_cfg.seed = root.child(5).seed();
  result.second_history =
      nn::train(result.bundle.second, second_train, second_val, second_cfg);

  validate(result.bundle);
  return result;
}

void save_bundle(const SeqAeBundle& bundle, const std::filesystem::path& dir) {
  validate(bundle);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create bundle directory '" + dir.string() + "'");
  nn::save_model(bundle.first, dir / "first.model");
  nn::save_model(bundle.second, dir / "second.model");
  nlohmann::json meta;
  meta["d"] = bundle.d;
  meta["m"] = bundle.m;
  meta["n"] = bundle.n;
  std::ofstream out(dir / "bundle.json", std::ios::trunc);
  if (!out) throw IoError("cannot write '" + (dir / "bundle.json").string() + "'");
  out << meta.dump(2) << "\n";
  if (!out.good()) throw IoError("write failed for bundle metadata");
}

SeqAeBundle load_bundle(const std::filesystem::path& dir) {
  std::ifstream in(dir / "bundle.json");
  if (!in) throw IoError("cannot open '" + (dir / "bundle.json").string() + "'");
  nlohmann::json meta;
  try {
    in >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bundle metadata: " + std::string(e.what()));
  }
  SeqAeBundle bundle;
  bundle.d = meta.at("d").get<Index>();
  bundle.m = meta.at("m").get<Index>();
  bundle.n = meta.at("n").get<Index>();
  bundle.first = nn::load_model(dir / "first.model");
  bundle.second = nn::load_model(dir / "second.model");
  validate(bundle);
  return bundle;
}

std::filesystem::path save_latents(const std::vector<LatentMatrix>& latents,
                                   const std::filesystem::path& dir) {
  if (latents.empty()) throw SpecError("save_latents: nothing to save");
  std::error_code ec;
  std::filesystem::create_directories(dir / "latents", ec);
  if (ec) throw IoError("cannot create '" + (dir / "latents").string() + "'");

  nlohmann::json doc;
  doc["d"] = latents.front().E.rows();
  doc["records"] = nlohmann::json::array();
  std::set<std::string> used;
  for (const auto& latent : latents) {
    std::string base = sanitize_filename(latent.source_id);
    std::string name = base;
    int suffix = 1;
    while (!used.insert(name).second) name = base + "_" + std::to_string(suffix++);
    const std::string rel = "latents/" + name + ".spb";
    save_spb(latent.E, dir / rel);
    nlohmann::json record;
    record["id"] = latent.source_id;
    record["path"] = rel;
    record["label"] = latent.label ? nlohmann::json(latent.label->name) : nlohmann::json();
    record["provenance"] = to_string(latent.provenance);
    doc["records"].push_back(std::move(record));
  }
  const std::filesystem::path manifest_path = dir / "manifest.json";
  std::ofstream out(manifest_path, std::ios::trunc);
  if (!out) throw IoError("cannot write '" + manifest_path.string() + "'");
  out << doc.dump(2) << "\n";
  if (!out.good()) throw IoError("write failed for latent manifest");
  return manifest_path;
}

std::vector<LatentMatrix> load_latents(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open '" + manifest_path.string() + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("latent manifest: " + std::string(e.what()));
  }
  const std::filesystem::path base = manifest_path.parent_path();
  std::vector<LatentMatrix> latents;
  try {
    for (const auto& record : doc.at("records")) {
      LatentMatrix latent;
      latent.source_id = record.at("id");
      latent.E = load_spb(base / record.at("path").get<std::string>());
      if (record.contains("label") && !record["label"].is_null()) {
        latent.label = Label{record["label"].get<std::string>()};
      }
      latent.provenance = latent_provenance_from_string(
          record.value("provenance", std::string("encoded")));
      if (latent.E.rows() != latent.E.cols()) {
        throw FormatError("latent '" + latent.source_id + "' is not square");
      }
      latents.push_back(std::move(latent));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("latent manifest: " + std::string(e.what()));
  }
  return latents;
}

}  // namespace spectraforge::seqae
