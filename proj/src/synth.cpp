#include "spectraforge/synth.hpp"

#include <Eigen/Cholesky>
#include <cmath>

#include <json.hpp>

#include "spectraforge/io.hpp"

namespace spectraforge::synth {

CholFactor cholesky(const Matrix& cov) {
  if (cov.rows() != cov.cols()) throw ShapeError("cholesky: matrix is not square");
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw NumericsError("cholesky: matrix is not positive definite");
  }
  return CholFactor{Matrix(llt.matrixL())};
}

std::map<Label, std::vector<seqae::LatentMatrix>> group_by_label(
    const std::vector<seqae::LatentMatrix>& latents) {
  std::map<Label, std::vector<seqae::LatentMatrix>> groups;
  for (const auto& latent : latents) {
    if (!latent.label) {
      throw SpecError("group_by_label: latent '" + latent.source_id + "' has no label");
    }
    groups[*latent.label].push_back(latent);
  }
  return groups;
}

LabelStats fit_stats(const std::vector<seqae::LatentMatrix>& group, double ridge) {
  if (group.size() < 2) {
    throw StatsError("fit_stats: need at least 2 latents, got " +
                     std::to_string(group.size()));
  }
  const Index d = group.front().E.rows();
  const Index dim = d * d;
  for (const auto& latent : group) {
    if (latent.E.rows() != d || latent.E.cols() != d) {
      throw ShapeError("fit_stats: latent sides disagree within the group");
    }
  }

  LabelStats stats;
  if (group.front().label) stats.label = *group.front().label;
  stats.n_samples = static_cast<long>(group.size());

  Matrix flat(static_cast<Index>(group.size()), dim);
  for (std::size_t i = 0; i < group.size(); ++i) {
    flat.row(static_cast<Index>(i)) = flatten(group[i].E).transpose();
  }
  stats.mean = flat.colwise().mean().transpose();

  const Matrix centered = flat.rowwise() - stats.mean.transpose();
  const Matrix raw_cov =
      centered.transpose() * centered / static_cast<double>(group.size() - 1);

  double base = ridge > 0.0
                    ? ridge
                    : 1e-6 * raw_cov.trace() / static_cast<double>(dim);
  base = std::max(base, 1e-9);

  // Double the loading until the factorization succeeds; rank deficiency is
  // expected whenever the group is smaller than d^2.
  for (int attempt = 0; attempt < 64; ++attempt) {
    stats.cov = raw_cov + base * Matrix::Identity(dim, dim);
    stats.cov = 0.5 * (stats.cov + stats.cov.transpose());  // enforce exact symmetry
    Eigen::LLT<Matrix> llt(stats.cov);
    if (llt.info() == Eigen::Success) {
      stats.ridge = base;
      return stats;
    }
    base *= 2.0;
  }
  throw NumericsError("fit_stats: covariance not positive definite even after ridge escalation");
}

std::vector<seqae::LatentMatrix> sample_latent(const LabelStats& stats,
                                               std::size_t count, Rng rng) {
  const Index dim = stats.mean.size();
  if (stats.cov.rows() != dim || stats.cov.cols() != dim) {
    throw ShapeError("sample_latent: mean/cov dimensions disagree");
  }
  const auto side = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(dim))));
  if (side * side != dim) {
    throw ShapeError("sample_latent: mean length is not a perfect square");
  }
  const CholFactor factor = cholesky(stats.cov);

  std::vector<seqae::LatentMatrix> samples;
  samples.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    Vector z(dim);
    for (Index i = 0; i < dim; ++i) z(i) = rng.normal();
    const Vector value = stats.mean + factor.lower * z;
    seqae::LatentMatrix latent;
    latent.E = unflatten(value, side, side);
    latent.source_id = "sampled-" + stats.label.name + "-" + std::to_string(k);
    latent.label = stats.label;
    latent.provenance = seqae::LatentProvenance::sampled;
    samples.push_back(std::move(latent));
  }
  return samples;
}

Dataset synthesize(const std::vector<seqae::LatentMatrix>& latents,
                   const seqae::SeqAeBundle& bundle, double multiplier, double ridge,
                   Rng rng) {
  if (multiplier < 0.0) throw SpecError("synthesize: multiplier must be non-negative");
  auto groups = group_by_label(latents);

  Dataset synthetic;
  for (const auto& [label, group] : groups) synthetic.labels.push_back(label);

  std::uint64_t stream = 0;
  for (const auto& [label, group] : groups) {
    const auto wanted = static_cast<std::size_t>(
        std::ceil(multiplier * static_cast<double>(group.size())));
    ++stream;
    if (wanted == 0) continue;
    if (group.size() < 2) {
      throw StatsError("synthesize: label '" + label.name +
                       "' has fewer than 2 latents");
    }
    const LabelStats stats = fit_stats(group, ridge);
    const auto samples = sample_latent(stats, wanted, rng.child(stream));
    std::size_t index = 0;
    for (const auto& sample : samples) {
      Spectrum2D record = seqae::decode_record(sample, bundle);
      record.id = "synthetic-" + label.name + "-" + std::to_string(index++);
      synthetic.records.push_back(std::move(record));
    }
  }
  validate(synthetic);
  return synthetic;
}

void save_stats(const LabelStats& stats, const std::filesystem::path& path) {
  nlohmann::json header;
  header["format"] = "spectraforge.stats";
  header["version"] = 1;
  header["label"] = stats.label.name;
  header["n_samples"] = stats.n_samples;
  header["ridge"] = stats.ridge;
  write_blob(path, header, {Matrix(stats.mean), stats.cov});
}

LabelStats load_stats(const std::filesystem::path& path) {
  auto [header, blocks] = read_blob(path);
  if (header.value("format", std::string()) != "spectraforge.stats") {
    throw FormatError(path.string() + ": not a statistics file");
  }
  if (blocks.size() != 2) {
    throw FormatError(path.string() + ": expected mean and covariance blocks");
  }
  LabelStats stats;
  stats.label = Label{header.at("label").get<std::string>()};
  stats.n_samples = header.at("n_samples").get<long>();
  stats.ridge = header.at("ridge").get<double>();
  stats.mean = blocks[0].col(0);
  stats.cov = blocks[1];
  if (stats.cov.rows() != stats.mean.size() || stats.cov.cols() != stats.mean.size()) {
    throw FormatError(path.string() + ": mean/covariance dimensions disagree");
  }
  return stats;
}

}  // namespace spectraforge::synth
