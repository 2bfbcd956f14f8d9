#pragma once

#include <filesystem>
#include <map>

#include "spectraforge/rng.hpp"
#include "spectraforge/seqae.hpp"
#include "spectraforge/types.hpp"

namespace spectraforge::synth {

// Per-label latent statistics: mean and covariance of the row-major flattened
// latent matrices, with the diagonal loading actually applied.
struct LabelStats {
  Label label;
  Vector mean;   // length d*d
  Matrix cov;    // d*d x d*d, symmetric positive definite after the ridge
  long n_samples = 0;
  double ridge = 0.0;
};

struct CholFactor {
  Matrix lower;  // cov = lower * lower^T
};

// Eigen LLT behind the spec contract; throws NumericsError when the matrix is
// not positive definite.
CholFactor cholesky(const Matrix& cov);

std::map<Label, std::vector<seqae::LatentMatrix>> group_by_label(
    const std::vector<seqae::LatentMatrix>& latents);

// Unbiased sample mean/covariance plus diagonal loading. A non-positive
// requested ridge selects the automatic policy 1e-6 * trace/d^2; the base is
// floored at 1e-9 and doubled until the Cholesky factorization succeeds. The
// applied value is recorded in the result.
LabelStats fit_stats(const std::vector<seqae::LatentMatrix>& group, double ridge);

std::vector<seqae::LatentMatrix> sample_latent(const LabelStats& stats,
                                               std::size_t count, Rng rng);

// Draws ceil(multiplier * N_label) latents per label and decodes them into
// synthetic records; class proportions follow the input latents.
Dataset synthesize(const std::vector<seqae::LatentMatrix>& latents,
                   const seqae::SeqAeBundle& bundle, double multiplier, double ridge,
                   Rng rng);

void save_stats(const LabelStats& stats, const std::filesystem::path& path);
LabelStats load_stats(const std::filesystem::path& path);

}  // namespace spectraforge::synth
