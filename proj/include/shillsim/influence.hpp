#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "shillsim/inference.hpp"
#include "shillsim/model_types.hpp"

namespace shillsim {

inline constexpr std::size_t kDefaultBins = 20;

/// Bin of a rating among `bins` uniform bins on [0, 1]. The unrated value 0
/// lands in bin 0 and a rating of exactly 1 in the last bin.
std::size_t rating_bin(double rating, std::size_t bins);

/// Per-cell rating histograms over an ensemble of final matrices.
class RatingHistogramField {
 public:
  RatingHistogramField(std::size_t users, std::size_t movies, std::size_t bins);

  std::size_t users() const noexcept { return users_; }
  std::size_t movies() const noexcept { return movies_; }
  std::size_t bins() const noexcept { return bins_; }
  std::size_t n_runs() const noexcept { return n_runs_; }

  void add(const RatingMatrix& ratings);
  /// Adds another field's counts (same shape).
  void merge(const RatingHistogramField& other);

  std::span<const std::uint32_t> cell(std::size_t user, std::size_t movie) const {
    return {counts_.data() + (user * movies_ + movie) * bins_, bins_};
  }
  /// Normalized histogram of one cell.
  std::vector<double> cell_distribution(std::size_t user, std::size_t movie) const;

  const std::vector<std::uint32_t>& counts() const noexcept { return counts_; }
  bool operator==(const RatingHistogramField&) const = default;

 private:
  std::size_t users_;
  std::size_t movies_;
  std::size_t bins_;
  std::size_t n_runs_ = 0;
  std::vector<std::uint32_t> counts_;
};

/// Jensen-Shannon distance with base-2 logarithms: sqrt of
/// 0.5 KL(p || m) + 0.5 KL(q || m), m = (p + q) / 2. Lies in [0, 1].
/// Throws InvalidArgument on a support mismatch or an input that is not a
/// distribution (negative entries, sum off 1 by more than 1e-9).
double js_distance(std::span<const double> p, std::span<const double> q);

struct EnsembleOptions {
  std::size_t bins = kDefaultBins;
  std::size_t threads = 0;
};

/// Bins the final matrix of `n_runs` simulations. Run k uses stream
/// (seed, k); latents are redrawn every run except for sites pinned by
/// `pinned`.
RatingHistogramField predictive_histograms(const ModelConfig& config, const DisarmMask& mask, std::size_t n_runs,
                                           std::uint64_t seed, const LatentOverride* pinned = nullptr,
                                           const EnsembleOptions& options = {});

/// Same, with every latent of run k pinned to `per_run_latents[k]`.
RatingHistogramField predictive_histograms(const ModelConfig& config, const DisarmMask& mask,
                                           std::span<const LatentAssignment> per_run_latents, std::uint64_t seed,
                                           const EnsembleOptions& options = {});

struct InfluenceReport {
  double avg_js = 0.0;
  RatingMatrix per_cell_js;
  DisarmMask mask;
  std::size_t n_runs = 0;
  std::uint64_t seed = 0;
  std::size_t bins = kDefaultBins;
  std::string mode;  // "prior" or "posterior"
};

/// Per-cell JS distances between two fields of equal shape and their mean.
RatingMatrix per_cell_js(const RatingHistogramField& a, const RatingHistogramField& b);

struct InfluenceOptions {
  std::size_t bins = kDefaultBins;
  std::size_t threads = 0;
  /// Prior-predictive mode only: latents pinned in both ensembles.
  const LatentOverride* pinned = nullptr;
};

/// Prior-predictive influence: JS between p(R) and p(R | mask). The armed
/// and disarmed ensembles run on independent seeds derived from `seed`.
InfluenceReport influence(const ModelConfig& config, const DisarmMask& mask, std::size_t n_runs, std::uint64_t seed,
                          const InfluenceOptions& options = {});

/// Posterior-predictive influence: latents for each run are drawn by
/// weighted resampling from `posterior`, then both ensembles re-simulate
/// forward with those latents. Throws DegeneratePosterior when ESS = 0.
InfluenceReport influence(const ModelConfig& config, const DisarmMask& mask, std::size_t n_runs, std::uint64_t seed,
                          const RatingMatrix& observed, const EmpiricalPosterior& posterior,
                          const InfluenceOptions& options = {});

/// Draws `n` latent assignments from the posterior by multinomial resampling.
std::vector<LatentAssignment> resample_latents(const EmpiricalPosterior& posterior, std::size_t n,
                                               std::uint64_t seed);

/// Spearman rank correlation (average ranks for ties). NaN when either
/// input is constant.
double spearman(std::span<const double> x, std::span<const double> y);

struct SweepRow {
  double tau_sigma = 0.0;
  std::vector<std::uint64_t> seeds;
  std::vector<double> avg_js;  // one per seed
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation across seeds
};

struct SweepTable {
  std::vector<SweepRow> rows;
  std::size_t n_runs = 0;
  std::size_t bins = kDefaultBins;
  double spearman = 0.0;  // between tau_sigma and the per-row mean
};

struct SweepOptions {
  std::uint64_t base_seed = 0;  // seeds are base_seed, base_seed + 1, ...
  std::size_t bins = kDefaultBins;
  std::size_t threads = 0;
  /// Fixed malicious set. When absent each seed draws one from the prior on
  /// a dedicated stream; it is shared by every grid value.
  std::optional<std::vector<std::uint8_t>> malicious;
};

/// Influence of disarming the malicious users, for every target spread in
/// `tau_sigma_grid` and every seed. Within a seed the malicious set is pinned
/// and the other latents are redrawn each run.
SweepTable coordination_sweep(const ModelConfig& config, std::span<const double> tau_sigma_grid, std::size_t n_seeds,
                              std::size_t n_runs, const SweepOptions& options = {});

/// Malicious set a sweep seed uses when none is fixed.
std::vector<std::uint8_t> sweep_malicious_set(const ModelConfig& config, std::uint64_t seed);

}  // namespace shillsim
