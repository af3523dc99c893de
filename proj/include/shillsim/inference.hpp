#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "shillsim/model_types.hpp"
#include "shillsim/trace.hpp"

namespace shillsim {

/// Weighted collection of traces. Log weights are kept unnormalized; the
/// normalized weights are exp-normalized with max subtraction on demand.
struct EmpiricalPosterior {
  std::vector<Trace> traces;
  std::vector<double> log_weights;

  std::size_t size() const noexcept { return traces.size(); }
  bool empty() const noexcept { return traces.empty(); }

  /// Normalized weights summing to 1. Throws DegeneratePosterior if no
  /// weight is positive and finite, InvalidArgument if empty.
  std::vector<double> normalized_weights() const;
  /// Normalized log weights (log w_k - logsumexp).
  std::vector<double> normalized_log_weights() const;
  /// Kish effective sample size 1 / sum w^2; 0 for a degenerate posterior.
  double effective_sample_size() const;
  /// log of the mean unnormalized weight; the marginal likelihood estimate
  /// when the weights are likelihoods under prior proposals.
  double log_mean_weight() const;
};

/// log(sum exp(x)). Returns -inf for an empty or all -inf input.
double log_sum_exp(const std::vector<double>& x);

struct ImportanceOptions {
  std::size_t threads = 0;      // 0 = all cores
  bool record_sites = false;    // traces keep only latents, weights and result
};

/// Likelihood-weighted importance sampling with the prior as proposal. Trace
/// k runs on stream (seed, k) and carries log weight = log likelihood.
EmpiricalPosterior importance_sample(const ModelConfig& config, const RatingMatrix& observed, std::size_t n_traces,
                                     std::uint64_t seed, const ImportanceOptions& options = {});

struct MhOptions {
  double burn_in_fraction = 0.1;
  std::size_t thin = 1;
};

/// Acceptance counts per site kind. `changed` counts proposals whose redraw
/// differs from the current value; a redraw of the same value (common for
/// Bernoulli sites) is accepted trivially and says nothing about mixing.
struct SiteKindStats {
  std::uint64_t proposed = 0;
  std::uint64_t accepted = 0;
  std::uint64_t changed = 0;
  std::uint64_t changed_accepted = 0;

  double acceptance_rate() const { return proposed ? double(accepted) / double(proposed) : 0.0; }
  double changed_acceptance_rate() const { return changed ? double(changed_accepted) / double(changed) : 0.0; }
};

struct MhResult {
  EmpiricalPosterior posterior;  // unit weights, after burn-in and thinning
  std::array<SiteKindStats, kSiteKindCount> by_kind{};
  std::uint64_t steps = 0;
  std::uint64_t accepted = 0;

  double acceptance_rate() const { return steps ? double(accepted) / double(steps) : 0.0; }
  const SiteKindStats& stats(SiteKind kind) const { return by_kind[static_cast<std::size_t>(kind)]; }
};

/// Single-site lightweight Metropolis-Hastings on the conditioned model. Each
/// step picks a sampled site uniformly, proposes a prior redraw via
/// resample_site and accepts with min(1, exp(delta log joint + correction)).
MhResult mh_chain(const ModelConfig& config, const RatingMatrix& observed, std::size_t n_steps, std::uint64_t seed,
                  const MhOptions& options = {});

struct PosteriorSummary {
  std::vector<double> p_malicious;                 // per user
  std::vector<double> p_n_malicious;               // index = number of malicious users
  std::vector<double> log_p_n_malicious;           // same, in log space (no underflow)
  std::vector<std::vector<double>> target_marginal;  // per user, over movie indices
  std::vector<std::uint8_t> target_marginal_conditional;  // 1 if computed over beta_i = 1 traces
  RatingMatrix posterior_predictive_mean;
  double effective_sample_size = 0.0;
  std::size_t n_traces = 0;
};

/// Weighted marginals over malicious flags, malicious count and targets.
/// A user's target marginal is taken over traces where that user is
/// malicious; if no such trace carries weight it falls back to all traces
/// and `target_marginal_conditional` is 0 for that user.
PosteriorSummary summarize(const EmpiricalPosterior& posterior, std::size_t n_movies);

}  // namespace shillsim
