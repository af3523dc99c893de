#include "shillsim/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "shillsim/errors.hpp"
#include "shillsim/parallel.hpp"
#include "shillsim/rng.hpp"

namespace shillsim {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Streaming log-sum-exp.
class LogAccumulator {
 public:
  void add(double x) {
    if (x == kNegInf || std::isnan(x)) return;
    if (x > max_) {
      sum_ = sum_ * std::exp(max_ - x) + 1.0;
      max_ = x;
    } else {
      sum_ += std::exp(x - max_);
    }
  }
  double value() const { return max_ == kNegInf ? kNegInf : max_ + std::log(sum_); }

 private:
  double max_ = kNegInf;
  double sum_ = 0.0;
};

Trace compact_copy(const Trace& t) {
  Trace out;
  out.log_prior = t.log_prior;
  out.log_likelihood = t.log_likelihood;
  out.latents = t.latents;
  out.result = t.result;
  return out;
}

}  // namespace

double log_sum_exp(const std::vector<double>& x) {
  LogAccumulator acc;
  for (double v : x) acc.add(v);
  return acc.value();
}

std::vector<double> EmpiricalPosterior::normalized_log_weights() const {
  if (empty()) throw InvalidArgument("empty posterior");
  const double total = log_sum_exp(log_weights);
  if (!std::isfinite(total)) throw DegeneratePosterior("every importance weight is zero (ESS = 0)");
  std::vector<double> out(log_weights.size());
  std::transform(log_weights.begin(), log_weights.end(), out.begin(), [total](double lw) {
    return std::isnan(lw) ? kNegInf : lw - total;
  });
  return out;
}

std::vector<double> EmpiricalPosterior::normalized_weights() const {
  std::vector<double> w = normalized_log_weights();
  for (auto& v : w) v = std::exp(v);
  return w;
}

double EmpiricalPosterior::effective_sample_size() const {
  if (empty()) return 0.0;
  const double total = log_sum_exp(log_weights);
  if (!std::isfinite(total)) return 0.0;
  double sum_sq = 0.0;
  for (double lw : log_weights) {
    if (std::isnan(lw)) continue;
    const double w = std::exp(lw - total);
    sum_sq += w * w;
  }
  return 1.0 / sum_sq;
}

double EmpiricalPosterior::log_mean_weight() const {
  if (empty()) throw InvalidArgument("empty posterior");
  return log_sum_exp(log_weights) - std::log(static_cast<double>(log_weights.size()));
}

// ---------------------------------------------------------------------------

EmpiricalPosterior importance_sample(const ModelConfig& config, const RatingMatrix& observed, std::size_t n_traces,
                                     std::uint64_t seed, const ImportanceOptions& options) {
  if (n_traces == 0) throw InvalidArgument("importance_sample: n_traces must be at least 1");
  config.validate();

  EmpiricalPosterior posterior;
  posterior.traces.resize(n_traces);
  posterior.log_weights.resize(n_traces);
  parallel_for(n_traces, options.threads, [&](std::size_t k) {
    Rng rng(seed, k);
    posterior.traces[k] = run_conditioned(config, rng, observed, options.record_sites);
    posterior.log_weights[k] = posterior.traces[k].log_likelihood;
  });
  return posterior;
}

MhResult mh_chain(const ModelConfig& config, const RatingMatrix& observed, std::size_t n_steps, std::uint64_t seed,
                  const MhOptions& options) {
  if (n_steps == 0) throw InvalidArgument("mh_chain: n_steps must be at least 1");
  if (options.thin == 0) throw InvalidArgument("mh_chain: thin must be at least 1");
  if (!(options.burn_in_fraction >= 0.0 && options.burn_in_fraction < 1.0)) {
    throw InvalidArgument("mh_chain: burn-in fraction must lie in [0, 1)");
  }

  Rng rng(seed, streams::kMhChain);
  Trace current = run_conditioned(config, rng, observed);
  for (int attempt = 0; !std::isfinite(current.log_joint()) && attempt < 10000; ++attempt) {
    current = run_conditioned(config, rng, observed);
  }
  if (!std::isfinite(current.log_joint())) throw DegeneratePosterior("mh_chain: no initial trace with finite density");

  MhResult result;
  const auto burn_in = static_cast<std::size_t>(std::floor(options.burn_in_fraction * static_cast<double>(n_steps)));

  for (std::size_t step = 0; step < n_steps; ++step) {
    const std::vector<Address> candidates = current.sampled_addresses();
    const Address address = candidates[rng.below(candidates.size())];
    SiteProposal proposal = resample_site(current, address, rng, config, &observed);

    const double log_alpha = proposal.trace.log_joint() - current.log_joint() + proposal.log_mh_correction;
    const bool accept = std::log(rng.uniform01()) < log_alpha;

    auto& kind = result.by_kind[static_cast<std::size_t>(address.kind)];
    ++kind.proposed;
    kind.changed += proposal.value_changed;
    if (accept) {
      ++kind.accepted;
      kind.changed_accepted += proposal.value_changed;
      ++result.accepted;
      current = std::move(proposal.trace);
    }
    ++result.steps;

    if (step >= burn_in && (step - burn_in) % options.thin == 0) {
      result.posterior.traces.push_back(compact_copy(current));
      result.posterior.log_weights.push_back(0.0);
    }
  }
  return result;
}

// ---------------------------------------------------------------------------

PosteriorSummary summarize(const EmpiricalPosterior& posterior, std::size_t n_movies) {
  if (posterior.empty()) throw InvalidArgument("summarize: empty posterior");
  const std::vector<double> log_w = posterior.normalized_log_weights();

  const Trace& first = posterior.traces.front();
  const std::size_t n_users = first.latents.n_users();
  const std::size_t users = first.result.users();
  const std::size_t movies = first.result.movies();

  PosteriorSummary s;
  s.n_traces = posterior.size();
  s.effective_sample_size = posterior.effective_sample_size();
  s.p_malicious.assign(n_users, 0.0);
  s.posterior_predictive_mean = RatingMatrix(users, movies);

  std::vector<LogAccumulator> by_count(n_users + 1);
  std::vector<std::vector<LogAccumulator>> target_if_malicious(n_users, std::vector<LogAccumulator>(n_movies));
  std::vector<std::vector<LogAccumulator>> target_any(n_users, std::vector<LogAccumulator>(n_movies));

  for (std::size_t k = 0; k < posterior.size(); ++k) {
    const Trace& t = posterior.traces[k];
    const double lw = log_w[k];
    const double w = std::exp(lw);
    by_count[t.latents.n_malicious()].add(lw);
    for (std::size_t i = 0; i < n_users; ++i) {
      const std::size_t movie = t.latents.target_movie(i, n_movies);
      target_any[i][movie].add(lw);
      if (t.latents.malicious[i]) {
        s.p_malicious[i] += w;
        target_if_malicious[i][movie].add(lw);
      }
    }
    if (w > 0.0) {
      auto out = s.posterior_predictive_mean.data();
      auto in = t.result.data();
      for (std::size_t c = 0; c < out.size(); ++c) out[c] += w * in[c];
    }
  }

  s.log_p_n_malicious.resize(n_users + 1);
  s.p_n_malicious.resize(n_users + 1);
  for (std::size_t c = 0; c <= n_users; ++c) {
    s.log_p_n_malicious[c] = by_count[c].value();
    s.p_n_malicious[c] = std::min(1.0, std::exp(s.log_p_n_malicious[c]));
  }
  for (auto& p : s.p_malicious) p = std::min(1.0, p);

  auto normalize = [n_movies](const std::vector<LogAccumulator>& acc) {
    std::vector<double> logs(n_movies);
    for (std::size_t m = 0; m < n_movies; ++m) logs[m] = acc[m].value();
    const double total = log_sum_exp(logs);
    std::vector<double> probs(n_movies, 0.0);
    if (!std::isfinite(total)) return probs;
    for (std::size_t m = 0; m < n_movies; ++m) probs[m] = std::exp(logs[m] - total);
    return probs;
  };

  s.target_marginal.resize(n_users);
  s.target_marginal_conditional.assign(n_users, 0);
  for (std::size_t i = 0; i < n_users; ++i) {
    std::vector<double> conditional = normalize(target_if_malicious[i]);
    const bool any = std::any_of(conditional.begin(), conditional.end(), [](double p) { return p > 0.0; });
    s.target_marginal_conditional[i] = any ? 1 : 0;
    s.target_marginal[i] = any ? std::move(conditional) : normalize(target_any[i]);
  }
  return s;
}

}  // namespace shillsim
