#pragma once

#include <cstddef>
#include <span>
#include <variant>

#include "shillsim/rng.hpp"

namespace shillsim {

// ---------------------------------------------------------------------------
// Standard normal helpers
// ---------------------------------------------------------------------------

/// Standard normal CDF via erfc (absolute error well below 1e-12).
double normal_cdf(double z);

/// log of the upper tail mass Q(z) = 1 - Phi(z). Accurate far into the tail,
/// past the point where erfc underflows.
double log_normal_upper_tail(double z);

/// log(Phi(b) - Phi(a)) for a < b, computed without cancellation on either
/// side of zero.
double log_normal_interval_mass(double a, double b);

/// Inverse of the standard normal CDF (Wichura, AS241; relative accuracy
/// about 1e-16). Returns -inf / +inf at p = 0 / 1.
double normal_quantile(double p);

// ---------------------------------------------------------------------------
// Primitive distributions
// ---------------------------------------------------------------------------

class Uniform {
 public:
  Uniform(double low, double high);

  double low() const noexcept { return low_; }
  double high() const noexcept { return high_; }

  double sample(Rng& rng) const;
  double log_pdf(double x) const;
  double cdf(double x) const;

 private:
  double low_;
  double high_;
  double log_width_;
};

class Bernoulli {
 public:
  explicit Bernoulli(double p);

  double p() const noexcept { return p_; }

  /// Returns 0 or 1.
  int sample(Rng& rng) const;
  /// log P(x); -inf for values other than 0 and 1.
  double log_pmf(int x) const;

 private:
  double p_;
};

struct TruncatedNormalParams {
  double mean = 0.0;
  double std = 1.0;
  double low = 0.0;
  double high = 1.0;
};

/// Normal(mean, std) restricted to [low, high] and renormalized. Sampling is
/// exact inverse-CDF (tail-aware), with an exponential-proposal rejection
/// sampler for truncation windows that lie beyond double-precision tails.
class TruncatedNormal {
 public:
  explicit TruncatedNormal(const TruncatedNormalParams& params);
  TruncatedNormal(double mean, double std, double low, double high)
      : TruncatedNormal(TruncatedNormalParams{mean, std, low, high}) {}

  const TruncatedNormalParams& params() const noexcept { return params_; }

  double sample(Rng& rng) const;
  double log_pdf(double x) const;
  double pdf(double x) const;
  double cdf(double x) const;

  /// log of the normalizing mass Phi(b) - Phi(a) in standardized units.
  double log_mass() const noexcept { return log_mass_; }

 private:
  double sample_far_tail(Rng& rng) const;

  TruncatedNormalParams params_;
  double alpha_;  // standardized lower bound
  double beta_;   // standardized upper bound
  double log_mass_;
  double log_norm_;  // log(std) + log_mass + 0.5 log(2 pi)
};

/// Categorical over indices [0, weights.size()) with probabilities
/// proportional to non-negative weights. An all-zero weight vector is
/// treated as uniform. The weights are viewed, not copied; they must outlive
/// the distribution object.
class Categorical {
 public:
  explicit Categorical(std::span<const double> weights);

  std::size_t size() const noexcept { return weights_.size(); }
  bool uniform_fallback() const noexcept { return total_ == 0.0; }

  std::size_t sample(Rng& rng) const;
  double log_pmf(std::size_t index) const;

 private:
  std::span<const double> weights_;
  double total_ = 0.0;
};

using Distribution = std::variant<Uniform, Bernoulli, TruncatedNormal, Categorical>;

/// Draws from any primitive; discrete outcomes are returned as doubles.
double sample(const Distribution& dist, Rng& rng);

/// Log density (continuous) or log mass (discrete) of a value.
double log_density(const Distribution& dist, double value);

}  // namespace shillsim
