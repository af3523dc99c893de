#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "shillsim/distributions.hpp"
#include "shillsim/model_types.hpp"
#include "shillsim/rng.hpp"

namespace shillsim {

enum class SiteKind : std::uint8_t { user_taste, malicious, target, pick, rating };

inline constexpr std::size_t kSiteKindCount = 5;

const char* to_string(SiteKind kind);

/// Structured label of a random choice. Unused coordinates stay zero, so an
/// address is unique within a trace and identical across executions that
/// take the same control path.
struct Address {
  SiteKind kind = SiteKind::user_taste;
  std::uint32_t user = 0;
  std::uint32_t movie = 0;
  std::uint32_t step = 0;

  static Address user_taste(std::size_t i) { return {SiteKind::user_taste, narrow(i), 0, 0}; }
  static Address malicious(std::size_t i) { return {SiteKind::malicious, narrow(i), 0, 0}; }
  static Address target(std::size_t i) { return {SiteKind::target, narrow(i), 0, 0}; }
  static Address pick(std::size_t i, std::size_t t) { return {SiteKind::pick, narrow(i), 0, narrow(t)}; }
  static Address rating(std::size_t i, std::size_t j, std::size_t t) {
    return {SiteKind::rating, narrow(i), narrow(j), narrow(t)};
  }

  auto operator<=>(const Address&) const = default;

 private:
  static std::uint32_t narrow(std::size_t v) { return static_cast<std::uint32_t>(v); }
};

std::string to_string(const Address& address);

enum class SiteRole : std::uint8_t { sampled, observed };

struct SiteRecord {
  double value = 0.0;
  double log_density = 0.0;
  SiteRole role = SiteRole::sampled;
};

/// One recorded execution of the rating model.
///
/// `log_prior` sums the log densities of sampled sites and `log_likelihood`
/// those of observed sites. `sites` may be left empty when a caller only
/// needs the weights, latents and resulting matrix (importance sampling keeps
/// up to 1e6 traces).
struct Trace {
  std::map<Address, SiteRecord> sites;
  double log_prior = 0.0;
  double log_likelihood = 0.0;
  LatentAssignment latents;
  RatingMatrix result;

  double log_joint() const noexcept { return log_prior + log_likelihood; }
  const SiteRecord* find(const Address& address) const;
  /// Sampled (non-observed) sites in address order; the MH proposal set.
  std::vector<Address> sampled_addresses() const;
  std::size_t sampled_count() const;
};

/// Interface the generative program talks to. Implementations decide whether
/// a statement is drawn, replayed, pinned, or scored against data.
class Context {
 public:
  virtual ~Context() = default;
  /// A latent or pick statement.
  virtual double sample(const Address& address, const Distribution& dist) = 0;
  /// A rating statement for cell (address.user, address.movie).
  virtual double rate_cell(const Address& address, const TruncatedNormal& dist) = 0;
};

/// The Context used by every execution mode.
///
///  - forward:     every statement is drawn from its prior.
///  - conditioned: rating statements take the observed cell value and add its
///                 log density to the likelihood; everything else is drawn.
///  - replay:      statements whose address exists in `replay_source` reuse
///                 the recorded value; others (and `resample`) are drawn
///                 fresh.
///  - pinned:      latent sites listed in `pinned` take the given value after
///                 consuming the draw they would have made.
class TraceRecorder final : public Context {
 public:
  struct Options {
    const RatingMatrix* observed = nullptr;
    const LatentOverride* pinned = nullptr;
    const Trace* replay_source = nullptr;
    const Address* resample = nullptr;
    bool record_sites = true;
  };

  TraceRecorder(Rng& rng, const Options& options) : rng_(rng), options_(options) {}

  double sample(const Address& address, const Distribution& dist) override;
  double rate_cell(const Address& address, const TruncatedNormal& dist) override;

  double log_prior() const noexcept { return log_prior_; }
  double log_likelihood() const noexcept { return log_likelihood_; }
  /// Sum of log densities of sites drawn fresh during a replay (excluding
  /// the resampled site).
  double fresh_log_density() const noexcept { return fresh_log_density_; }
  bool resample_hit() const noexcept { return resample_hit_; }
  double resampled_value() const noexcept { return resampled_value_; }
  double resampled_log_density() const noexcept { return resampled_log_density_; }

  std::map<Address, SiteRecord> take_sites() { return std::move(sites_); }

 private:
  bool pinned_value(const Address& address, double& value) const;
  void record(const Address& address, double value, double log_density, SiteRole role);

  Rng& rng_;
  Options options_;
  std::map<Address, SiteRecord> sites_;
  double log_prior_ = 0.0;
  double log_likelihood_ = 0.0;
  double fresh_log_density_ = 0.0;
  bool resample_hit_ = false;
  double resampled_value_ = 0.0;
  double resampled_log_density_ = 0.0;
};

/// Executes the rating model under `recorder` and packages the trace.
Trace execute_trace(const ModelConfig& config, TraceRecorder& recorder, const DisarmMask* mask = nullptr);

/// Unmodified stochastic simulator: log_likelihood is 0.
Trace run_forward(const ModelConfig& config, Rng& rng, bool record_sites = true);

/// Prior-sampled latents and picks; every rating statement is scored against
/// the observed cell it lands on.
Trace run_conditioned(const ModelConfig& config, Rng& rng, const RatingMatrix& observed, bool record_sites = true);

/// Re-executes the model reusing every recorded value. Sites the source
/// never visited are drawn from `rng`.
Trace replay(const Trace& source, const ModelConfig& config, Rng& rng, const RatingMatrix* observed = nullptr);

struct SiteProposal {
  Trace trace;
  /// log [K / K' * p(stale) / p'(fresh) * q(old value) / q(new value)],
  /// so acceptance is min(1, exp(delta log joint + correction)).
  double log_mh_correction = 0.0;
  bool value_changed = false;
};

/// Single-site lightweight MH proposal: redraws `address` from its prior and
/// re-executes the model around it. Throws InvalidArgument if `address` is
/// not a sampled site of `current` (whose sites must be recorded).
SiteProposal resample_site(const Trace& current, const Address& address, Rng& rng, const ModelConfig& config,
                           const RatingMatrix* observed);

}  // namespace shillsim
