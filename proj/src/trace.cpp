#include "shillsim/trace.hpp"

#include <cmath>
#include <iterator>

#include "shillsim/errors.hpp"
#include "shillsim/rating_model.hpp"

namespace shillsim {

const char* to_string(SiteKind kind) {
  switch (kind) {
    case SiteKind::user_taste: return "upsilon";
    case SiteKind::malicious: return "beta";
    case SiteKind::target: return "tau";
    case SiteKind::pick: return "pick";
    case SiteKind::rating: return "rating";
  }
  return "?";
}

std::string to_string(const Address& a) {
  std::string out = to_string(a.kind);
  out += '(' + std::to_string(a.user);
  if (a.kind == SiteKind::rating) out += ',' + std::to_string(a.movie);
  if (a.kind == SiteKind::rating || a.kind == SiteKind::pick) out += ",t=" + std::to_string(a.step);
  return out + ')';
}

const SiteRecord* Trace::find(const Address& address) const {
  auto it = sites.find(address);
  return it == sites.end() ? nullptr : &it->second;
}

std::vector<Address> Trace::sampled_addresses() const {
  std::vector<Address> out;
  out.reserve(sites.size());
  for (const auto& [address, site] : sites) {
    if (site.role == SiteRole::sampled) out.push_back(address);
  }
  return out;
}

std::size_t Trace::sampled_count() const {
  std::size_t n = 0;
  for (const auto& entry : sites) n += entry.second.role == SiteRole::sampled;
  return n;
}

// ---------------------------------------------------------------------------

bool TraceRecorder::pinned_value(const Address& address, double& value) const {
  const LatentOverride* pinned = options_.pinned;
  if (!pinned) return false;
  switch (address.kind) {
    case SiteKind::user_taste:
      if (!pinned->user_tastes) return false;
      value = (*pinned->user_tastes)[address.user];
      return true;
    case SiteKind::malicious:
      if (!pinned->malicious) return false;
      value = (*pinned->malicious)[address.user];
      return true;
    case SiteKind::target:
      if (!pinned->targets) return false;
      value = (*pinned->targets)[address.user];
      return true;
    default:
      return false;
  }
}

double TraceRecorder::sample(const Address& address, const Distribution& dist) {
  const bool is_resample = options_.resample && address == *options_.resample;
  double value = 0.0;
  bool fresh = false;

  if (pinned_value(address, value)) {
    (void)shillsim::sample(dist, rng_);
  } else if (const SiteRecord* old = (options_.replay_source && !is_resample)
                                         ? options_.replay_source->find(address)
                                         : nullptr;
             old && old->role == SiteRole::sampled) {
    value = old->value;
  } else {
    value = shillsim::sample(dist, rng_);
    fresh = options_.replay_source && !is_resample;
  }

  const double ld = log_density(dist, value);
  if (fresh) fresh_log_density_ += ld;
  if (is_resample) {
    resample_hit_ = true;
    resampled_value_ = value;
    resampled_log_density_ = ld;
  }
  log_prior_ += ld;
  record(address, value, ld, SiteRole::sampled);
  return value;
}

double TraceRecorder::rate_cell(const Address& address, const TruncatedNormal& dist) {
  if (!options_.observed) return sample(address, dist);
  const double value = (*options_.observed)(address.user, address.movie);
  const double ld = dist.log_pdf(value);
  log_likelihood_ += ld;
  record(address, value, ld, SiteRole::observed);
  return value;
}

void TraceRecorder::record(const Address& address, double value, double log_density, SiteRole role) {
  if (options_.record_sites) sites_.insert_or_assign(address, SiteRecord{value, log_density, role});
}

// ---------------------------------------------------------------------------

Trace execute_trace(const ModelConfig& config, TraceRecorder& recorder, const DisarmMask* mask) {
  ProgramOutput out = rating_program(config, recorder, mask);
  Trace trace;
  trace.sites = recorder.take_sites();
  trace.log_prior = recorder.log_prior();
  trace.log_likelihood = recorder.log_likelihood();
  trace.latents = std::move(out.latents);
  trace.result = std::move(out.ratings);
  return trace;
}

Trace run_forward(const ModelConfig& config, Rng& rng, bool record_sites) {
  config.validate();
  TraceRecorder recorder(rng, {.record_sites = record_sites});
  return execute_trace(config, recorder);
}

namespace {

void check_observed(const ModelConfig& config, const RatingMatrix& observed) {
  if (observed.users() != config.n_users || observed.movies() != config.n_movies) {
    throw InvalidArgument("observed matrix shape " + std::to_string(observed.users()) + "x" +
                          std::to_string(observed.movies()) + " does not match the model");
  }
  observed.validate();
}

}  // namespace

Trace run_conditioned(const ModelConfig& config, Rng& rng, const RatingMatrix& observed, bool record_sites) {
  config.validate();
  check_observed(config, observed);
  TraceRecorder recorder(rng, {.observed = &observed, .record_sites = record_sites});
  return execute_trace(config, recorder);
}

Trace replay(const Trace& source, const ModelConfig& config, Rng& rng, const RatingMatrix* observed) {
  if (observed) check_observed(config, *observed);
  TraceRecorder recorder(rng, {.observed = observed, .replay_source = &source});
  return execute_trace(config, recorder);
}

SiteProposal resample_site(const Trace& current, const Address& address, Rng& rng, const ModelConfig& config,
                           const RatingMatrix* observed) {
  const SiteRecord* old_site = current.find(address);
  if (!old_site || old_site->role != SiteRole::sampled) {
    throw InvalidArgument("resample_site: " + to_string(address) + " is not a sampled site of the trace");
  }

  TraceRecorder recorder(rng, {.observed = observed, .replay_source = &current, .resample = &address});
  SiteProposal proposal{execute_trace(config, recorder), 0.0, false};
  const Trace& next = proposal.trace;

  // Sites present before but not visited now.
  double stale_log_density = 0.0;
  for (const auto& [a, site] : current.sites) {
    if (site.role == SiteRole::sampled && !next.sites.contains(a)) stale_log_density += site.log_density;
  }

  const double k_old = static_cast<double>(current.sampled_count());
  const double k_new = static_cast<double>(next.sampled_count());
  proposal.log_mh_correction = std::log(k_old) - std::log(k_new) + stale_log_density -
                               recorder.fresh_log_density() + old_site->log_density -
                               recorder.resampled_log_density();
  proposal.value_changed = recorder.resampled_value() != old_site->value;
  return proposal;
}

}  // namespace shillsim
