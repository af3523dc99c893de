#include "shillsim/influence.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "shillsim/errors.hpp"
#include "shillsim/parallel.hpp"
#include "shillsim/rating_model.hpp"
#include "shillsim/rng.hpp"

namespace shillsim {

namespace {

constexpr std::uint64_t kArmedTag = 0xa;
constexpr std::uint64_t kDisarmedTag = 0xd;
constexpr std::size_t kRunsPerBlock = 128;

// 0.5 * sum p log2(p / m) + 0.5 * sum q log2(q / m), terms with zero mass skipped.
double js_divergence_bits(std::span<const double> p, std::span<const double> q) {
  double kl = 0.0;
  for (std::size_t b = 0; b < p.size(); ++b) {
    const double m = 0.5 * (p[b] + q[b]);
    const double tp = p[b] > 0.0 ? p[b] * std::log2(p[b] / m) : 0.0;
    const double tq = q[b] > 0.0 ? q[b] * std::log2(q[b] / m) : 0.0;
    kl += tp + tq;  // one sum per bin keeps the result exactly symmetric
  }
  return 0.5 * kl;
}

double clamp_distance(double divergence) { return std::sqrt(std::clamp(divergence, 0.0, 1.0)); }

template <class RunLatents>
RatingHistogramField accumulate(const ModelConfig& config, const DisarmMask& mask, std::size_t n_runs,
                                std::uint64_t seed, const EnsembleOptions& options, RunLatents&& latents_for_run) {
  if (n_runs == 0) throw InvalidArgument("predictive_histograms: n_runs must be at least 1");
  if (options.bins == 0) throw InvalidArgument("predictive_histograms: bins must be positive");
  config.validate();
  if (mask.size() != config.n_users) throw InvalidArgument("disarm mask length does not match n_users");

  const std::size_t n_blocks = (n_runs + kRunsPerBlock - 1) / kRunsPerBlock;
  std::vector<RatingHistogramField> partial(n_blocks,
                                            RatingHistogramField(config.n_users, config.n_movies, options.bins));
  parallel_for(n_blocks, options.threads, [&](std::size_t block) {
    const std::size_t end = std::min(n_runs, (block + 1) * kRunsPerBlock);
    for (std::size_t k = block * kRunsPerBlock; k < end; ++k) {
      Rng rng(seed, k);
      const LatentOverride* pinned = latents_for_run(k);
      TraceRecorder recorder(rng, {.pinned = pinned, .record_sites = false});
      partial[block].add(rating_program(config, recorder, &mask).ratings);
    }
  });

  RatingHistogramField field(config.n_users, config.n_movies, options.bins);
  for (const auto& p : partial) field.merge(p);
  return field;
}

InfluenceReport make_report(const RatingHistogramField& armed, const RatingHistogramField& disarmed,
                            const DisarmMask& mask, std::size_t n_runs, std::uint64_t seed, std::size_t bins,
                            std::string mode) {
  InfluenceReport report;
  report.per_cell_js = per_cell_js(armed, disarmed);
  const auto cells = report.per_cell_js.data();
  report.avg_js = std::accumulate(cells.begin(), cells.end(), 0.0) / static_cast<double>(cells.size());
  report.mask = mask;
  report.n_runs = n_runs;
  report.seed = seed;
  report.bins = bins;
  report.mode = std::move(mode);
  return report;
}

std::vector<double> ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double average = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = average;
    i = j + 1;
  }
  return r;
}

}  // namespace

std::size_t rating_bin(double rating, std::size_t bins) {
  if (!(rating > 0.0)) return 0;
  const auto b = static_cast<std::size_t>(rating * static_cast<double>(bins));
  return std::min(b, bins - 1);
}

RatingHistogramField::RatingHistogramField(std::size_t users, std::size_t movies, std::size_t bins)
    : users_(users), movies_(movies), bins_(bins), counts_(users * movies * bins, 0) {
  if (bins == 0) throw InvalidArgument("histogram field needs at least one bin");
}

void RatingHistogramField::add(const RatingMatrix& ratings) {
  if (ratings.users() != users_ || ratings.movies() != movies_) {
    throw InvalidArgument("rating matrix shape does not match histogram field");
  }
  for (std::size_t i = 0; i < users_; ++i) {
    for (std::size_t j = 0; j < movies_; ++j) {
      ++counts_[(i * movies_ + j) * bins_ + rating_bin(ratings(i, j), bins_)];
    }
  }
  ++n_runs_;
}

void RatingHistogramField::merge(const RatingHistogramField& other) {
  if (other.users_ != users_ || other.movies_ != movies_ || other.bins_ != bins_) {
    throw InvalidArgument("cannot merge histogram fields of different shapes");
  }
  for (std::size_t c = 0; c < counts_.size(); ++c) counts_[c] += other.counts_[c];
  n_runs_ += other.n_runs_;
}

std::vector<double> RatingHistogramField::cell_distribution(std::size_t user, std::size_t movie) const {
  const auto c = cell(user, movie);
  std::vector<double> p(bins_, 0.0);
  if (n_runs_ == 0) return p;
  for (std::size_t b = 0; b < bins_; ++b) p[b] = static_cast<double>(c[b]) / static_cast<double>(n_runs_);
  return p;
}

double js_distance(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size() || p.empty()) throw InvalidArgument("js_distance: support mismatch");
  auto check = [](std::span<const double> d) {
    double total = 0.0;
    for (double v : d) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument("js_distance: negative or non-finite probability");
      total += v;
    }
    if (std::abs(total - 1.0) > 1e-9) throw InvalidArgument("js_distance: input does not sum to 1");
  };
  check(p);
  check(q);
  return clamp_distance(js_divergence_bits(p, q));
}

RatingMatrix per_cell_js(const RatingHistogramField& a, const RatingHistogramField& b) {
  if (a.users() != b.users() || a.movies() != b.movies() || a.bins() != b.bins()) {
    throw InvalidArgument("per_cell_js: histogram fields differ in shape");
  }
  if (a.n_runs() == 0 || b.n_runs() == 0) throw InvalidArgument("per_cell_js: empty histogram field");
  RatingMatrix js(a.users(), a.movies());
  for (std::size_t i = 0; i < a.users(); ++i) {
    for (std::size_t j = 0; j < a.movies(); ++j) {
      js(i, j) = clamp_distance(js_divergence_bits(a.cell_distribution(i, j), b.cell_distribution(i, j)));
    }
  }
  return js;
}

RatingHistogramField predictive_histograms(const ModelConfig& config, const DisarmMask& mask, std::size_t n_runs,
                                           std::uint64_t seed, const LatentOverride* pinned,
                                           const EnsembleOptions& options) {
  if (pinned) pinned->validate(config);
  return accumulate(config, mask, n_runs, seed, options, [pinned](std::size_t) { return pinned; });
}

RatingHistogramField predictive_histograms(const ModelConfig& config, const DisarmMask& mask,
                                           std::span<const LatentAssignment> per_run_latents, std::uint64_t seed,
                                           const EnsembleOptions& options) {
  std::vector<LatentOverride> pinned;
  pinned.reserve(per_run_latents.size());
  for (const auto& latents : per_run_latents) {
    latents.validate(config);
    pinned.push_back(LatentOverride::all_of(latents));
  }
  return accumulate(config, mask, per_run_latents.size(), seed, options,
                    [&pinned](std::size_t k) { return &pinned[k]; });
}

InfluenceReport influence(const ModelConfig& config, const DisarmMask& mask, std::size_t n_runs, std::uint64_t seed,
                          const InfluenceOptions& options) {
  const EnsembleOptions ensemble{options.bins, options.threads};
  const auto armed = predictive_histograms(config, DisarmMask::none(config.n_users), n_runs,
                                           derive_seed(seed, kArmedTag), options.pinned, ensemble);
  const auto disarmed =
      predictive_histograms(config, mask, n_runs, derive_seed(seed, kDisarmedTag), options.pinned, ensemble);
  return make_report(armed, disarmed, mask, n_runs, seed, options.bins, "prior");
}

std::vector<LatentAssignment> resample_latents(const EmpiricalPosterior& posterior, std::size_t n,
                                               std::uint64_t seed) {
  const std::vector<double> w = posterior.normalized_weights();
  std::vector<double> cumulative(w.size());
  std::partial_sum(w.begin(), w.end(), cumulative.begin());
  const double total = cumulative.back();

  Rng rng(seed, streams::kResampling);
  std::vector<LatentAssignment> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double u = rng.uniform01() * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    auto index = static_cast<std::size_t>(it - cumulative.begin());
    index = std::min(index, w.size() - 1);
    while (w[index] == 0.0 && index > 0) --index;  // rounding at the top end
    out.push_back(posterior.traces[index].latents);
  }
  return out;
}

InfluenceReport influence(const ModelConfig& config, const DisarmMask& mask, std::size_t n_runs, std::uint64_t seed,
                          const RatingMatrix& observed, const EmpiricalPosterior& posterior,
                          const InfluenceOptions& options) {
  if (observed.users() != config.n_users || observed.movies() != config.n_movies) {
    throw InvalidArgument("observed matrix shape does not match the model");
  }
  if (posterior.empty()) throw InvalidArgument("posterior-predictive influence needs a posterior");
  if (n_runs == 0) throw InvalidArgument("influence: n_runs must be at least 1");
  if (posterior.effective_sample_size() == 0.0) {
    throw DegeneratePosterior("posterior has no positive weight (ESS = 0)");
  }
  const auto latents = resample_latents(posterior, n_runs, seed);
  const EnsembleOptions ensemble{options.bins, options.threads};
  const auto armed =
      predictive_histograms(config, DisarmMask::none(config.n_users), latents, derive_seed(seed, kArmedTag), ensemble);
  const auto disarmed = predictive_histograms(config, mask, latents, derive_seed(seed, kDisarmedTag), ensemble);
  return make_report(armed, disarmed, mask, n_runs, seed, options.bins, "posterior");
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("spearman: need two equal-length samples");
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

std::vector<std::uint8_t> sweep_malicious_set(const ModelConfig& config, std::uint64_t seed) {
  Rng rng(seed, streams::kGroundTruth);
  const Bernoulli prior(config.p_malicious);
  std::vector<std::uint8_t> malicious(config.n_users);
  for (auto& b : malicious) b = static_cast<std::uint8_t>(prior.sample(rng));
  return malicious;
}

SweepTable coordination_sweep(const ModelConfig& config, std::span<const double> tau_sigma_grid, std::size_t n_seeds,
                              std::size_t n_runs, const SweepOptions& options) {
  if (tau_sigma_grid.empty()) throw InvalidArgument("coordination_sweep: empty tau_sigma grid");
  if (n_seeds < 2) throw InvalidArgument("coordination_sweep: need at least 2 seeds");
  config.validate();
  if (options.malicious && options.malicious->size() != config.n_users) {
    throw InvalidArgument("coordination_sweep: malicious set length does not match n_users");
  }

  SweepTable table;
  table.n_runs = n_runs;
  table.bins = options.bins;
  std::vector<double> sigmas;
  std::vector<double> means;

  for (double tau_sigma : tau_sigma_grid) {
    ModelConfig cfg = config;
    cfg.target_std = tau_sigma;
    cfg.validate();

    SweepRow row;
    row.tau_sigma = tau_sigma;
    for (std::size_t s = 0; s < n_seeds; ++s) {
      const std::uint64_t seed = options.base_seed + s;
      auto malicious = options.malicious ? *options.malicious : sweep_malicious_set(config, seed);
      const DisarmMask mask{malicious};
      const auto pinned = LatentOverride::malicious_only(std::move(malicious));
      const InfluenceOptions io{options.bins, options.threads, &pinned};
      row.seeds.push_back(seed);
      row.avg_js.push_back(influence(cfg, mask, n_runs, seed, io).avg_js);
    }
    const double n = static_cast<double>(n_seeds);
    row.mean = std::accumulate(row.avg_js.begin(), row.avg_js.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : row.avg_js) ss += (v - row.mean) * (v - row.mean);
    row.std = std::sqrt(ss / (n - 1.0));

    sigmas.push_back(tau_sigma);
    means.push_back(row.mean);
    table.rows.push_back(std::move(row));
  }
  table.spearman = sigmas.size() >= 2 ? spearman(sigmas, means) : 0.0;
  return table;
}

}  // namespace shillsim
