#include "shillsim/rating_model.hpp"

#include <cmath>
#include <string>

#include "shillsim/distributions.hpp"
#include "shillsim/errors.hpp"

namespace shillsim {

double rate(double user_taste, double movie_taste) {
  if (!(user_taste >= 0.0 && user_taste <= 1.0 && movie_taste >= 0.0 && movie_taste <= 1.0)) {
    throw InvalidArgument("rate: tastes must lie in [0, 1]");
  }
  return 1.0 - std::abs(user_taste - movie_taste);
}

std::size_t pick(const RatingMatrix& ratings, Rng& rng) {
  std::vector<double> means(ratings.movies(), 0.0);
  for (std::size_t j = 0; j < ratings.movies(); ++j) {
    for (std::size_t i = 0; i < ratings.users(); ++i) means[j] += ratings(i, j);
    means[j] /= static_cast<double>(ratings.users());
  }
  return Categorical(means).sample(rng);
}

void SimulationState::write(std::size_t user, std::size_t movie, double value) {
  ratings_(user, movie) = value;
  double sum = 0.0;
  for (std::size_t i = 0; i < ratings_.users(); ++i) sum += ratings_(i, movie);
  column_sums_[movie] = sum;
}

RatingEvent step_user(std::size_t user, std::size_t step, SimulationState& state, const LatentAssignment& latents,
                      const ModelConfig& config, Context& ctx) {
  RatingEvent event;
  event.user = user;
  const double taste = latents.user_tastes[user];

  auto picked = [&] {
    const Categorical by_rank(state.column_sums());
    return static_cast<std::size_t>(ctx.sample(Address::pick(user, step), by_rank));
  };

  if (latents.malicious[user]) {
    const std::size_t target = latents.target_movie(user, config.n_movies);
    if (!state.ratings().is_rated(user, target)) {
      event.branch = Branch::boost_target;
      event.movie = target;
      event.mean = (1.0 - config.difficulty) * config.malicious_rating +
                   config.difficulty * rate(taste, config.movie_tastes[target]);
    } else {
      event.branch = Branch::malicious_pick;
      event.movie = picked();
      event.mean = config.difficulty * rate(taste, config.movie_tastes[event.movie]);
    }
  } else {
    event.branch = Branch::organic;
    event.movie = picked();
    event.mean = rate(taste, config.movie_tastes[event.movie]);
  }

  const TruncatedNormal rating(event.mean, config.rating_std, 0.0, 1.0);
  event.value = ctx.rate_cell(Address::rating(user, event.movie, step), rating);
  state.write(user, event.movie, event.value);
  return event;
}

ProgramOutput rating_program(const ModelConfig& config, Context& ctx, const DisarmMask* mask) {
  const std::size_t n = config.n_users;
  if (mask && mask->size() != n) throw InvalidArgument("disarm mask length does not match n_users");

  LatentAssignment latents;
  latents.user_tastes.resize(n);
  latents.malicious.resize(n);
  latents.targets.resize(n);

  const Uniform taste_prior(0.0, 1.0);
  const Bernoulli malicious_prior(config.p_malicious);
  const TruncatedNormal target_prior(config.target_mean, config.target_std, 0.0,
                                     static_cast<double>(config.n_movies));

  for (std::size_t i = 0; i < n; ++i) latents.user_tastes[i] = ctx.sample(Address::user_taste(i), taste_prior);
  for (std::size_t i = 0; i < n; ++i) {
    latents.malicious[i] = ctx.sample(Address::malicious(i), malicious_prior) != 0.0 ? 1 : 0;
  }
  for (std::size_t i = 0; i < n; ++i) latents.targets[i] = ctx.sample(Address::target(i), target_prior);

  SimulationState state(n, config.n_movies);
  for (std::size_t t = 0; t < config.timesteps; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      if (mask && mask->is_disarmed(i)) continue;
      step_user(i, t, state, latents, config, ctx);
    }
  }
  return {std::move(latents), state.take_ratings()};
}

Trace simulate(const ModelConfig& config, Rng& rng, const DisarmMask* mask, const LatentOverride* pinned,
               bool record_sites) {
  config.validate();
  if (pinned) pinned->validate(config);
  TraceRecorder recorder(rng, {.pinned = pinned, .record_sites = record_sites});
  return execute_trace(config, recorder, mask);
}

}  // namespace shillsim
