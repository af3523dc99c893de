#include "shillsim/model_types.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "shillsim/distributions.hpp"
#include "shillsim/errors.hpp"
#include "shillsim/rng.hpp"

namespace shillsim {

namespace {

bool in_unit(double x) { return std::isfinite(x) && x >= 0.0 && x <= 1.0; }

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

}  // namespace

void ModelConfig::validate() const {
  require(n_movies > 0, "n_movies must be positive");
  require(n_users > 0, "n_users must be positive");
  require(in_unit(p_malicious), "p_malicious must lie in [0, 1]");
  require(in_unit(malicious_rating), "malicious_rating must lie in [0, 1]");
  require(std::isfinite(rating_std) && rating_std > 0.0, "rating_std must be positive");
  require(std::isfinite(target_mean) && target_mean >= 0.0 && target_mean <= static_cast<double>(n_movies),
          "target_mean must lie in [0, n_movies]");
  require(std::isfinite(target_std) && target_std > 0.0, "target_std must be positive");
  require(in_unit(difficulty), "difficulty must lie in [0, 1]");
  require(movie_tastes.size() == n_movies, "movie_tastes must have n_movies entries");
  require(std::all_of(movie_tastes.begin(), movie_tastes.end(), in_unit), "movie_tastes must lie in [0, 1]");
}

std::vector<double> sample_movie_tastes(std::size_t n_movies, std::uint64_t seed) {
  Rng rng(seed, streams::kMovieTastes);
  const Uniform unit(0.0, 1.0);
  std::vector<double> tastes(n_movies);
  for (auto& t : tastes) t = unit.sample(rng);
  return tastes;
}

std::size_t LatentAssignment::n_malicious() const noexcept {
  return static_cast<std::size_t>(std::count(malicious.begin(), malicious.end(), std::uint8_t{1}));
}

std::size_t target_movie_index(double target, std::size_t n_movies) {
  if (!(target >= 0.0)) return 0;
  const double f = std::floor(target);
  return f >= static_cast<double>(n_movies) ? n_movies - 1 : static_cast<std::size_t>(f);
}

std::size_t LatentAssignment::target_movie(std::size_t user, std::size_t n_movies) const {
  return target_movie_index(targets.at(user), n_movies);
}

void LatentAssignment::validate(const ModelConfig& config) const {
  const auto n = config.n_users;
  if (user_tastes.size() != n || malicious.size() != n || targets.size() != n) {
    throw InvalidArgument("latent assignment length does not match n_users");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!in_unit(user_tastes[i])) throw InvalidArgument("user taste outside [0, 1]");
    if (malicious[i] > 1) throw InvalidArgument("malicious flag must be 0 or 1");
    if (!std::isfinite(targets[i]) || targets[i] < 0.0 || targets[i] > static_cast<double>(config.n_movies)) {
      throw InvalidArgument("target outside [0, n_movies]");
    }
  }
}

RatingMatrix::RatingMatrix(std::size_t users, std::size_t movies, std::vector<double> row_major)
    : users_(users), movies_(movies), data_(std::move(row_major)) {
  if (data_.size() != users * movies) throw InvalidArgument("rating matrix data does not match its dimensions");
}

std::size_t RatingMatrix::rated_count() const {
  return static_cast<std::size_t>(std::count_if(data_.begin(), data_.end(), [](double x) { return x != 0.0; }));
}

void RatingMatrix::validate() const {
  if (data_.size() != users_ * movies_) throw InvalidArgument("rating matrix data does not match its dimensions");
  if (!std::all_of(data_.begin(), data_.end(), in_unit)) throw InvalidArgument("rating outside [0, 1]");
}

DisarmMask DisarmMask::from_users(std::size_t n_users, std::span<const std::size_t> users) {
  DisarmMask mask = none(n_users);
  for (auto u : users) {
    if (u >= n_users) throw InvalidArgument("unknown user " + std::to_string(u) + " in disarm list");
    mask.disarmed[u] = 1;
  }
  return mask;
}

std::size_t DisarmMask::count() const noexcept {
  return static_cast<std::size_t>(std::count(disarmed.begin(), disarmed.end(), std::uint8_t{1}));
}

std::vector<std::size_t> DisarmMask::users() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < disarmed.size(); ++i) {
    if (disarmed[i]) out.push_back(i);
  }
  return out;
}

void LatentOverride::validate(const ModelConfig& config) const {
  const auto n = config.n_users;
  if (user_tastes && (user_tastes->size() != n || !std::all_of(user_tastes->begin(), user_tastes->end(), in_unit))) {
    throw InvalidArgument("pinned user tastes must be n_users values in [0, 1]");
  }
  if (malicious && (malicious->size() != n ||
                    std::any_of(malicious->begin(), malicious->end(), [](std::uint8_t b) { return b > 1; }))) {
    throw InvalidArgument("pinned malicious flags must be n_users values in {0, 1}");
  }
  if (targets && (targets->size() != n || std::any_of(targets->begin(), targets->end(), [&](double t) {
                    return !std::isfinite(t) || t < 0.0 || t > static_cast<double>(config.n_movies);
                  }))) {
    throw InvalidArgument("pinned targets must be n_users values in [0, n_movies]");
  }
}

}  // namespace shillsim
