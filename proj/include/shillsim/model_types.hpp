#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace shillsim {

/// Fixed hyperparameters of the rating model. Movie tastes are part of the
/// configuration: they are drawn once per scenario and never vary across
/// traces.
struct ModelConfig {
  std::size_t n_movies = 10;
  std::size_t n_users = 10;
  double p_malicious = 0.1;
  double malicious_rating = 1.0;
  double rating_std = 0.05;
  double target_mean = 5.0;
  double target_std = 1.0;
  std::size_t timesteps = 20;
  double difficulty = 0.0;
  std::vector<double> movie_tastes;

  /// Throws ConfigError when any bound is violated.
  void validate() const;
};

/// Draws movie tastes from Uniform(0, 1) on a dedicated stream of `seed`.
std::vector<double> sample_movie_tastes(std::size_t n_movies, std::uint64_t seed);

/// One draw of the per-user latents.
struct LatentAssignment {
  std::vector<double> user_tastes;
  std::vector<std::uint8_t> malicious;
  std::vector<double> targets;

  std::size_t n_users() const noexcept { return malicious.size(); }
  std::size_t n_malicious() const noexcept;
  /// Movie index a malicious user boosts: floor(target), clamped to the last movie.
  std::size_t target_movie(std::size_t user, std::size_t n_movies) const;

  void validate(const ModelConfig& config) const;

  bool operator==(const LatentAssignment&) const = default;
};

std::size_t target_movie_index(double target, std::size_t n_movies);

/// Dense users x movies matrix of ratings in [0, 1]; 0 means unrated.
class RatingMatrix {
 public:
  RatingMatrix() = default;
  RatingMatrix(std::size_t users, std::size_t movies) : users_(users), movies_(movies), data_(users * movies, 0.0) {}
  RatingMatrix(std::size_t users, std::size_t movies, std::vector<double> row_major);

  std::size_t users() const noexcept { return users_; }
  std::size_t movies() const noexcept { return movies_; }

  double operator()(std::size_t user, std::size_t movie) const { return data_[user * movies_ + movie]; }
  double& operator()(std::size_t user, std::size_t movie) { return data_[user * movies_ + movie]; }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  bool is_rated(std::size_t user, std::size_t movie) const { return (*this)(user, movie) != 0.0; }
  std::size_t rated_count() const;

  /// Throws InvalidArgument unless every entry lies in [0, 1].
  void validate() const;

  bool operator==(const RatingMatrix&) const = default;

 private:
  std::size_t users_ = 0;
  std::size_t movies_ = 0;
  std::vector<double> data_;
};

/// Users whose rating statements are skipped entirely.
struct DisarmMask {
  std::vector<std::uint8_t> disarmed;

  static DisarmMask none(std::size_t n_users) { return {std::vector<std::uint8_t>(n_users, 0)}; }
  static DisarmMask all(std::size_t n_users) { return {std::vector<std::uint8_t>(n_users, 1)}; }
  static DisarmMask from_users(std::size_t n_users, std::span<const std::size_t> users);
  static DisarmMask from_malicious(const LatentAssignment& latents) { return {latents.malicious}; }

  std::size_t size() const noexcept { return disarmed.size(); }
  bool is_disarmed(std::size_t user) const { return disarmed[user] != 0; }
  std::size_t count() const noexcept;
  std::vector<std::size_t> users() const;

  bool operator==(const DisarmMask&) const = default;
};

/// Pins some latent sites to given values. A pinned site still consumes its
/// random draw, so the stream position of every later site is the same as
/// in an unpinned run with the same seed.
struct LatentOverride {
  std::optional<std::vector<double>> user_tastes;
  std::optional<std::vector<std::uint8_t>> malicious;
  std::optional<std::vector<double>> targets;

  static LatentOverride all_of(const LatentAssignment& latents) {
    return {latents.user_tastes, latents.malicious, latents.targets};
  }
  static LatentOverride malicious_only(std::vector<std::uint8_t> malicious) { return {{}, std::move(malicious), {}}; }

  bool empty() const noexcept { return !user_tastes && !malicious && !targets; }
  void validate(const ModelConfig& config) const;
};

}  // namespace shillsim
