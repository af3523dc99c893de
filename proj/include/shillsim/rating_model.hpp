#pragma once

#include <cstddef>
#include <vector>

#include "shillsim/model_types.hpp"
#include "shillsim/rng.hpp"
#include "shillsim/trace.hpp"

namespace shillsim {

/// Taste-match rating: 1 - |user_taste - movie_taste|.
double rate(double user_taste, double movie_taste);

/// Samples a movie with probability proportional to its column mean rating,
/// uniformly when every column mean is zero.
std::size_t pick(const RatingMatrix& ratings, Rng& rng);

/// Rating matrix plus per-column sums, which drive Pick. A column sum is
/// recomputed from scratch whenever one of its cells is written, so it never
/// drifts from the matrix.
class SimulationState {
 public:
  SimulationState(std::size_t users, std::size_t movies) : ratings_(users, movies), column_sums_(movies, 0.0) {}

  const RatingMatrix& ratings() const noexcept { return ratings_; }
  RatingMatrix take_ratings() { return std::move(ratings_); }
  /// Column sums are proportional to column means, so they serve directly
  /// as Pick's categorical weights.
  const std::vector<double>& column_sums() const noexcept { return column_sums_; }

  void write(std::size_t user, std::size_t movie, double value);

 private:
  RatingMatrix ratings_;
  std::vector<double> column_sums_;
};

enum class Branch { boost_target, malicious_pick, organic };

struct RatingEvent {
  std::size_t user = 0;
  std::size_t movie = 0;
  Branch branch = Branch::organic;
  double mean = 0.0;   // mean of the truncated-normal rating statement
  double value = 0.0;  // value written to the matrix
};

/// One user's turn at step `step`:
///  - malicious with an unrated target: rate floor(target) with mean
///    (1 - difficulty) * malicious_rating + difficulty * rate(...), no pick;
///  - malicious otherwise: pick, mean difficulty * rate(...);
///  - organic: pick, mean rate(...).
RatingEvent step_user(std::size_t user, std::size_t step, SimulationState& state, const LatentAssignment& latents,
                      const ModelConfig& config, Context& ctx);

struct ProgramOutput {
  LatentAssignment latents;
  RatingMatrix ratings;
};

/// The generative program: latent draws followed by `timesteps` rounds over
/// all users. Users flagged in `mask` are skipped entirely (no pick, no
/// rating).
ProgramOutput rating_program(const ModelConfig& config, Context& ctx, const DisarmMask* mask = nullptr);

/// Forward simulation with an optional disarm mask and pinned latents.
Trace simulate(const ModelConfig& config, Rng& rng, const DisarmMask* mask = nullptr,
               const LatentOverride* pinned = nullptr, bool record_sites = true);

}  // namespace shillsim
