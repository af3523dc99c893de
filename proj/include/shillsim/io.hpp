#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "shillsim/inference.hpp"
#include "shillsim/influence.hpp"
#include "shillsim/model_types.hpp"

namespace shillsim {

inline constexpr const char* kConfigSchema = "shillsim.config/1";
inline constexpr const char* kScenarioSchema = "shillsim.scenario/1";
inline constexpr const char* kSummarySchema = "shillsim.summary/1";
inline constexpr const char* kInfluenceSchema = "shillsim.influence/1";
inline constexpr const char* kSweepSchema = "shillsim.sweep/1";

/// Contents of a scenario config file. Movie tastes are filled in on load:
/// either copied from the file or drawn from `movie_seed` (default: `seed`).
struct ScenarioSpec {
  ModelConfig config;
  std::uint64_t seed = 0;
  /// Users forced to be malicious in the ground truth (everyone else
  /// honest). Absent means the malicious flags are drawn from the prior.
  std::optional<std::vector<std::size_t>> malicious_users;
};

struct Scenario {
  ModelConfig config;
  std::uint64_t seed = 0;
  LatentAssignment ground_truth;
  RatingMatrix observed;
};

/// Forward-simulates the ground truth on stream (seed, kGroundTruth).
Scenario generate_scenario(const ScenarioSpec& spec);

/// Re-runs the forward simulation with every latent pinned to the recorded
/// ground truth; equals `scenario.observed` for a consistent file.
RatingMatrix replay_observed(const Scenario& scenario);

// Text I/O. Parse errors and schema violations raise ConfigError, file
// system failures IoError.
ScenarioSpec parse_scenario_spec(const std::string& text);
ScenarioSpec load_scenario_spec(const std::filesystem::path& path);

std::string scenario_to_json(const Scenario& scenario);
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// Shortest decimal form that round-trips.
std::string format_number(double value);

struct InferenceRun {
  std::string engine;  // "is" or "mh"
  std::size_t n = 0;
  std::uint64_t seed = 0;
  const MhResult* mh = nullptr;
};

/// One row per trace: latents, normalized weight and log weight. Leading
/// '#' lines carry the tool version, seed and config.
std::string posterior_to_csv(const Scenario& scenario, const EmpiricalPosterior& posterior, const InferenceRun& run);
std::string summary_to_json(const Scenario& scenario, const PosteriorSummary& summary, const InferenceRun& run);

std::string influence_to_csv(const ModelConfig& config, const InfluenceReport& report);
std::string influence_to_json(const ModelConfig& config, std::uint64_t scenario_seed, const InfluenceReport& report);

/// Columns tau_sigma, seed, avg_js; one row per (grid value, seed).
std::string sweep_to_csv(const ModelConfig& config, const SweepTable& table);
std::string sweep_to_json(const ModelConfig& config, const SweepTable& table,
                          const std::optional<std::vector<std::uint8_t>>& malicious);

}  // namespace shillsim
