#include "shillsim/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "shillsim/errors.hpp"
#include "shillsim/rating_model.hpp"
#include "shillsim/rng.hpp"
#include "shillsim/version.hpp"

namespace shillsim {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

const char* const kModelKeys[] = {"n_movies",    "n_users",     "p_malicious", "malicious_rating", "rating_std",
                                  "target_mean", "target_std",  "timesteps",   "difficulty"};

template <class T>
T get_field(const json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("missing field \"") + key + "\"");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("field \"") + key + "\" has the wrong type");
  }
}

std::size_t get_count(const json& j, const char* key) {
  const json& v = j.contains(key) ? j.at(key) : json();
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
    throw ConfigError(std::string("field \"") + key + "\" must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

std::uint64_t get_seed(const json& j, const char* key) {
  const json& v = j.contains(key) ? j.at(key) : json();
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    throw ConfigError(std::string("field \"") + key + "\" must be a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

ModelConfig parse_model(const json& j) {
  ModelConfig c;
  c.n_movies = get_count(j, "n_movies");
  c.n_users = get_count(j, "n_users");
  c.p_malicious = get_field<double>(j, "p_malicious");
  c.malicious_rating = get_field<double>(j, "malicious_rating");
  c.rating_std = get_field<double>(j, "rating_std");
  c.target_mean = get_field<double>(j, "target_mean");
  c.target_std = get_field<double>(j, "target_std");
  c.timesteps = get_count(j, "timesteps");
  c.difficulty = get_field<double>(j, "difficulty");
  if (j.contains("movie_tastes")) c.movie_tastes = get_field<std::vector<double>>(j, "movie_tastes");
  return c;
}

ordered_json model_json(const ModelConfig& c) {
  ordered_json j;
  j["n_movies"] = c.n_movies;
  j["n_users"] = c.n_users;
  j["p_malicious"] = c.p_malicious;
  j["malicious_rating"] = c.malicious_rating;
  j["rating_std"] = c.rating_std;
  j["target_mean"] = c.target_mean;
  j["target_std"] = c.target_std;
  j["timesteps"] = c.timesteps;
  j["difficulty"] = c.difficulty;
  j["movie_tastes"] = c.movie_tastes;
  return j;
}

ordered_json tool_json() { return {{"name", kToolName}, {"version", kToolVersion}}; }

ordered_json matrix_json(const RatingMatrix& m) {
  ordered_json j;
  j["users"] = m.users();
  j["movies"] = m.movies();
  j["values"] = std::vector<double>(m.data().begin(), m.data().end());
  return j;
}

RatingMatrix parse_matrix(const json& j) {
  const auto users = get_count(j, "users");
  const auto movies = get_count(j, "movies");
  auto values = get_field<std::vector<double>>(j, "values");
  if (values.size() != users * movies) throw ConfigError("matrix values do not match users x movies");
  RatingMatrix m(users, movies, std::move(values));
  try {
    m.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  return m;
}

ordered_json latents_json(const LatentAssignment& l, std::size_t n_movies) {
  ordered_json j;
  j["user_tastes"] = l.user_tastes;
  j["malicious"] = l.malicious;
  j["targets"] = l.targets;
  std::vector<std::size_t> movies(l.n_users());
  for (std::size_t i = 0; i < movies.size(); ++i) movies[i] = l.target_movie(i, n_movies);
  j["target_movies"] = movies;
  return j;
}

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
}

void check_schema(const json& j, const char* expected) {
  if (!j.is_object()) throw ConfigError("expected a JSON object");
  if (j.contains("schema") && j.at("schema") != expected) {
    throw ConfigError("unexpected schema " + j.at("schema").dump() + ", expected \"" + expected + "\"");
  }
}

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

// CSV comment header shared by every tabular export.
void csv_header(std::ostringstream& os, const char* schema, const ModelConfig& config,
                const std::string& extra) {
  os << "# " << kToolName << ' ' << kToolVersion << '\n';
  os << "# schema: " << schema << '\n';
  os << extra;
  os << "# config: " << model_json(config).dump() << '\n';
}

}  // namespace

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------

Scenario generate_scenario(const ScenarioSpec& spec) {
  spec.config.validate();
  std::optional<LatentOverride> pinned;
  if (spec.malicious_users) {
    std::vector<std::uint8_t> flags(spec.config.n_users, 0);
    for (auto u : *spec.malicious_users) {
      if (u >= spec.config.n_users) throw ConfigError("malicious_users names unknown user " + std::to_string(u));
      flags[u] = 1;
    }
    pinned = LatentOverride::malicious_only(std::move(flags));
  }
  Rng rng(spec.seed, streams::kGroundTruth);
  Trace t = simulate(spec.config, rng, nullptr, pinned ? &*pinned : nullptr);
  return {spec.config, spec.seed, std::move(t.latents), std::move(t.result)};
}

RatingMatrix replay_observed(const Scenario& scenario) {
  const LatentOverride pinned = LatentOverride::all_of(scenario.ground_truth);
  Rng rng(scenario.seed, streams::kGroundTruth);
  return simulate(scenario.config, rng, nullptr, &pinned).result;
}

ScenarioSpec parse_scenario_spec(const std::string& text) {
  const json j = parse_json(text);
  check_schema(j, kConfigSchema);
  for (const auto& [key, _] : j.items()) {
    const bool known = key == "schema" || key == "seed" || key == "movie_seed" || key == "movie_tastes" ||
                       key == "malicious_users" || std::find(std::begin(kModelKeys), std::end(kModelKeys), key) !=
                                                       std::end(kModelKeys);
    if (!known) throw ConfigError("unknown field \"" + key + "\"");
  }

  ScenarioSpec spec;
  spec.seed = get_seed(j, "seed");
  spec.config = parse_model(j);
  if (j.contains("movie_tastes") && j.contains("movie_seed")) {
    throw ConfigError("give either movie_tastes or movie_seed, not both");
  }
  if (!j.contains("movie_tastes")) {
    const auto movie_seed = j.contains("movie_seed") ? get_seed(j, "movie_seed") : spec.seed;
    spec.config.movie_tastes = sample_movie_tastes(spec.config.n_movies, movie_seed);
  }
  if (j.contains("malicious_users")) spec.malicious_users = get_field<std::vector<std::size_t>>(j, "malicious_users");
  spec.config.validate();
  if (spec.malicious_users) {
    for (auto u : *spec.malicious_users) {
      if (u >= spec.config.n_users) throw ConfigError("malicious_users names unknown user " + std::to_string(u));
    }
  }
  return spec;
}

ScenarioSpec load_scenario_spec(const std::filesystem::path& path) { return parse_scenario_spec(read_text_file(path)); }

std::string scenario_to_json(const Scenario& s) {
  ordered_json j;
  j["schema"] = kScenarioSchema;
  j["tool"] = tool_json();
  j["seed"] = s.seed;
  j["config"] = model_json(s.config);
  j["ground_truth"] = latents_json(s.ground_truth, s.config.n_movies);
  j["observed"] = matrix_json(s.observed);
  return dump(j);
}

Scenario parse_scenario(const std::string& text) {
  const json j = parse_json(text);
  check_schema(j, kScenarioSchema);
  Scenario s;
  s.seed = get_seed(j, "seed");
  if (!j.contains("config") || !j.contains("ground_truth") || !j.contains("observed")) {
    throw ConfigError("scenario needs config, ground_truth and observed");
  }
  s.config = parse_model(j.at("config"));
  s.config.validate();

  const json& gt = j.at("ground_truth");
  s.ground_truth.user_tastes = get_field<std::vector<double>>(gt, "user_tastes");
  s.ground_truth.malicious = get_field<std::vector<std::uint8_t>>(gt, "malicious");
  s.ground_truth.targets = get_field<std::vector<double>>(gt, "targets");
  try {
    s.ground_truth.validate(s.config);
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("ground_truth: ") + e.what());
  }

  s.observed = parse_matrix(j.at("observed"));
  if (s.observed.users() != s.config.n_users || s.observed.movies() != s.config.n_movies) {
    throw ConfigError("observed matrix shape does not match the config");
  }
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) { return parse_scenario(read_text_file(path)); }

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error while reading " + path.string());
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("error while writing " + path.string());
}

// ---------------------------------------------------------------------------

std::string posterior_to_csv(const Scenario& scenario, const EmpiricalPosterior& posterior, const InferenceRun& run) {
  const std::vector<double> log_w = posterior.normalized_log_weights();
  const std::size_t n_users = scenario.config.n_users;

  std::ostringstream os;
  csv_header(os, "shillsim.posterior/1", scenario.config,
             "# engine: " + run.engine + "\n# n: " + std::to_string(run.n) + "\n# seed: " + std::to_string(run.seed) +
                 "\n# scenario_seed: " + std::to_string(scenario.seed) + "\n");
  os << "trace,weight,log_weight,n_malicious";
  for (std::size_t i = 0; i < n_users; ++i) os << ",user_taste_" << i;
  for (std::size_t i = 0; i < n_users; ++i) os << ",malicious_" << i;
  for (std::size_t i = 0; i < n_users; ++i) os << ",target_" << i;
  os << '\n';

  for (std::size_t k = 0; k < posterior.size(); ++k) {
    const LatentAssignment& l = posterior.traces[k].latents;
    os << k << ',' << format_number(std::exp(log_w[k])) << ',' << format_number(log_w[k]) << ',' << l.n_malicious();
    for (double v : l.user_tastes) os << ',' << format_number(v);
    for (auto b : l.malicious) os << ',' << int(b);
    for (double v : l.targets) os << ',' << format_number(v);
    os << '\n';
  }
  return os.str();
}

std::string summary_to_json(const Scenario& scenario, const PosteriorSummary& s, const InferenceRun& run) {
  ordered_json j;
  j["schema"] = kSummarySchema;
  j["tool"] = tool_json();
  j["engine"] = run.engine;
  j["n"] = run.n;
  j["seed"] = run.seed;
  j["scenario_seed"] = scenario.seed;
  j["config"] = model_json(scenario.config);
  j["ground_truth"] = latents_json(scenario.ground_truth, scenario.config.n_movies);
  j["n_traces"] = s.n_traces;
  j["effective_sample_size"] = s.effective_sample_size;
  if (run.mh) {
    ordered_json acc;
    acc["overall"] = run.mh->acceptance_rate();
    for (std::size_t k = 0; k < kSiteKindCount; ++k) {
      const auto& st = run.mh->by_kind[k];
      acc[to_string(static_cast<SiteKind>(k))] = {{"proposed", st.proposed},
                                                  {"accepted", st.accepted},
                                                  {"changed", st.changed},
                                                  {"changed_accepted", st.changed_accepted},
                                                  {"acceptance_rate", st.acceptance_rate()},
                                                  {"changed_acceptance_rate", st.changed_acceptance_rate()}};
    }
    j["mh_acceptance"] = acc;
  }
  j["p_malicious"] = s.p_malicious;
  j["p_n_malicious"] = s.p_n_malicious;
  // -inf (no trace with that count) has no JSON form and is written as null.
  ordered_json logs = ordered_json::array();
  for (double v : s.log_p_n_malicious) logs.push_back(std::isfinite(v) ? ordered_json(v) : ordered_json());
  j["log_p_n_malicious"] = logs;
  j["target_marginal"] = s.target_marginal;
  j["target_marginal_conditional"] = s.target_marginal_conditional;
  j["posterior_predictive_mean"] = matrix_json(s.posterior_predictive_mean);
  j["observed"] = matrix_json(scenario.observed);
  return dump(j);
}

std::string influence_to_csv(const ModelConfig& config, const InfluenceReport& r) {
  std::ostringstream os;
  std::string mask;
  for (auto u : r.mask.users()) mask += (mask.empty() ? "" : " ") + std::to_string(u);
  csv_header(os, kInfluenceSchema, config,
             "# mode: " + r.mode + "\n# seed: " + std::to_string(r.seed) + "\n# n_runs: " + std::to_string(r.n_runs) +
                 "\n# bins: " + std::to_string(r.bins) + "\n# disarmed: " + mask +
                 "\n# avg_js: " + format_number(r.avg_js) + "\n");
  os << "user,movie,js\n";
  for (std::size_t i = 0; i < r.per_cell_js.users(); ++i) {
    for (std::size_t m = 0; m < r.per_cell_js.movies(); ++m) {
      os << i << ',' << m << ',' << format_number(r.per_cell_js(i, m)) << '\n';
    }
  }
  return os.str();
}

std::string influence_to_json(const ModelConfig& config, std::uint64_t scenario_seed, const InfluenceReport& r) {
  ordered_json j;
  j["schema"] = kInfluenceSchema;
  j["tool"] = tool_json();
  j["mode"] = r.mode;
  j["seed"] = r.seed;
  j["scenario_seed"] = scenario_seed;
  j["n_runs"] = r.n_runs;
  j["bins"] = r.bins;
  j["config"] = model_json(config);
  j["disarmed"] = r.mask.users();
  j["avg_js"] = r.avg_js;
  j["per_cell_js"] = matrix_json(r.per_cell_js);
  return dump(j);
}

std::string sweep_to_csv(const ModelConfig& config, const SweepTable& t) {
  std::ostringstream os;
  csv_header(os, kSweepSchema, config,
             "# n_runs: " + std::to_string(t.n_runs) + "\n# bins: " + std::to_string(t.bins) + "\n");
  os << "tau_sigma,seed,avg_js\n";
  for (const auto& row : t.rows) {
    for (std::size_t s = 0; s < row.seeds.size(); ++s) {
      os << format_number(row.tau_sigma) << ',' << row.seeds[s] << ',' << format_number(row.avg_js[s]) << '\n';
    }
  }
  return os.str();
}

std::string sweep_to_json(const ModelConfig& config, const SweepTable& t,
                          const std::optional<std::vector<std::uint8_t>>& malicious) {
  ordered_json j;
  j["schema"] = kSweepSchema;
  j["tool"] = tool_json();
  j["config"] = model_json(config);
  j["n_runs"] = t.n_runs;
  j["bins"] = t.bins;
  j["seeds"] = t.rows.empty() ? std::vector<std::uint64_t>{} : t.rows.front().seeds;
  j["malicious"] = malicious ? ordered_json(*malicious) : ordered_json("drawn per seed");
  ordered_json rows = ordered_json::array();
  for (const auto& row : t.rows) {
    rows.push_back({{"tau_sigma", row.tau_sigma}, {"mean", row.mean}, {"std", row.std}, {"avg_js", row.avg_js}});
  }
  j["rows"] = rows;
  j["spearman"] = std::isfinite(t.spearman) ? ordered_json(t.spearman) : ordered_json();
  return dump(j);
}

}  // namespace shillsim
