#include <doctest.h>

#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "shillsim/errors.hpp"
#include "shillsim/io.hpp"
#include "temp_dir.hpp"

using namespace shillsim;

namespace {

const std::string kConfigDir = std::string(SHILLSIM_SOURCE_DIR) + "/configs/";

nlohmann::json default_config_json() { return nlohmann::json::parse(read_text_file(kConfigDir + "default.json")); }

std::vector<std::string> data_lines(const std::string& csv) {
  std::vector<std::string> out;
  std::istringstream in(csv);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '#') out.push_back(line);
  }
  return out;
}

}  // namespace

TEST_SUITE("io") {
  TEST_CASE("numbers round-trip") {
    for (double v : {0.0, 0.1, 1.0 / 3.0, 1e-300, 123456.789, -2.5e17}) {
      const std::string s = format_number(v);
      double back = 0.0;
      std::from_chars(s.data(), s.data() + s.size(), back);
      CHECK(back == v);
    }
    CHECK(format_number(0.5) == "0.5");
    CHECK(format_number(-std::numeric_limits<double>::infinity()) == "-inf");
  }

  TEST_CASE("config files") {
    const ScenarioSpec spec = load_scenario_spec(kConfigDir + "default.json");
    CHECK(spec.seed == 1);
    CHECK(spec.config.n_users == 10);
    CHECK(spec.config.difficulty == 0.0);
    CHECK(spec.config.movie_tastes == sample_movie_tastes(10, 1));
    REQUIRE(spec.malicious_users);
    CHECK(*spec.malicious_users == std::vector<std::size_t>{4});
    CHECK(load_scenario_spec(kConfigDir + "ambiguous.json").config.difficulty == 0.3);

    auto j = default_config_json();
    j["movie_seed"] = 5;
    CHECK(parse_scenario_spec(j.dump()).config.movie_tastes == sample_movie_tastes(10, 5));
    j.erase("movie_seed");
    j["movie_tastes"] = std::vector<double>(10, 0.25);
    CHECK(parse_scenario_spec(j.dump()).config.movie_tastes == std::vector<double>(10, 0.25));
  }

  TEST_CASE("config errors") {
    CHECK_THROWS_AS(parse_scenario_spec("{not json"), ConfigError);
    CHECK_THROWS_AS(parse_scenario_spec("[1, 2]"), ConfigError);
    auto j = default_config_json();
    j.erase("rating_std");
    CHECK_THROWS_AS(parse_scenario_spec(j.dump()), ConfigError);
    j = default_config_json();
    j["surprise"] = 1;
    CHECK_THROWS_AS(parse_scenario_spec(j.dump()), ConfigError);
    j = default_config_json();
    j["p_malicious"] = 2.0;
    CHECK_THROWS_AS(parse_scenario_spec(j.dump()), ConfigError);
    j = default_config_json();
    j["n_users"] = -3;
    CHECK_THROWS_AS(parse_scenario_spec(j.dump()), ConfigError);
    j = default_config_json();
    j["timesteps"] = "many";
    CHECK_THROWS_AS(parse_scenario_spec(j.dump()), ConfigError);
    j = default_config_json();
    j["malicious_users"] = {10};
    CHECK_THROWS_AS(parse_scenario_spec(j.dump()), ConfigError);
    j = default_config_json();
    j["movie_tastes"] = {0.5};
    CHECK_THROWS_AS(parse_scenario_spec(j.dump()), ConfigError);
    j = default_config_json();
    j["schema"] = "something.else/2";
    CHECK_THROWS_AS(parse_scenario_spec(j.dump()), ConfigError);
    CHECK_THROWS_AS(load_scenario_spec(kConfigDir + "missing.json"), IoError);
  }

  TEST_CASE("generated scenarios") {
    ScenarioSpec spec = load_scenario_spec(kConfigDir + "default.json");
    const Scenario s = generate_scenario(spec);
    CHECK(s.ground_truth.malicious == std::vector<std::uint8_t>{0, 0, 0, 0, 1, 0, 0, 0, 0, 0});
    CHECK(replay_observed(s) == s.observed);
    CHECK(generate_scenario(spec).observed == s.observed);

    spec.malicious_users.reset();
    spec.config.p_malicious = 0.0;
    CHECK(generate_scenario(spec).ground_truth.n_malicious() == 0);
  }

  TEST_CASE("scenario files round-trip") {
    const Scenario s = generate_scenario(load_scenario_spec(kConfigDir + "ambiguous.json"));
    const std::string text = scenario_to_json(s);
    const Scenario back = parse_scenario(text);
    CHECK(back.seed == s.seed);
    CHECK(back.ground_truth == s.ground_truth);
    CHECK(back.observed == s.observed);
    CHECK(back.config.movie_tastes == s.config.movie_tastes);
    CHECK(scenario_to_json(back) == text);

    const auto j = nlohmann::json::parse(text);
    CHECK(j["schema"] == kScenarioSchema);
    CHECK(j["tool"]["version"] == "0.1.0");
    CHECK(j["observed"]["values"].size() == 100);

    auto broken = j;
    broken["observed"]["values"][3] = 1.5;
    CHECK_THROWS_AS(parse_scenario(broken.dump()), ConfigError);
    broken = j;
    broken["observed"]["users"] = 9;
    CHECK_THROWS_AS(parse_scenario(broken.dump()), ConfigError);
  }

  TEST_CASE("file errors") {
    TempDir dir;
    CHECK_THROWS_AS(write_text_file(dir / "no/such/dir/file.json", "x"), IoError);
    CHECK_THROWS_AS(read_text_file(dir / "absent.json"), IoError);
    write_text_file(dir / "ok.txt", "hello");
    CHECK(read_text_file(dir / "ok.txt") == "hello");
  }

  TEST_CASE("posterior and summary exports") {
    const Scenario s = generate_scenario(load_scenario_spec(kConfigDir + "default.json"));
    const EmpiricalPosterior p = importance_sample(s.config, s.observed, 200, 3);
    const InferenceRun run{"is", 200, 3, nullptr};
    const std::string csv = posterior_to_csv(s, p, run);
    CHECK(csv.rfind("# shillsim 0.1.0\n", 0) == 0);
    CHECK(csv.find("# seed: 3\n") != std::string::npos);
    CHECK(csv.find("# config: {") != std::string::npos);
    const auto lines = data_lines(csv);
    REQUIRE(lines.size() == 201);
    CHECK(lines[0].rfind("trace,weight,log_weight,n_malicious,user_taste_0", 0) == 0);
    CHECK(std::count(lines[0].begin(), lines[0].end(), ',') == 3 + 30);
    double total = 0.0;
    for (std::size_t k = 1; k < lines.size(); ++k) {
      const auto a = lines[k].find(',') + 1;
      total += std::stod(lines[k].substr(a, lines[k].find(',', a) - a));
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));

    const auto j = nlohmann::json::parse(summary_to_json(s, summarize(p, 10), run));
    CHECK(j["schema"] == kSummarySchema);
    CHECK(j["seed"] == 3);
    CHECK(j["engine"] == "is");
    CHECK(j["p_malicious"].size() == 10);
    CHECK(j["p_n_malicious"].size() == 11);
    CHECK(j["target_marginal"].size() == 10);
    CHECK(j["posterior_predictive_mean"]["values"].size() == 100);
    CHECK(j["ground_truth"]["target_movies"].size() == 10);
    CHECK(j.contains("config"));
    CHECK_FALSE(j.contains("mh_acceptance"));
  }

  TEST_CASE("influence and sweep exports") {
    ModelConfig c = load_scenario_spec(kConfigDir + "default.json").config;
    c.timesteps = 3;
    const DisarmMask mask = DisarmMask::from_users(10, std::vector<std::size_t>{1, 4});
    const InfluenceReport r = influence(c, mask, 20, 5);
    const auto lines = data_lines(influence_to_csv(c, r));
    CHECK(lines.size() == 101);
    CHECK(lines[0] == "user,movie,js");
    const auto j = nlohmann::json::parse(influence_to_json(c, 1, r));
    CHECK(j["disarmed"] == std::vector<int>{1, 4});
    CHECK(j["avg_js"] == r.avg_js);
    CHECK(j["seed"] == 5);

    const std::vector<double> grid{0.5, 1, 2, 4, 8, 16};
    const SweepTable t = coordination_sweep(c, grid, 10, 5);
    const auto rows = data_lines(sweep_to_csv(c, t));
    CHECK(rows.size() == 61);
    CHECK(rows[0] == "tau_sigma,seed,avg_js");
    const auto sj = nlohmann::json::parse(sweep_to_json(c, t, std::nullopt));
    CHECK(sj["rows"].size() == 6);
    CHECK(sj["rows"][0]["avg_js"].size() == 10);
    CHECK(sj["schema"] == kSweepSchema);
  }
}
