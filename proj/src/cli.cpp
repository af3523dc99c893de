#include "shillsim/cli.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include "shillsim/errors.hpp"
#include "shillsim/inference.hpp"
#include "shillsim/influence.hpp"
#include "shillsim/io.hpp"
#include "shillsim/version.hpp"

namespace shillsim {

namespace {

std::string with_suffix(const std::string& prefix, const char* suffix) { return prefix + suffix; }

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    parts.push_back(text.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return parts;
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> grid;
  for (const auto& part : split(text, ',')) {
    double v = 0.0;
    const auto res = std::from_chars(part.data(), part.data() + part.size(), v);
    if (res.ec != std::errc() || res.ptr != part.data() + part.size() || !(v > 0.0) || !std::isfinite(v)) {
      throw ConfigError("bad tau_sigma grid entry \"" + part + "\"");
    }
    grid.push_back(v);
  }
  return grid;
}

DisarmMask parse_mask(const std::string& spec, const Scenario& scenario) {
  const std::size_t n = scenario.config.n_users;
  if (spec == "malicious") return DisarmMask::from_malicious(scenario.ground_truth);
  if (spec == "none") return DisarmMask::none(n);
  if (spec == "all") return DisarmMask::all(n);
  std::vector<std::size_t> users;
  for (const auto& part : split(spec, ',')) {
    std::size_t u = 0;
    const auto res = std::from_chars(part.data(), part.data() + part.size(), u);
    if (res.ec != std::errc() || res.ptr != part.data() + part.size()) {
      throw ConfigError("bad user \"" + part + "\" in mask; expected malicious, none, all or a list like 1,4");
    }
    users.push_back(u);
  }
  return DisarmMask::from_users(n, users);
}

struct InferArgs {
  std::string scenario;
  std::string engine = "is";
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::string out;
  double burn_in = 0.1;
  std::size_t thin = 1;
  bool no_traces = false;
};

struct InfluenceArgs {
  std::string scenario;
  std::string mask = "malicious";
  std::string mode = "prior";
  std::string latents = "malicious";
  std::size_t runs = 1000;
  std::uint64_t seed = 0;
  std::string out;
  std::string posterior_engine = "is";
  std::size_t posterior_n = 100000;
  std::size_t bins = kDefaultBins;
};

struct SweepArgs {
  std::string config;
  std::string grid;
  std::size_t seeds = 10;
  std::size_t runs = 1000;
  std::string out;
  std::size_t bins = kDefaultBins;
};

EmpiricalPosterior run_engine(const Scenario& s, const std::string& engine, std::size_t n, std::uint64_t seed,
                              std::size_t threads, const MhOptions& mh_options, MhResult* mh_out) {
  if (engine == "mh") {
    MhResult r = mh_chain(s.config, s.observed, n, seed, mh_options);
    EmpiricalPosterior p = std::move(r.posterior);
    if (mh_out) *mh_out = std::move(r);
    return p;
  }
  return importance_sample(s.config, s.observed, n, seed, {.threads = threads});
}

int cmd_generate(const std::string& config_path, std::optional<std::uint64_t> seed, const std::string& out_path,
                 std::ostream& out) {
  ScenarioSpec spec = load_scenario_spec(config_path);
  if (seed) spec.seed = *seed;
  const Scenario s = generate_scenario(spec);
  write_text_file(out_path, scenario_to_json(s));
  out << "malicious users:";
  for (std::size_t i = 0; i < s.ground_truth.n_users(); ++i) {
    if (s.ground_truth.malicious[i]) out << ' ' << i << " (target " << s.ground_truth.target_movie(i, s.config.n_movies) << ')';
  }
  out << "\nrated cells: " << s.observed.rated_count() << "\nwrote " << out_path << '\n';
  return exit_code::kOk;
}

int cmd_infer(const InferArgs& a, std::size_t threads, std::ostream& out) {
  const Scenario s = load_scenario(a.scenario);
  MhResult mh;
  const MhOptions mh_options{.burn_in_fraction = a.burn_in, .thin = a.thin};
  const EmpiricalPosterior posterior = run_engine(s, a.engine, a.n, a.seed, threads, mh_options, &mh);
  const PosteriorSummary summary = summarize(posterior, s.config.n_movies);

  const InferenceRun run{a.engine, a.n, a.seed, a.engine == "mh" ? &mh : nullptr};
  if (!a.no_traces) write_text_file(with_suffix(a.out, ".posterior.csv"), posterior_to_csv(s, posterior, run));
  write_text_file(with_suffix(a.out, ".summary.json"), summary_to_json(s, summary, run));

  if (a.engine == "mh") {
    out << "acceptance overall " << format_number(mh.acceptance_rate()) << '\n';
    for (std::size_t k = 0; k < kSiteKindCount; ++k) {
      const auto& st = mh.by_kind[k];
      out << "acceptance " << to_string(static_cast<SiteKind>(k)) << ' ' << format_number(st.acceptance_rate())
          << " (value-changing " << format_number(st.changed_acceptance_rate()) << ", proposed " << st.proposed
          << ")\n";
    }
  } else {
    out << "ESS " << format_number(summary.effective_sample_size) << '\n';
  }
  out << "p_malicious";
  for (double p : summary.p_malicious) out << ' ' << format_number(p);
  out << '\n';
  return exit_code::kOk;
}

int cmd_influence(const InfluenceArgs& a, std::size_t threads, std::ostream& out) {
  const Scenario s = load_scenario(a.scenario);
  const DisarmMask mask = parse_mask(a.mask, s);
  InfluenceOptions options{.bins = a.bins, .threads = threads};

  InfluenceReport report;
  if (a.mode == "prior") {
    std::optional<LatentOverride> pinned;
    if (a.latents == "malicious") pinned = LatentOverride::malicious_only(s.ground_truth.malicious);
    if (a.latents == "ground-truth") pinned = LatentOverride::all_of(s.ground_truth);
    options.pinned = pinned ? &*pinned : nullptr;
    report = influence(s.config, mask, a.runs, a.seed, options);
  } else {
    const EmpiricalPosterior posterior =
        run_engine(s, a.posterior_engine, a.posterior_n, a.seed, threads, MhOptions{}, nullptr);
    report = influence(s.config, mask, a.runs, a.seed, s.observed, posterior, options);
  }

  write_text_file(with_suffix(a.out, ".csv"), influence_to_csv(s.config, report));
  write_text_file(with_suffix(a.out, ".json"), influence_to_json(s.config, s.seed, report));
  out << "avg_js " << format_number(report.avg_js) << '\n';
  return exit_code::kOk;
}

int cmd_sweep(const SweepArgs& a, std::size_t threads, std::ostream& out) {
  const ScenarioSpec spec = load_scenario_spec(a.config);
  const std::vector<double> grid = parse_grid(a.grid);
  SweepOptions options{.base_seed = spec.seed, .bins = a.bins, .threads = threads, .malicious = std::nullopt};
  if (spec.malicious_users) {
    std::vector<std::uint8_t> flags(spec.config.n_users, 0);
    for (auto u : *spec.malicious_users) flags[u] = 1;
    options.malicious = std::move(flags);
  }
  const SweepTable table = coordination_sweep(spec.config, grid, a.seeds, a.runs, options);
  write_text_file(with_suffix(a.out, ".csv"), sweep_to_csv(spec.config, table));
  write_text_file(with_suffix(a.out, ".json"), sweep_to_json(spec.config, table, options.malicious));
  for (const auto& row : table.rows) {
    out << "tau_sigma " << format_number(row.tau_sigma) << " mean " << format_number(row.mean) << " std "
        << format_number(row.std) << '\n';
  }
  out << "spearman " << format_number(table.spearman) << '\n';
  return exit_code::kOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Simulate, infer and measure malicious users in a rating simulator"};
  app.set_version_flag("--version", std::string(kToolName) + ' ' + kToolVersion);
  app.require_subcommand(1);
  std::size_t threads = 0;
  app.add_option("--threads", threads, "Worker threads for ensembles (0 = all cores)")->check(CLI::NonNegativeNumber);

  std::string gen_config, gen_out;
  std::optional<std::uint64_t> gen_seed;
  auto* gen = app.add_subcommand("generate", "Forward-simulate a ground-truth scenario");
  gen->add_option("--config", gen_config, "Scenario config JSON")->required();
  gen->add_option("--seed", gen_seed, "Override the seed in the config");
  gen->add_option("--out", gen_out, "Scenario JSON to write")->required();

  InferArgs ia;
  auto* inf = app.add_subcommand("infer", "Posterior over malicious flags and targets");
  inf->add_option("--scenario", ia.scenario, "Scenario JSON")->required();
  inf->add_option("--engine", ia.engine, "is or mh")->check(CLI::IsMember({"is", "mh"}));
  inf->add_option("--n", ia.n, "Traces (is) or steps (mh)")->required()->check(CLI::PositiveNumber);
  inf->add_option("--seed", ia.seed, "Seed")->required();
  inf->add_option("--out", ia.out, "Output prefix; writes PREFIX.posterior.csv and PREFIX.summary.json")->required();
  inf->add_option("--burn-in", ia.burn_in, "MH burn-in fraction")->check(CLI::Range(0.0, 0.999));
  inf->add_option("--thin", ia.thin, "MH thinning")->check(CLI::PositiveNumber);
  inf->add_flag("--no-traces", ia.no_traces, "Skip the per-trace posterior CSV");

  InfluenceArgs fa;
  auto* flu = app.add_subcommand("influence", "Average JS distance between armed and disarmed ensembles");
  flu->add_option("--scenario", fa.scenario, "Scenario JSON")->required();
  flu->add_option("--mask", fa.mask, "malicious, none, all or a comma-separated user list");
  flu->add_option("--mode", fa.mode, "prior or posterior predictive")->check(CLI::IsMember({"prior", "posterior"}));
  flu->add_option("--latents", fa.latents, "Prior mode: latents pinned to the ground truth (malicious, ground-truth, none)")
      ->check(CLI::IsMember({"malicious", "ground-truth", "none"}));
  flu->add_option("--runs", fa.runs, "Runs per ensemble")->check(CLI::PositiveNumber);
  flu->add_option("--seed", fa.seed, "Seed")->required();
  flu->add_option("--out", fa.out, "Output prefix; writes PREFIX.csv and PREFIX.json")->required();
  flu->add_option("--posterior-engine", fa.posterior_engine, "Posterior mode engine")
      ->check(CLI::IsMember({"is", "mh"}));
  flu->add_option("--posterior-n", fa.posterior_n, "Posterior mode traces or steps")->check(CLI::PositiveNumber);
  flu->add_option("--bins", fa.bins, "Histogram bins")->check(CLI::PositiveNumber);

  SweepArgs sa;
  auto* swp = app.add_subcommand("sweep", "Influence of the malicious users across target spreads");
  swp->add_option("--config", sa.config, "Scenario config JSON")->required();
  swp->add_option("--grid", sa.grid, "Comma-separated tau_sigma values")->required();
  swp->add_option("--seeds", sa.seeds, "Seeds per grid value")->check(CLI::Range(std::size_t{2}, std::size_t{1000000}));
  swp->add_option("--runs", sa.runs, "Runs per ensemble")->check(CLI::PositiveNumber);
  swp->add_option("--out", sa.out, "Output prefix; writes PREFIX.csv and PREFIX.json")->required();
  swp->add_option("--bins", sa.bins, "Histogram bins")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return exit_code::kUsage;
  }

  try {
    if (*gen) return cmd_generate(gen_config, gen_seed, gen_out, out);
    if (*inf) return cmd_infer(ia, threads, out);
    if (*flu) return cmd_influence(fa, threads, out);
    return cmd_sweep(sa, threads, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return exit_code::kConfig;
  } catch (const InvalidArgument& e) {
    err << "invalid argument: " << e.what() << '\n';
    return exit_code::kConfig;
  } catch (const IoError& e) {
    err << "io error: " << e.what() << '\n';
    return exit_code::kIo;
  } catch (const DegeneratePosterior& e) {
    err << "degenerate posterior: " << e.what() << '\n';
    return exit_code::kDegenerate;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::kInternal;
  }
}

}  // namespace shillsim
