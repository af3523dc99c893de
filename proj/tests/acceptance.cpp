// Acceptance checks. Prints one PASS/FAIL line per criterion; with a
// criterion name as argument only that one runs. Exit status is non-zero
// when any selected criterion fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "shillsim/cli.hpp"
#include "shillsim/distributions.hpp"
#include "shillsim/inference.hpp"
#include "shillsim/influence.hpp"
#include "shillsim/io.hpp"
#include "stats.hpp"
#include "temp_dir.hpp"
#include "tiny_oracle.hpp"

using namespace shillsim;

namespace {

const std::string kConfigDir = std::string(SHILLSIM_SOURCE_DIR) + "/configs/";

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Scenario scenario(const char* config) { return generate_scenario(load_scenario_spec(kConfigDir + config)); }

std::size_t the_malicious_user(const Scenario& s) {
  for (std::size_t i = 0; i < s.ground_truth.n_users(); ++i) {
    if (s.ground_truth.malicious[i]) return i;
  }
  return s.ground_truth.n_users();
}

std::size_t argmax(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

// ---------------------------------------------------------------------------

Outcome unambiguous_detection() {
  const Scenario s = scenario("default.json");
  if (s.ground_truth.n_malicious() != 1) return {false, "scenario does not have exactly one malicious user"};
  const std::size_t user = the_malicious_user(s);
  const std::size_t target = s.ground_truth.target_movie(user, s.config.n_movies);

  int hits = 0;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const EmpiricalPosterior p = importance_sample(s.config, s.observed, 100000, seed);
    const PosteriorSummary sum = summarize(p, s.config.n_movies);
    const bool ok = sum.p_malicious[user] > 0.9 && argmax(sum.target_marginal[user]) == target;
    hits += ok;
    detail += " " + std::to_string(seed) + ":p=" + fmt("%.3g", sum.p_malicious[user]) + ",mode=" +
              std::to_string(argmax(sum.target_marginal[user]));
  }
  return {hits >= 8, std::to_string(hits) + "/10 seeds (user " + std::to_string(user) + ", target " +
                         std::to_string(target) + ";" + detail + ")"};
}

Outcome ambiguous_detection() {
  const Scenario s = scenario("ambiguous.json");
  const std::size_t user = the_malicious_user(s);
  int hits = 0;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const EmpiricalPosterior p = importance_sample(s.config, s.observed, 100000, seed);
    const PosteriorSummary sum = summarize(p, s.config.n_movies);
    const auto& lp = sum.log_p_n_malicious;
    const bool ordered = lp[0] > lp[1] && lp[1] > lp[2];

    // Modal candidate among traces with exactly one malicious user, in log space.
    std::vector<std::vector<double>> by_user(s.config.n_users);
    for (std::size_t k = 0; k < p.size(); ++k) {
      const auto& l = p.traces[k].latents;
      if (l.n_malicious() != 1) continue;
      for (std::size_t i = 0; i < l.n_users(); ++i) {
        if (l.malicious[i]) by_user[i].push_back(p.log_weights[k]);
      }
    }
    std::vector<double> mass(s.config.n_users);
    for (std::size_t i = 0; i < mass.size(); ++i) mass[i] = log_sum_exp(by_user[i]);
    const std::size_t modal = argmax(mass);
    const bool ok = ordered && modal == user;
    hits += ok;
    detail += " " + std::to_string(seed) + ":" + (ordered ? "ordered" : "unordered") + ",modal=" +
              std::to_string(modal);
  }
  return {hits >= 7, std::to_string(hits) + "/10 seeds (user " + std::to_string(user) + ";" + detail + ")"};
}

Outcome coordination_sweep_criterion() {
  const ScenarioSpec spec = load_scenario_spec(kConfigDir + "default.json");
  std::vector<std::uint8_t> malicious(spec.config.n_users, 0);
  for (auto u : *spec.malicious_users) malicious[u] = 1;
  const std::vector<double> grid{0.25, 0.5, 1.0, 2.0, 4.0, 8.0};
  const SweepTable t = coordination_sweep(spec.config, grid, 10, 1000,
                                          {.base_seed = spec.seed, .bins = kDefaultBins, .threads = 0,
                                           .malicious = malicious});
  const SweepRow& lo = t.rows.front();
  const SweepRow& hi = t.rows.back();
  const double pooled = std::sqrt(0.5 * (lo.std * lo.std + hi.std * hi.std));
  const double gap = lo.mean - hi.mean;
  std::string detail = "spearman=" + fmt("%.3f", t.spearman) + " gap=" + fmt("%.4f", gap) +
                       " pooled_sd=" + fmt("%.4f", pooled) + " means:";
  for (const auto& r : t.rows) detail += " " + fmt("%.4f", r.mean);
  return {t.spearman < 0.0 && gap > pooled, detail};
}

Outcome oracle_equivalence() {
  struct Case {
    oracle::TinyModel model;
  };
  const Case cases[] = {
      {{0.3, 1.0, 0.1, 1.0, 1.0, 0.3, {0.2, 0.8}, {{{0.95, 0.0}, {0.9, 0.0}}}}},
      {{0.3, 1.0, 0.1, 1.0, 1.0, 0.3, {0.2, 0.8}, {{{0.0, 0.6}, {0.97, 0.0}}}}},
      {{0.2, 0.9, 0.15, 0.6, 0.8, 0.0, {0.35, 0.7}, {{{0.0, 0.85}, {0.0, 0.4}}}}},
  };
  bool pass = true;
  std::string detail;
  std::uint64_t seed = 1;
  for (const auto& c : cases) {
    const auto& m = c.model;
    ModelConfig cfg;
    cfg.n_users = 2;
    cfg.n_movies = 2;
    cfg.timesteps = 1;
    cfg.p_malicious = m.p_malicious;
    cfg.malicious_rating = m.malicious_rating;
    cfg.rating_std = m.rating_std;
    cfg.target_mean = m.target_mean;
    cfg.target_std = m.target_std;
    cfg.difficulty = m.difficulty;
    cfg.movie_tastes = {m.movie_tastes[0], m.movie_tastes[1]};
    const RatingMatrix obs(2, 2, {m.observed[0][0], m.observed[0][1], m.observed[1][0], m.observed[1][1]});
    const auto exact = oracle::posterior_over_flags(m);

    const EmpiricalPosterior is = importance_sample(cfg, obs, 1000000, seed);
    const auto w = is.normalized_weights();
    std::array<double, 4> est_is{};
    for (std::size_t k = 0; k < w.size(); ++k) {
      est_is[is.traces[k].latents.malicious[0] * 2 + is.traces[k].latents.malicious[1]] += w[k];
    }
    const MhResult mh = mh_chain(cfg, obs, 1000000, seed);
    std::array<double, 4> est_mh{};
    for (const auto& t : mh.posterior.traces) {
      est_mh[t.latents.malicious[0] * 2 + t.latents.malicious[1]] += 1.0 / double(mh.posterior.size());
    }
    double tv_is = 0.0, tv_mh = 0.0;
    for (int i = 0; i < 4; ++i) {
      tv_is += 0.5 * std::abs(est_is[i] - exact[i]);
      tv_mh += 0.5 * std::abs(est_mh[i] - exact[i]);
    }
    pass = pass && tv_is < 0.02 && tv_mh < 0.02;
    detail += " case" + std::to_string(seed) + ":tv_is=" + fmt("%.4f", tv_is) + ",tv_mh=" + fmt("%.4f", tv_mh);
    ++seed;
  }
  return {pass, detail.substr(1)};
}

Outcome mh_pathology() {
  const Scenario s = scenario("default.json");
  const MhResult r = mh_chain(s.config, s.observed, 200000, 1);
  const double beta = r.stats(SiteKind::malicious).changed_acceptance_rate();
  const double upsilon = r.stats(SiteKind::user_taste).changed_acceptance_rate();
  return {beta * 5.0 <= upsilon && upsilon > 0.0,
          "beta=" + fmt("%.5f", beta) + " upsilon=" + fmt("%.5f", upsilon) + " (value-changing proposals; raw beta=" +
              fmt("%.4f", r.stats(SiteKind::malicious).acceptance_rate()) + ")"};
}

Outcome metric_suite() {
  std::vector<std::string> failures;
  auto check = [&](bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  };

  // Jensen-Shannon metric properties.
  std::mt19937_64 gen(7);
  std::exponential_distribution<double> e(1.0);
  std::bernoulli_distribution sparse(0.25);
  auto draw = [&] {
    std::vector<double> p(kDefaultBins);
    for (auto& v : p) v = sparse(gen) ? 0.0 : e(gen);
    if (std::accumulate(p.begin(), p.end(), 0.0) == 0.0) p[3] = 1.0;
    const double t = std::accumulate(p.begin(), p.end(), 0.0);
    for (auto& v : p) v /= t;
    return p;
  };
  int triangle = 0, symmetric = 0, bounded = 0, identity = 0;
  for (int k = 0; k < 10000; ++k) {
    const auto p = draw(), q = draw(), r = draw();
    const double pq = js_distance(p, q), pr = js_distance(p, r), qr = js_distance(q, r);
    triangle += pr <= pq + qr + 1e-12;
    symmetric += pq == js_distance(q, p);
    bounded += pq >= 0.0 && pq <= 1.0;
    identity += js_distance(p, p) == 0.0 && (p == q || pq > 1e-12);
  }
  check(triangle == 10000, "triangle inequality");
  check(symmetric == 10000, "symmetry");
  check(bounded == 10000, "bounds");
  check(identity == 10000, "identity");
  const std::vector<double> a{1.0, 0.0}, b{0.0, 1.0};
  check(js_distance(a, b) == 1.0 || std::abs(js_distance(a, b) - 1.0) < 1e-15, "disjoint support gives 1");

  // Sampler goodness of fit at 0.001.
  const double alpha = 0.001;
  int ks_tests = 0;
  const TruncatedNormalParams tns[] = {{0.5, 0.05, 0, 1}, {1.0, 0.05, 0, 1}, {5, 1, 0, 10},
                                       {0, 1, 5, 6},      {0, 1, 40, 41},    {-3, 0.1, 0, 1}};
  std::uint64_t stream = 0;
  for (const auto& c : tns) {
    const TruncatedNormal tn(c);
    Rng rng(99, stream++);
    std::vector<double> xs(5000);
    for (auto& x : xs) x = tn.sample(rng);
    auto ref = [&](double x) {
      if (x <= c.low) return 0.0;
      return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
          [&](double t) { return std::exp(teststats::tn_log_pdf_reference(t, c.mean, c.std, c.low, c.high)); },
          c.low, std::min(x, c.high), 10, 1e-10);
    };
    std::vector<double> sub(xs.begin(), xs.begin() + 1000);
    check(teststats::ks_test(sub, ref) > alpha, "KS truncated normal (oracle cdf) mean=" + fmt("%g", c.mean));
    check(teststats::ks_test(xs, [&](double x) { return tn.cdf(x); }) > alpha, "KS truncated normal");
    ks_tests += 2;
  }
  {
    const Uniform u(0.0, 1.0);
    Rng rng(99, 100);
    std::vector<double> xs(20000);
    for (auto& x : xs) x = u.sample(rng);
    check(teststats::ks_test(xs, [](double x) { return std::clamp(x, 0.0, 1.0); }) > alpha, "KS uniform");
    ++ks_tests;
  }
  {
    const Bernoulli bern(0.1);
    Rng rng(99, 101);
    std::vector<std::size_t> counts(2, 0);
    for (int i = 0; i < 100000; ++i) ++counts[static_cast<std::size_t>(bern.sample(rng))];
    check(teststats::chi_square_test(counts, {0.9, 0.1}) > alpha, "chi-square bernoulli");
    const std::vector<double> w{0.1, 0.0, 0.5, 0.2, 0.7};
    const Categorical cat(w);
    std::vector<std::size_t> cc(5, 0);
    for (int i = 0; i < 100000; ++i) ++cc[cat.sample(rng)];
    check(teststats::chi_square_test(cc, {0.1 / 1.5, 0.0, 0.5 / 1.5, 0.2 / 1.5, 0.7 / 1.5}) > alpha,
          "chi-square categorical");
  }

  // Truncated normal log density against 50-digit arithmetic.
  double worst = 0.0;
  const TruncatedNormalParams grid[] = {{0.5, 0.05, 0, 1}, {1, 0.05, 0, 1}, {0, 0.05, 0, 1}, {5, 1, 0, 10},
                                        {0, 1, 5, 6},      {0, 1, -6, -5},  {0, 1, 40, 41}, {-3, 0.1, 0, 1},
                                        {0.3, 10, 0, 1},   {2, 0.001, 0, 1}};
  for (const auto& c : grid) {
    const TruncatedNormal tn(c);
    for (int k = 0; k <= 50; ++k) {
      const double x = c.low + (c.high - c.low) * k / 50.0;
      worst = std::max(worst, std::abs(tn.log_pdf(x) - teststats::tn_log_pdf_reference(x, c.mean, c.std, c.low, c.high)));
    }
  }
  check(worst < 1e-9, "truncated normal log-pdf error " + fmt("%.3g", worst));

  std::string detail = "js 4x10^4 checks, " + std::to_string(ks_tests) + " KS + 2 chi-square tests, tn log-pdf max err " +
                       fmt("%.2g", worst);
  for (const auto& f : failures) detail += "; failed: " + f;
  return {failures.empty(), detail};
}

Outcome determinism_suite() {
  TempDir dir;
  const std::string scenario_path = dir / "scenario.json";
  struct Command {
    std::string name;
    std::vector<std::string> args;
    std::vector<std::string> outputs;  // suffixes appended to the output prefix
  };
  const std::string cfg = kConfigDir + "default.json";
  const std::vector<Command> commands = {
      {"generate", {"generate", "--config", cfg, "--out"}, {""}},
      {"infer-is", {"infer", "--scenario", scenario_path, "--n", "20000", "--seed", "3", "--out"},
       {".posterior.csv", ".summary.json"}},
      {"infer-mh", {"infer", "--scenario", scenario_path, "--engine", "mh", "--n", "20000", "--seed", "3", "--out"},
       {".posterior.csv", ".summary.json"}},
      {"influence-prior", {"influence", "--scenario", scenario_path, "--runs", "2000", "--seed", "5", "--out"},
       {".csv", ".json"}},
      {"influence-posterior",
       {"influence", "--scenario", scenario_path, "--mode", "posterior", "--posterior-n", "20000", "--runs", "1000",
        "--seed", "5", "--out"},
       {".csv", ".json"}},
      {"sweep", {"sweep", "--config", cfg, "--grid", "0.5,2,8", "--seeds", "3", "--runs", "300", "--out"},
       {".csv", ".json"}},
  };

  // The scenario every other command reads.
  {
    const std::vector<std::string> args{"shillsim", "generate", "--config", cfg, "--out", scenario_path};
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    if (run_cli(static_cast<int>(argv.size()), argv.data(), out, err) != 0) return {false, "generate failed"};
  }

  std::vector<std::string> failures;
  int compared = 0;
  for (const auto& c : commands) {
    std::vector<std::string> outputs_per_run;
    std::vector<std::string> stdout_per_run;
    const std::vector<std::string> thread_flags{"1", "1", "4"};
    for (std::size_t run = 0; run < thread_flags.size(); ++run) {
      const std::string prefix = dir / (c.name + "-" + std::to_string(run));
      std::vector<std::string> args{"shillsim", "--threads", thread_flags[run]};
      args.insert(args.end(), c.args.begin(), c.args.end());
      args.push_back(prefix);
      std::vector<const char*> argv;
      for (const auto& a : args) argv.push_back(a.c_str());
      std::ostringstream out, err;
      const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
      if (code != 0) {
        failures.push_back(c.name + " exit " + std::to_string(code) + ": " + err.str());
        break;
      }
      std::string bytes;
      for (const auto& suffix : c.outputs) bytes += read_text_file(prefix + suffix) + '\x1f';
      outputs_per_run.push_back(bytes);
      std::string printed = out.str();
      // generate echoes the output path, which differs per run by construction.
      if (const auto pos = printed.find("wrote "); pos != std::string::npos) printed.resize(pos);
      stdout_per_run.push_back(printed);
    }
    if (outputs_per_run.size() != thread_flags.size()) continue;
    for (std::size_t run = 1; run < outputs_per_run.size(); ++run) {
      ++compared;
      if (outputs_per_run[run] != outputs_per_run[0]) {
        failures.push_back(c.name + " files differ (run " + std::to_string(run) + ")");
      }
      if (stdout_per_run[run] != stdout_per_run[0]) failures.push_back(c.name + " stdout differs");
    }
  }
  std::string detail = std::to_string(commands.size()) + " commands, " + std::to_string(compared) +
                       " reruns compared byte for byte (threads 1, 1, 4)";
  for (const auto& f : failures) detail += "; " + f;
  return {failures.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"unambiguous_detection", unambiguous_detection},
      {"ambiguous_detection", ambiguous_detection},
      {"coordination_sweep", coordination_sweep_criterion},
      {"oracle_equivalence", oracle_equivalence},
      {"mh_pathology", mh_pathology},
      {"metric_suite", metric_suite},
      {"determinism_suite", determinism_suite},
  };

  std::vector<std::string> selected(argv + 1, argv + argc);
  for (const auto& name : selected) {
    if (std::none_of(criteria.begin(), criteria.end(), [&](const auto& c) { return c.first == name; })) {
      std::cerr << "unknown criterion " << name << '\n';
      return 2;
    }
  }

  int failed = 0;
  for (const auto& [name, run] : criteria) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), name) == selected.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << " [" << fmt("%.1f", secs) << " s]"
              << std::endl;
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
