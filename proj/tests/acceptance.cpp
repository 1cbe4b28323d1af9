// Acceptance checks, one line each. With no argument every check runs;
// otherwise only the named ones. Exit status is nonzero if any check fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "commands.hpp"
#include "config.hpp"
#include "experiment.hpp"
#include "fixtures.hpp"
#include "macroreal/correlation.hpp"
#include "macroreal/measurement.hpp"
#include "macroreal/protocol.hpp"

using namespace macroreal;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kConfigs = MACROREAL_CONFIG_DIR;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Check {
  std::string id;
  std::string title;
  double budget_s;  // 0: no runtime bound
  std::function<Outcome()> run;
};

std::string fmt(double x, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    std::vector<std::string> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(cell);
    rows.push_back(row);
  }
  return rows;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("macroreal_acceptance_" + name);
  fs::remove_all(p);
  return p;
}

int run_cli(const std::string& command, const fs::path& config, const fs::path& out) {
  cli::CommandOptions o;
  o.config = config;
  o.out = out;
  std::ostringstream log, err;
  const int code = cli::run_command(command, o, log, err);
  if (code != 0 && code != 4) std::fprintf(stderr, "%s", err.str().c_str());
  return code;
}

// A copy of a shipped config with scaled tolerances; fixture paths made absolute.
fs::path scaled_config(const std::string& name, double factor) {
  auto c = cli::load_config(kConfigs / name);
  c.tolerances.eps_iwm *= factor;
  c.tolerances.eps_nsit *= factor;
  if (!c.system.file.empty()) c.system.file = fs::absolute(c.base_dir / c.system.file).string();
  const fs::path dir = scratch("cfg_" + fmt(factor) + "_" + name);
  fs::create_directories(dir);
  std::ofstream(dir / name) << cli::serialize_config(c);
  return dir / name;
}

// ---- 1 ------------------------------------------------------------------

Outcome oracle_equivalence() {
  double worst = 0.0;
  for (int n : {3, 5}) {
    auto l = fixtures::random_levels(n, 1000 + n);
    const double d = effective_dimension(l.psi, *l.a).value;
    for (double ratio : {0.3, 1.0, 3.0, 10.0}) {
      for (double tau : {0.0, 0.7, 2.1}) {
        const Propagator prop(l.h, tau);
        const double closed = correlation_closed_form(l.psi, l.a, l.b, prop, ratio * d).value;
        const auto joint = joint_distribution(l.psi, make_measurement(l.a, ratio * d), prop,
                                              make_measurement(l.b, ratio * d));
        const double brute = correlation_brute_force(joint).value;
        worst = std::max(worst, std::abs(closed - brute) / std::abs(brute));
      }
    }
  }
  return {worst <= 1e-6, "max relative discrepancy " + fmt(worst)};
}

// ---- 2 ------------------------------------------------------------------

struct LimitCase {
  fixtures::Levels levels;
  std::unique_ptr<TwoTimeSystem> system;
  double d_eff, min_gap;
};

std::vector<LimitCase> limit_cases() {
  std::vector<LimitCase> out;
  for (int n : {3, 5}) {
    LimitCase c;
    c.levels = fixtures::random_levels(n, 2000 + n);
    SystemOptions opts;
    opts.population_tail = 0.0;
    c.system = std::make_unique<TwoTimeSystem>(c.levels.h, c.levels.a, c.levels.b, c.levels.psi, opts);
    c.d_eff = effective_dimension(c.levels.psi, *c.levels.a).value;
    const RealVector& a = c.levels.a->eigenvalues();
    c.min_gap = kInf;
    for (Eigen::Index i = 1; i < a.size(); ++i) c.min_gap = std::min(c.min_gap, a[i] - a[i - 1]);
    out.push_back(std::move(c));
  }
  return out;
}

Outcome weak_limit() {
  double worst_value = 0.0, worst_slope = -2.0;
  for (const auto& c : limit_cases()) {
    for (double tau : {0.4, 1.7}) {
      const auto slice = c.system->delay_slice(tau);
      const double target = correlation_iwm_limit(*c.system, tau).value;
      worst_value = std::max(worst_value,
                             std::abs(correlation_closed_form(*c.system, slice, 1e6 * c.d_eff).value - target) /
                                 std::abs(target));
      std::vector<double> s, e;
      for (double r : {10.0, 20.0, 40.0, 80.0, 160.0}) {
        s.push_back(r * c.d_eff);
        e.push_back(std::abs(correlation_closed_form(*c.system, slice, r * c.d_eff).value - target));
      }
      const double k = loglog_slope(s, e);
      if (std::abs(k + 2.0) > std::abs(worst_slope + 2.0)) worst_slope = k;
    }
  }
  const bool ok = worst_value <= 1e-6 && std::abs(worst_slope + 2.0) <= 0.2;
  return {ok, "relative error at 1e6 d_eff " + fmt(worst_value) + ", worst slope " + fmt(worst_slope, 4) +
                  " (want -2 +- 0.2)"};
}

Outcome projective_limit() {
  double worst_value = 0.0, worst_slope = 2.0;
  for (const auto& c : limit_cases()) {
    for (double tau : {0.4, 1.7}) {
      const auto slice = c.system->delay_slice(tau);
      const double target = correlation_projective_limit(*c.system, tau).value;
      worst_value = std::max(worst_value,
                             std::abs(correlation_closed_form(*c.system, slice, 1e-6 * c.min_gap).value - target) /
                                 std::abs(target));
      // widths where the error is still above rounding
      std::vector<double> s, e;
      for (double r : {0.2, 0.17, 0.14, 0.12, 0.1}) {
        s.push_back(r * c.min_gap);
        e.push_back(std::abs(correlation_closed_form(*c.system, slice, r * c.min_gap).value - target));
      }
      const double k = loglog_slope(s, e);
      if (std::abs(k - 2.0) > std::abs(worst_slope - 2.0)) worst_slope = k;
    }
  }
  const bool ok = worst_value <= 1e-6 && std::abs(worst_slope - 2.0) <= 0.2;
  return {ok, "relative error at 1e-6 gap " + fmt(worst_value) + ", worst slope " + fmt(worst_slope, 4) +
                  " (want 2 +- 0.2; the damping is exp(-gap^2/8 sigma^2), faster than any power)"};
}

// ---- 3 ------------------------------------------------------------------

struct Peak {
  double sigma, omega;
  long bin;
};

std::vector<Peak> fig1_peaks() {
  const auto out = scratch("fig1");
  if (run_cli("reproduce-fig1", kConfigs / "fig1.json", out) != 0) return {};
  std::vector<Peak> p;
  for (const auto& r : read_csv(out / "fig1_peaks.csv"))
    p.push_back({r[0] == "inf" ? kInf : std::stod(r[0]), std::stod(r[1]), std::stol(r[2])});
  std::sort(p.begin(), p.end(), [](const Peak& a, const Peak& b) { return a.sigma < b.sigma; });
  return p;
}

Outcome fig1_projective_peak() {
  const auto p = fig1_peaks();
  if (p.empty() || p.front().sigma != 0.0) return {false, "no sigma = 0 curve"};
  return {std::abs(p.front().omega - 1.0) <= 0.02, "peak at " + fmt(p.front().omega, 4) + " omega0"};
}

Outcome fig1_weak_peak() {
  const auto p = fig1_peaks();
  if (p.empty() || p.back().sigma != kInf) return {false, "no sigma = inf curve"};
  return {std::abs(p.back().omega - 1.28) <= 0.03,
          "peak at " + fmt(p.back().omega, 4) + " omega0 (want 1.28 +- 0.03)"};
}

Outcome fig1_monotone() {
  const auto p = fig1_peaks();
  if (p.size() < 3) return {false, "too few curves"};
  // location compared on the frequency grid; sub-bin refinement is not a location change
  std::string trail;
  bool ok = true;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i > 0 && p[i].bin < p[i - 1].bin) ok = false;
    trail += (i ? " " : "") + fmt(p[i].omega, 4);
  }
  return {ok, "peaks by increasing sigma: " + trail};
}

// ---- 4 ------------------------------------------------------------------

json fig2_summary() {
  const auto out = scratch("fig2");
  if (run_cli("reproduce-fig2", kConfigs / "fig2.json", out) != 0) return {};
  return json::parse(read_file(out / "fig2_summary.json"));
}

Outcome fig2_single() {
  const auto s = fig2_summary();
  if (s.is_null()) return {false, "reproduce-fig2 failed"};
  const double eps = cli::load_config(kConfigs / "fig2.json").tolerances.eps_nsit;
  const double rel = std::abs(s["asymptotic_delta"][0].get<double>()) / s["scale"].get<double>();
  return {s["n_values"][0] == 1.0 && rel > 10 * eps,
          "|delta|/scale at N = 1: " + fmt(rel) + " (need > " + fmt(10 * eps) + ")"};
}

Outcome fig2_decay() {
  const auto s = fig2_summary();
  if (s.is_null()) return {false, "reproduce-fig2 failed"};
  bool ok = true;
  const auto& d = s["asymptotic_delta"];
  for (std::size_t i = 1; i < d.size(); ++i)
    ok = ok && std::abs(d[i].get<double>()) < std::abs(d[i - 1].get<double>());
  std::map<std::string, double> fits;
  for (const auto& f : s["fits"]) fits[f["model"]] = f["parameter"];
  ok = ok && fits.count("power_law") && fits.count("exponential");
  return {ok, "power-law exponent " + fmt(fits["power_law"], 6) + ", exponential rate " +
                  fmt(fits["exponential"])};
}

Outcome fig2_flip() {
  const auto s = fig2_summary();
  if (s.is_null()) return {false, "reproduce-fig2 failed"};
  const auto& r = s["asymptotic_regions"];
  std::string first_macro = "none";
  for (const auto& e : r)
    if (e["asymptotic_region"] == "macrorealistic") {
      first_macro = fmt(e["N"].get<double>());
      break;
    }
  const auto& last = r.back();
  return {r.front()["asymptotic_region"] == "non-macrorealistic" && last["asymptotic_region"] == "macrorealistic",
          "N = " + fmt(last["N"].get<double>()) + " is " + last["asymptotic_region"].get<std::string>() +
              "; first macrorealistic N " + first_macro};
}

// ---- 5 ------------------------------------------------------------------

Outcome n_single() {
  double worst = 0.0;
  for (const auto& c : limit_cases()) {
    for (double tau : {0.0, 0.9, 2.3}) {
      const auto slice = c.system->delay_slice(tau);
      for (double r : {0.0, 0.1, 0.5, 1.0, 4.0, kInf}) {
        const double ref = correlation_closed_form(*c.system, slice, r * c.d_eff).value;
        const double mb = correlation_many_body(*c.system, ManyBodySpec{1, {0}}, slice, r * c.d_eff).value;
        worst = std::max(worst, std::abs(mb - ref) / std::max(1.0, std::abs(ref)));
      }
    }
  }
  return {worst <= 1e-14, "max relative difference " + fmt(worst)};
}

Outcome n_pair() {
  double worst = 0.0;
  for (const auto& c : limit_cases()) {
    for (double tau : {0.0, 0.9, 2.3}) {
      const auto slice = c.system->delay_slice(tau);
      for (double r : {0.1, 0.5, 1.0, 4.0, 30.0}) {
        const double mb = correlation_many_body(*c.system, ManyBodySpec{2, {0}}, slice, r * c.d_eff).value;
        const double col = correlation_collective(*c.system, slice, r * c.d_eff, 2.0).value;
        worst = std::max(worst, std::abs(mb - col) / std::max(1.0, std::abs(col)));
      }
    }
  }
  return {worst <= 1e-8, "max relative difference " + fmt(worst)};
}

// ---- 6 ------------------------------------------------------------------

std::string protocol_verdict(const fs::path& config, int* code = nullptr) {
  const auto out = scratch("protocol_" + config.parent_path().filename().string() + "_" + config.stem().string());
  const int rc = run_cli("protocol", config, out);
  if (code) *code = rc;
  if (rc != 0) return "exit " + std::to_string(rc);
  return json::parse(read_file(out / "protocol_report.json")).at("verdict");
}

Outcome protocol_refusal() {
  int code = 0;
  const auto v = protocol_verdict(kConfigs / "refusal.json", &code);
  // and straight through the library, below the detected threshold
  const auto exp = cli::Experiment(cli::load_config(kConfigs / "levels3_protocol.json"));
  const auto& sys = exp.system();
  const double d = exp.d_eff();
  ReducedDistributions dist(sys, exp.taus().front(), 0.1 * d);
  std::vector<double> sigmas;
  for (int k = -4; k <= 12; ++k) sigmas.push_back(d * std::pow(10.0, k / 4.0));
  const auto scan = iwm_scan(dist, sigmas, 1e-4);
  bool refused = false;
  if (scan.sigma_threshold) {
    try {
      nsit_test(dist, sys.delay_slice(exp.taus().front()), scan, sigmas.front(), 1e-4);
    } catch (const Error& e) {
      refused = e.kind() == ErrorKind::refusal;
    }
  }
  return {code == 4 && refused, "cli exit " + std::to_string(code) + ", library " + (refused ? "refused" : "ran")};
}

Outcome protocol_eigenstate() {
  const auto v = protocol_verdict(kConfigs / "eigenstate.json");
  return {v == "macrorealistic", "verdict " + v};
}

Outcome protocol_double_well() {
  const auto v = protocol_verdict(kConfigs / "double_well_protocol.json");
  return {v == "non-macrorealistic", "verdict " + v};
}

Outcome protocol_stability() {
  bool ok = true;
  std::string detail;
  for (const char* name : {"eigenstate.json", "levels3_protocol.json", "double_well_protocol.json"}) {
    std::vector<std::string> v;
    for (double f : {1.0, 2.0, 0.5}) v.push_back(protocol_verdict(f == 1.0 ? kConfigs / name : scaled_config(name, f)));
    ok = ok && v[0] == v[1] && v[0] == v[2];
    detail += std::string(detail.empty() ? "" : "; ") + name + ": " + v[0] + "/" + v[1] + "/" + v[2];
  }
  return {ok, detail};
}

// ---- 7 ------------------------------------------------------------------

Outcome probability_identities() {
  constexpr double kJointTol = 1e-8, kMarginalTol = 1e-7, kSingleTol = 1e-10;
  constexpr Eigen::Index kMaxPoints = 4096;
  double joint_err = 0.0, marginal_err = 0.0, single_err = 0.0, reduced_err = 0.0;
  std::size_t configs = 0, cases = 0;
  for (const auto& entry : fs::directory_iterator(kConfigs)) {
    if (entry.path().extension() != ".json") continue;
    const cli::Experiment exp(cli::load_config(entry.path()));
    const auto& sys = exp.system();
    const RealVector pop = sys.coefficients().cwiseAbs2();
    const double sigma_b = exp.sigma_b();
    // widths whose pointer grids stay below kMaxPoints
    std::vector<double> sig;
    for (double s : exp.sigmas())
      if (pointer_grid_for(sys, s).size <= static_cast<std::size_t>(kMaxPoints)) sig.push_back(s);
    if (sig.size() > 3) sig = {sig.front(), sig[sig.size() / 2], sig.back()};
    auto taus = exp.taus();
    if (taus.size() > 2) taus = {taus.front(), taus.back()};
    ++configs;
    for (double tau : taus) {
      const auto tr = sys.transition(tau);
      const auto grid_b = pointer_grid_for(tr, sigma_b);
      if (grid_b.size > static_cast<std::size_t>(kMaxPoints)) continue;
      for (double s : sig) {
        const auto grid_a = pointer_grid_for(sys, s);
        const auto joint = joint_distribution(sys, tr, s, sigma_b, grid_a, grid_b);
        const auto single = mixture_distribution(pop, sys.a_values(), s, grid_a);
        const RealVector first = joint.marginal_a();
        const auto reduced = reduced_distribution(joint);
        const auto dephased = reduced_distribution(sys, tr, s, sigma_b, grid_b);
        joint_err = std::max(joint_err, std::abs(joint.integral() - 1.0));
        single_err = std::max(single_err, std::abs(single.integral() - pop.sum()));
        marginal_err = std::max(marginal_err, (first - single.density).cwiseAbs().maxCoeff() /
                                                   single.density.maxCoeff());
        reduced_err = std::max({reduced_err, std::abs(reduced.integral() - 1.0), l1_distance(reduced, dephased)});
        ++cases;
      }
    }
  }
  const bool ok = configs >= 8 && cases > 0 && joint_err <= kJointTol && marginal_err <= kMarginalTol &&
                  single_err <= kSingleTol && reduced_err <= kMarginalTol;
  return {ok, std::to_string(cases) + " cases over " + std::to_string(configs) + " configs; joint norm " +
                  fmt(joint_err) + ", first marginal " + fmt(marginal_err) + ", single norm " + fmt(single_err) +
                  ", reduced " + fmt(reduced_err)};
}

// ---- 8 ------------------------------------------------------------------

Outcome intensive_variance_law() {
  double worst = 0.0;
  for (int n : {3, 5}) {
    auto l = fixtures::random_levels(n, 4000 + n);
    const double m = l.a->expectation(l.psi.amplitudes);
    const double var1 = l.a->apply(l.psi.amplitudes).squaredNorm() - m * m;
    for (std::size_t big_n : {1u, 2u, 10u, 1000u}) {
      const double v = intensive_variance({l.psi}, *l.a, big_n);
      worst = std::max(worst, std::abs(v - var1 / static_cast<double>(big_n)) / (var1 / static_cast<double>(big_n)));
    }
  }
  return {worst <= 1e-12, "max relative deviation " + fmt(worst)};
}

const std::vector<Check>& checks() {
  static const std::vector<Check> all{
      {"1", "closed form equals pointer quadrature on 3/5-level fixtures", 10, oracle_equivalence},
      {"2a", "weak-coupling limit with sigma^-2 error slope", 30, weak_limit},
      {"2b", "projective limit with sigma^2 error slope", 30, projective_limit},
      {"3a", "double-well projective spectrum peaks at omega0", 300, fig1_projective_peak},
      {"3b", "double-well weak-coupling spectrum peaks at 1.28 omega0", 300, fig1_weak_peak},
      {"3c", "double-well peak location monotone in sigma", 300, fig1_monotone},
      {"4a", "ensemble: single-particle delta bounded away from zero", 300, fig2_single},
      {"4b", "ensemble: delta decays with N, both fits recorded", 300, fig2_decay},
      {"4c", "ensemble: largest N is macrorealistic", 300, fig2_flip},
      {"5a", "many-body form at N = 1 equals single-particle form", 0, n_single},
      {"5b", "many-body form at N = 2 equals collective form", 0, n_pair},
      {"6a", "protocol refuses below the IWM threshold", 0, protocol_refusal},
      {"6b", "eigenstate fixture is macrorealistic", 0, protocol_eigenstate},
      {"6c", "double-well oscillator is non-macrorealistic", 0, protocol_double_well},
      {"6d", "verdicts stable under x2 and /2 tolerances", 0, protocol_stability},
      {"7", "probability identities on every shipped config", 0, probability_identities},
      {"8", "intensive variance equals single-particle variance over N", 0, intensive_variance_law},
  };
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> wanted(argv + 1, argv + argc);
  int failures = 0, ran = 0;
  for (const auto& c : checks()) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.id) == wanted.end()) continue;
    ++ran;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_s > 0 && secs > c.budget_s) {
      o.pass = false;
      o.detail += "; over the " + fmt(c.budget_s) + " s budget";
    }
    std::printf("%s [%s] %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", c.id.c_str(), c.title.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  }
  if (ran == 0) {
    std::fprintf(stderr, "no such check\n");
    return 2;
  }
  return failures == 0 ? 0 : 1;
}
