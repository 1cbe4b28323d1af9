#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "experiment.hpp"
#include "macroreal/correlation.hpp"
#include "macroreal/kernels.hpp"
#include "macroreal/measurement.hpp"
#include "macroreal/protocol.hpp"
#include "macroreal/spectrum.hpp"
#include "output.hpp"

#ifndef MACROREAL_VERSION
#define MACROREAL_VERSION "unknown"
#endif

namespace macroreal::cli {
namespace {

using json = nlohmann::ordered_json;
constexpr double kInf = std::numeric_limits<double>::infinity();

json number(double v) { return std::isfinite(v) ? json(v) : json(format_double(v)); }

json number_list(const RealVector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number(v[i]));
  return a;
}

struct Run {
  std::string command;
  ExperimentConfig config;
  std::string config_bytes;
  std::filesystem::path out_dir;
  OutputSet outputs;
  StageTimer timer;
  json extra = json::object();
  std::vector<FixtureFile> fixtures;

  bool wants(const std::string& format) const {
    const auto& f = config.output.formats;
    return std::find(f.begin(), f.end(), format) != f.end();
  }
  void add(const std::string& name, std::string content) {
    const bool is_csv = name.ends_with(".csv");
    if (wants(is_csv ? "csv" : "json")) outputs.add(name, std::move(content));
  }
};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::config, "cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<double> with_limits(const Experiment& e) {
  std::vector<double> s;
  const bool limits = e.config().measurement.include_limits;
  if (limits) s.push_back(0.0);
  for (double v : e.sigmas()) s.push_back(v);
  if (limits) s.push_back(kInf);
  return s;
}

double single_tau(const Experiment& e) {
  const auto taus = e.taus();
  if (taus.size() != 1) {
    fail(ErrorKind::config, "times must hold exactly one tau for this command (got " +
                                std::to_string(taus.size()) + ")");
  }
  return taus.front();
}

double truncation_tail(const TruncationReport& r) { return r.a_tail + r.energy_tail; }

void cmd_eigensolve(Run& run) {
  const auto h = build_hamiltonian(run.config, &run.fixtures);
  run.timer.mark("diagonalize");
  const RealVector& e = h->eigenvalues();
  Csv csv({"index", "eigenvalue_au"});
  for (Eigen::Index i = 0; i < e.size(); ++i) {
    csv.cell(static_cast<long long>(i)).cell(e[i]);
    csv.end_row();
  }
  run.add("spectrum.csv", csv.text());
  run.extra["dimension"] = e.size();
  if (e.size() >= 2) run.extra["lowest_gap_au"] = e[1] - e[0];
}

void cmd_correlate(Run& run, bool oracle) {
  const Experiment exp(run.config);
  run.fixtures = exp.model().fixtures;
  run.timer.mark("system");
  const auto sigmas = with_limits(exp);
  const auto taus = exp.taus();
  if (oracle && exp.system().dimension() > 64) {
    fail(ErrorKind::regime, "--oracle uses full 2-D pointer quadrature and is limited to dimension <= 64 "
                            "(this system has " + std::to_string(exp.system().dimension()) +
                            "); use an explicit_matrix fixture");
  }
  std::vector<std::string> header{"sigma", "tau", "value", "method", "truncation_tail"};
  if (oracle) {
    header.push_back("oracle_value");
    header.push_back("relative_discrepancy");
  }
  Csv csv(header);
  double worst = 0.0;
  for (double sigma : sigmas) {
    TruncationReport rep;
    const RealVector trace = exp.system().correlation_trace(sigma, taus, &rep);
    for (std::size_t k = 0; k < taus.size(); ++k) {
      csv.cell(sigma).cell(taus[k]).cell(trace[static_cast<Eigen::Index>(k)]);
      csv.cell(to_string(CorrelationMethod::closed_form)).cell(truncation_tail(rep));
      if (oracle) {
        double ref;
        if (sigma == 0.0) {
          ref = correlation_projective_limit(exp.system(), taus[k]).value;
        } else if (std::isinf(sigma)) {
          ref = correlation_iwm_limit(exp.system(), taus[k]).value;
        } else {
          const Propagator prop(exp.model().h, taus[k]);
          ref = correlation_brute_force(joint_distribution(exp.model().state, make_measurement(exp.model().a, sigma),
                                                           prop, make_measurement(exp.model().b, sigma)))
                    .value;
        }
        const double d = std::abs(trace[static_cast<Eigen::Index>(k)] - ref) /
                         std::max(std::abs(ref), std::numeric_limits<double>::min());
        worst = std::max(worst, d);
        csv.cell(ref).cell(d);
      }
      csv.end_row();
    }
  }
  run.timer.mark("correlate");
  run.add("correlation.csv", csv.text());
  run.extra["d_eff"] = exp.d_eff();
  if (oracle) run.extra["max_relative_discrepancy"] = worst;
}

void cmd_fig1(Run& run) {
  const Experiment exp(run.config);
  run.fixtures = exp.model().fixtures;
  run.timer.mark("system");
  const auto sigmas = with_limits(exp);
  const auto taus = exp.taus();
  SpectrumOptions opts;
  opts.frequency_unit = exp.model().frequency_unit;
  Csv traces({"sigma", "tau", "value", "method", "truncation_tail"});
  Csv spectra({"sigma", "omega_over_omega0", "power"});
  Csv peaks({"sigma", "peak_omega_over_omega0", "peak_bin"});
  json peak_list = json::array();
  for (double sigma : sigmas) {
    TruncationReport rep;
    const RealVector trace = exp.system().correlation_trace(sigma, taus, &rep);
    for (std::size_t k = 0; k < taus.size(); ++k) {
      traces.cell(sigma).cell(taus[k]).cell(trace[static_cast<Eigen::Index>(k)]);
      traces.cell(to_string(CorrelationMethod::closed_form)).cell(truncation_tail(rep));
      traces.end_row();
    }
    const auto sp = autocorrelation_spectrum(std::span<const double>(trace.data(), trace.size()),
                                             std::span<const double>(taus), opts);
    const double top = sp.power.maxCoeff();
    for (Eigen::Index i = 0; i < sp.frequencies.size(); ++i) {
      spectra.cell(sigma).cell(sp.frequencies[i]).cell(top > 0 ? sp.power[i] / top : 0.0);
      spectra.end_row();
    }
    const auto pk = dominant_peak(sp);
    peaks.cell(sigma).cell(pk.frequency).cell(static_cast<long long>(pk.bin));
    peaks.end_row();
    peak_list.push_back({{"sigma", number(sigma)}, {"peak_omega_over_omega0", pk.frequency}});
  }
  run.timer.mark("spectra");
  run.add("fig1_traces.csv", traces.text());
  run.add("fig1_spectra.csv", spectra.text());
  run.add("fig1_peaks.csv", peaks.text());
  run.extra["d_eff"] = exp.d_eff();
  run.extra["peaks"] = peak_list;
}

json fit_json(const DecayFit& f) {
  return {{"model", f.model}, {"parameter", number(f.parameter)}, {"intercept", number(f.intercept)},
          {"rms_residual", number(f.rms_residual)}, {"points", f.points}};
}

json delta_json(const DeltaTable& t) {
  json entries = json::array();
  for (const auto& e : t.entries) {
    entries.push_back({{"sigma", number(e.sigma)}, {"n", number(e.n)}, {"correlation", number(e.correlation)},
                       {"mean_a", number(e.mean_a)}, {"mean_b", number(e.mean_b)},
                       {"delta_qc", number(e.delta_qc)}, {"delta", number(e.delta)},
                       {"derivative_term", number(e.derivative_term)}, {"region", to_string(e.region)}});
  }
  json fits = json::array();
  for (const auto& f : t.fits) fits.push_back(fit_json(f));
  json asym = json::array();
  for (double d : t.asymptotic_delta) asym.push_back(number(d));
  return {{"tau", number(t.tau)}, {"scale", number(t.scale)}, {"n_values", t.n_values},
          {"asymptotic_delta", asym}, {"fits", fits}, {"entries", entries}};
}

void add_delta_csv(Run& run, const DeltaTable& t, const std::string& prefix) {
  Csv delta({"sigma", "N", "delta", "delta_qc"});
  Csv regions({"sigma", "N", "region"});
  for (const auto& e : t.entries) {
    delta.cell(e.sigma).cell(e.n).cell(e.delta).cell(e.delta_qc);
    delta.end_row();
    regions.cell(e.sigma).cell(e.n).cell(to_string(e.region));
    regions.end_row();
  }
  run.add(prefix + "delta.csv", delta.text());
  run.add(prefix + "regions.csv", regions.text());
}

Tolerances tolerances_of(const ExperimentConfig& c) {
  return Tolerances{c.tolerances.eps_iwm, c.tolerances.eps_nsit};
}

void cmd_fig2(Run& run) {
  const Experiment exp(run.config);
  run.fixtures = exp.model().fixtures;
  const double tau = single_tau(exp);
  const auto& ns = run.config.ensemble;
  if (ns.back() < 1000.0 * ns.front()) {
    fail(ErrorKind::config, "ensemble.N must span at least three decades for reproduce-fig2");
  }
  const DelaySlice slice = exp.system().delay_slice(tau);
  const double scale = correlation_scale(exp.system(), exp.system().transition(tau));
  run.timer.mark("system");
  const auto table = delta_statistic(exp.system(), slice, exp.sigmas(), ns, tolerances_of(run.config), scale);
  run.timer.mark("delta");
  add_delta_csv(run, table, "fig2_");
  json summary = delta_json(table);
  summary.erase("entries");
  json verdicts = json::array();
  const std::size_t m = table.entries.size() / ns.size();
  for (std::size_t i = 0; i < ns.size(); ++i) {
    verdicts.push_back({{"N", ns[i]}, {"asymptotic_region", to_string(table.entries[i * m + m - 1].region)}});
  }
  summary["asymptotic_regions"] = verdicts;
  summary["d_eff"] = exp.d_eff();
  run.add("fig2_summary.json", summary.dump(2) + "\n");
  run.extra["fits"] = summary["fits"];
  run.extra["asymptotic_regions"] = verdicts;
}

void cmd_protocol(Run& run) {
  const Experiment exp(run.config);
  run.fixtures = exp.model().fixtures;
  run.timer.mark("system");
  ProtocolOptions o;
  o.sigma_values = exp.sigmas();
  o.sigma_b = exp.sigma_b();
  o.tau = single_tau(exp);
  o.n = run.config.protocol.n;
  o.delta_n_values = run.config.ensemble;
  if (run.config.protocol.nsit_sigma) o.nsit_sigma = exp.absolute_sigma(*run.config.protocol.nsit_sigma);
  o.tolerances = tolerances_of(run.config);
  o.hermite_nodes = run.config.tolerances.hermite_nodes;
  const ProtocolReport rep = run_protocol(exp.system(), o);
  run.timer.mark("protocol");

  json iwm = {{"sigma_values", number_list(rep.iwm.sigma_values)},
              {"derivative_norms", number_list(rep.iwm.derivative_norms)},
              {"scaled_norms", number_list(rep.iwm.scaled_norms)},
              {"sigma_threshold", rep.iwm.sigma_threshold ? number(*rep.iwm.sigma_threshold) : json(nullptr)},
              {"threshold_index", rep.iwm.threshold_index ? json(*rep.iwm.threshold_index) : json(nullptr)},
              {"eps_iwm", rep.iwm.eps_iwm}, {"n", rep.iwm.n}, {"sigma_b", rep.iwm.sigma_b}, {"tau", rep.iwm.tau}};
  json nsit = nullptr;
  if (rep.nsit) {
    const auto& r = *rep.nsit;
    nsit = {{"l1_residual", number(r.l1_residual)}, {"factorization_gap", number(r.factorization_gap)},
            {"scale", number(r.scale)}, {"eps_nsit", r.eps_nsit}, {"holds", r.holds},
            {"iwm_consistent", r.iwm_consistent ? json(*r.iwm_consistent) : json(nullptr)},
            {"sigma_a", number(r.sigma_a)}, {"sigma_b", number(r.sigma_b)}, {"n", r.n}};
  }
  json report = {{"verdict", to_string(rep.verdict)},
                 {"d_eff", number(rep.d_eff)},
                 {"tau", number(rep.tau)},
                 {"n", rep.n},
                 {"tolerances", {{"eps_iwm", rep.tolerances.eps_iwm}, {"eps_nsit", rep.tolerances.eps_nsit}}},
                 {"iwm", iwm},
                 {"nsit", nsit},
                 {"delta", delta_json(rep.delta)}};
  run.add("protocol_report.json", report.dump() + "\n");
  add_delta_csv(run, rep.delta, "protocol_");

  // reduced distributions of y_B with and without the first measurement
  auto dist_csv = [](const PointerDistribution& d) {
    Csv csv({"y", "density"});
    for (Eigen::Index i = 0; i < d.y.size(); ++i) {
      csv.cell(d.y[i]).cell(d.density[i]);
      csv.end_row();
    }
    return csv.text();
  };
  if (rep.iwm.threshold_index) {
    const ReducedDistributions dist(exp.system(), o.tau, o.sigma_b, o.n, 0, o.hermite_nodes);
    run.add("distribution_unmeasured.csv", dist_csv(dist.unmeasured()));
    const double s = rep.nsit ? rep.nsit->sigma_a : *rep.iwm.sigma_threshold;
    run.add("distribution_measured.csv", dist_csv(dist.reduced(s)));
  }
  run.extra["verdict"] = to_string(rep.verdict);
}

json manifest(const Run& run) {
  json files = json::array();
  for (const auto& [name, content] : run.outputs.files()) {
    files.push_back({{"file", name}, {"sha256", sha256_hex(content)}, {"bytes", content.size()}});
  }
  json fixtures = json::array();
  for (const auto& f : run.fixtures) fixtures.push_back({{"file", f.path}, {"sha256", f.sha256}});
  json stages = json::array();
  for (const auto& [name, seconds] : run.timer.stages()) stages.push_back({{"stage", name}, {"seconds", seconds}});
  return {{"command", run.command},
          {"code_version", MACROREAL_VERSION},
          {"config_sha256", sha256_hex(run.config_bytes)},
          {"schema_version", run.config.schema_version},
          {"fixtures", fixtures},
          {"worker_count", kernels::worker_count()},
          {"wall_clock_seconds", run.timer.total()},
          {"stages", stages},
          {"outputs", files},
          {"results", run.extra}};
}

std::filesystem::path output_directory(const ExperimentConfig& config, const CommandOptions& options) {
  if (options.out) return *options.out;
  if (const char* env = std::getenv("MACROREAL_OUT"); env && *env) return env;
  return config.output.directory;
}

}  // namespace

int run_command(const std::string& name, const CommandOptions& options, std::ostream& log,
                std::ostream& err) {
  try {
    if (options.workers < 0) fail(ErrorKind::config, "--workers must be >= 0");
    kernels::set_worker_count(options.workers);
    Run run;
    run.command = name;
    run.config_bytes = read_file(options.config);
    run.config = parse_config(run.config_bytes, options.config.parent_path());
    run.out_dir = output_directory(run.config, options);
    if (options.oracle && name != "correlate") fail(ErrorKind::config, "--oracle only applies to correlate");

    if (name == "eigensolve") cmd_eigensolve(run);
    else if (name == "correlate") cmd_correlate(run, options.oracle);
    else if (name == "reproduce-fig1") cmd_fig1(run);
    else if (name == "reproduce-fig2") cmd_fig2(run);
    else if (name == "protocol") cmd_protocol(run);
    else fail(ErrorKind::config, "unknown command " + name);

    OutputSet all = run.outputs;
    all.add("manifest.json", manifest(run).dump(2) + "\n");
    all.commit(run.out_dir);
    for (const auto& [file, content] : all.files()) log << (run.out_dir / file).string() << "\n";
    if (run.extra.contains("verdict")) log << "verdict: " << run.extra["verdict"].get<std::string>() << "\n";
    return ExitCode::ok;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    switch (e.kind()) {
      case ErrorKind::config:
      case ErrorKind::invalid_argument: return ExitCode::config_error;
      case ErrorKind::regime:
      case ErrorKind::numerical:
        err << "hint: widen the grid, loosen the truncation tails or choose a larger sigma_b\n";
        return ExitCode::regime_error;
      case ErrorKind::refusal: return ExitCode::refusal;
    }
    return ExitCode::failure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return ExitCode::failure;
  }
}

}  // namespace macroreal::cli
