#include "macroreal/spectrum.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include <fftw3.h>

namespace macroreal {
namespace {

constexpr std::size_t kMinimumSamples = 64;

}  // namespace

SpectrumReport autocorrelation_spectrum(std::span<const double> trace, double tau_spacing,
                                        const SpectrumOptions& options) {
  const std::size_t n = trace.size();
  require(n >= kMinimumSamples, "spectrum needs at least 64 samples");
  require(tau_spacing > 0 && std::isfinite(tau_spacing), "tau spacing must be positive");
  require(options.frequency_unit > 0, "frequency unit must be positive");

  double mean = 0.0;
  if (options.subtract_mean) {
    for (double v : trace) mean += v;
    mean /= static_cast<double>(n);
  }
  std::vector<double> input(n);
  for (std::size_t i = 0; i < n; ++i) {
    double w = 1.0;
    if (options.window == Window::hann) {
      w = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n)));
    }
    input[i] = (trace[i] - mean) * w;
  }
  const std::size_t bins = n / 2 + 1;
  std::vector<fftw_complex> output(bins);
  fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), input.data(), output.data(), FFTW_ESTIMATE);
  fftw_execute(plan);
  fftw_destroy_plan(plan);

  SpectrumReport report;
  report.window = options.window == Window::hann ? "hann" : "none";
  report.frequency_unit = options.frequency_unit;
  const double d_omega = 2.0 * std::numbers::pi / (static_cast<double>(n) * tau_spacing);
  report.bin_width = d_omega / options.frequency_unit;
  report.frequencies.resize(static_cast<Eigen::Index>(bins));
  report.power.resize(static_cast<Eigen::Index>(bins));
  for (std::size_t k = 0; k < bins; ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    report.frequencies[kk] = static_cast<double>(k) * report.bin_width;
    report.power[kk] = output[k][0] * output[k][0] + output[k][1] * output[k][1];
  }
  return report;
}

SpectrumReport autocorrelation_spectrum(std::span<const double> trace,
                                        std::span<const double> taus,
                                        const SpectrumOptions& options) {
  require(trace.size() == taus.size(), "trace and tau grid lengths differ");
  require(taus.size() >= 2, "tau grid too short");
  const double step = (taus.back() - taus.front()) / static_cast<double>(taus.size() - 1);
  for (std::size_t i = 1; i < taus.size(); ++i) {
    if (std::abs((taus[i] - taus[i - 1]) - step) > 1e-9 * std::abs(step)) {
      fail(ErrorKind::invalid_argument, "tau grid is not uniform");
    }
  }
  return autocorrelation_spectrum(trace, step, options);
}

SpectralPeak dominant_peak(const SpectrumReport& report, std::size_t min_bin) {
  const auto n = static_cast<std::size_t>(report.power.size());
  require(n >= 3 && min_bin < n, "spectrum too short for peak search");
  const auto& p = report.power;
  std::size_t best = n;
  for (std::size_t k = std::max<std::size_t>(min_bin, 1); k + 1 < n; ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    const bool local = p[kk] >= p[kk - 1] && p[kk] >= p[kk + 1];
    if (local && (best == n || p[kk] > p[static_cast<Eigen::Index>(best)])) best = k;
  }
  if (best == n) {
    // monotone spectrum: fall back to the global maximum above min_bin
    best = min_bin;
    for (std::size_t k = min_bin; k < n; ++k) {
      if (p[static_cast<Eigen::Index>(k)] > p[static_cast<Eigen::Index>(best)]) best = k;
    }
  }
  SpectralPeak peak;
  peak.bin = best;
  const auto b = static_cast<Eigen::Index>(best);
  peak.power = p[b];
  peak.frequency = report.frequencies[b];
  if (best >= 1 && best + 1 < n && p[b - 1] > 0 && p[b] > 0 && p[b + 1] > 0) {
    // Gaussian (log-parabolic) refinement
    const double lm = std::log(p[b - 1]), l0 = std::log(p[b]), lp = std::log(p[b + 1]);
    const double denom = lm - 2.0 * l0 + lp;
    if (denom < 0) {
      const double shift = 0.5 * (lm - lp) / denom;
      if (std::abs(shift) <= 0.5) peak.frequency += shift * report.bin_width;
    }
  }
  return peak;
}

}  // namespace macroreal
