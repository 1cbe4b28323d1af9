#pragma once

#include <cstddef>
#include <span>
#include <string>

#include "macroreal/types.hpp"

namespace macroreal {

enum class Window { none, hann };

struct SpectrumOptions {
  Window window = Window::hann;
  bool subtract_mean = true;
  /// Angular frequencies are reported divided by this (e.g. omega0).
  double frequency_unit = 1.0;
};

/// One-sided power spectrum |FFT|² of a uniformly sampled trace.
struct SpectrumReport {
  RealVector frequencies;  // angular, in units of frequency_unit
  RealVector power;
  std::string window;
  double frequency_unit = 1.0;
  double bin_width = 0.0;  // in units of frequency_unit
};

SpectrumReport autocorrelation_spectrum(std::span<const double> trace, double tau_spacing,
                                        const SpectrumOptions& options = {});

/// Checks that the tau samples are uniform (relative 1e-9) before transforming.
SpectrumReport autocorrelation_spectrum(std::span<const double> trace,
                                        std::span<const double> taus,
                                        const SpectrumOptions& options = {});

inline SpectrumReport autocorrelation_spectrum(const RealVector& trace,
                                               std::span<const double> taus,
                                               const SpectrumOptions& options = {}) {
  return autocorrelation_spectrum(
      std::span<const double>(trace.data(), static_cast<std::size_t>(trace.size())), taus, options);
}

struct SpectralPeak {
  double frequency = 0.0;  // parabolic refinement, units of frequency_unit
  double power = 0.0;
  std::size_t bin = 0;
};

/// Strongest local maximum at or above min_bin (skips the zero-frequency lobe).
SpectralPeak dominant_peak(const SpectrumReport& report, std::size_t min_bin = 2);

}  // namespace macroreal
