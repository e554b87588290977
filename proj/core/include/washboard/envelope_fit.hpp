#pragma once

#include <span>

namespace washboard {

/**
 Parameters of offset + A cos(2 pi (t - t_c) / T + phi) exp(-(t - t_c)^2 / 2 w^2).

 For an original-oscillation fit t_c is pinned at 0 (the preparation pulse);
 echo fits let it float.
 */
struct EnvelopeFit {
    double amplitude = 0.0;      ///< A >= 0
    double period_s = 0.0;       ///< T
    double gaussian_rms_s = 0.0; ///< w
    double offset = 0.0;
    double phase = 0.0;          ///< phi in (-pi, pi]
    double center_s = 0.0;       ///< t_c
    double residual_norm = 0.0;  ///< ||model - data||_2
};

struct FitOptions {
    bool fit_center = false;
    double center_guess_s = 0.0;   ///< used when fit_center; 0 means "peak of the running envelope"
    double period_guess_s = 0.0;   ///< 0 means "from the spectrum"
    double fixed_width_s = 0.0;    ///< > 0 pins w instead of fitting it
};

/// Dominant non-DC frequency of a uniformly sampled signal (Hz), refined between DFT bins.
/// Returns 0 for a constant signal; throws NumericalError if no peak clears the noise floor.
double spectral_peak_frequency(std::span<const double> times, std::span<const double> values);

/**
 Least-squares fit of a Gaussian-damped sinusoid.

 Initialisation is deterministic: period from spectral_peak_frequency,
 amplitude and width from a running RMS envelope. A constant trace gives
 amplitude 0. The trace must span at least three periods.
 */
EnvelopeFit fit_envelope(std::span<const double> times, std::span<const double> values, const FitOptions& options = {});

/// Evaluates the fitted model at t.
double evaluate(const EnvelopeFit& fit, double t);

}  // namespace washboard
