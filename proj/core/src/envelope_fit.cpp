#include "washboard/envelope_fit.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/NonLinearOptimization>

#include "washboard/errors.hpp"
#include "washboard/lattice.hpp"

namespace washboard {

namespace {

constexpr double two_pi = 2.0 * constants::pi;

double uniform_step(std::span<const double> times) {
    if (times.size() < 8) throw ValidationError("envelope fit: need at least 8 samples");
    const double dt = times[1] - times[0];
    if (!(dt > 0.0)) throw ValidationError("envelope fit: times must be increasing");
    for (std::size_t i = 1; i < times.size(); ++i) {
        if (std::abs((times[i] - times[i - 1]) - dt) > 1e-6 * dt)
            throw ValidationError("envelope fit: times must be uniformly spaced");
    }
    return dt;
}

double dft_magnitude(std::span<const double> times, std::span<const double> x, double f) {
    std::complex<double> acc{0.0, 0.0};
    for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * std::polar(1.0, -two_pi * f * times[i]);
    return std::abs(acc);
}

std::vector<double> detrended(std::span<const double> values) {
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    std::vector<double> x(values.begin(), values.end());
    for (auto& v : x) v -= mean;
    return x;
}

// RMS of the detrended signal over a sliding window, times sqrt(2) to read as an amplitude.
std::vector<double> running_envelope(const std::vector<double>& x, std::size_t window) {
    window = std::max<std::size_t>(1, std::min(window, x.size()));
    std::vector<double> env(x.size());
    const std::size_t half = window / 2;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const std::size_t lo = i >= half ? i - half : 0;
        const std::size_t hi = std::min(x.size(), lo + window);
        double s = 0.0;
        for (std::size_t j = lo; j < hi; ++j) s += x[j] * x[j];
        env[i] = std::sqrt(2.0 * s / static_cast<double>(hi - lo));
    }
    return env;
}

// Parameter vector: [offset, A, T, phi, (w), (t_c)]; w is absent when pinned, t_c when not fitted.
struct DampedCosine {
    using Scalar = double;
    using InputType = Eigen::VectorXd;
    using ValueType = Eigen::VectorXd;
    using JacobianType = Eigen::MatrixXd;
    enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };

    std::span<const double> t;
    std::span<const double> y;
    bool fit_center = false;
    double fixed_width = 0.0;

    bool fit_width() const { return fixed_width <= 0.0; }
    int inputs() const { return 4 + (fit_width() ? 1 : 0) + (fit_center ? 1 : 0); }
    int values() const { return static_cast<int>(t.size()); }
    int center_index() const { return fit_width() ? 5 : 4; }
    double width(const Eigen::VectorXd& x) const { return fit_width() ? x(4) : fixed_width; }
    double center(const Eigen::VectorXd& x) const { return fit_center ? x(center_index()) : 0.0; }

    int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& f) const {
        const double tc = center(x);
        const double w = width(x);
        for (int i = 0; i < values(); ++i) {
            const double u = t[static_cast<std::size_t>(i)] - tc;
            const double g = std::exp(-u * u / (2.0 * w * w));
            f(i) = x(0) + x(1) * std::cos(two_pi * u / x(2) + x(3)) * g - y[static_cast<std::size_t>(i)];
        }
        return 0;
    }

    int df(const Eigen::VectorXd& x, Eigen::MatrixXd& jac) const {
        const double tc = center(x);
        const double A = x(1), T = x(2), w = width(x);
        for (int i = 0; i < values(); ++i) {
            const double u = t[static_cast<std::size_t>(i)] - tc;
            const double g = std::exp(-u * u / (2.0 * w * w));
            const double th = two_pi * u / T + x(3);
            const double c = std::cos(th), s = std::sin(th);
            jac(i, 0) = 1.0;
            jac(i, 1) = c * g;
            jac(i, 2) = A * g * s * two_pi * u / (T * T);
            jac(i, 3) = -A * g * s;
            if (fit_width()) jac(i, 4) = A * c * g * u * u / (w * w * w);
            if (fit_center) jac(i, center_index()) = A * g * (s * two_pi / T + c * u / (w * w));
        }
        return 0;
    }
};

}  // namespace

double spectral_peak_frequency(std::span<const double> times, std::span<const double> values) {
    if (times.size() != values.size()) throw ValidationError("envelope fit: times and values differ in length");
    const double dt = uniform_step(times);
    const auto x = detrended(values);
    const double energy = std::inner_product(x.begin(), x.end(), x.begin(), 0.0);
    if (energy <= 1e-24 * static_cast<double>(x.size())) return 0.0;

    const std::size_t n = x.size();
    const double df = 1.0 / (static_cast<double>(n) * dt);
    std::vector<double> mag(n / 2 + 1, 0.0);
    std::size_t best = 1;
    for (std::size_t k = 1; k <= n / 2; ++k) {
        mag[k] = dft_magnitude(times, x, static_cast<double>(k) * df);
        if (mag[k] > mag[best]) best = k;
    }
    std::vector<double> sorted(mag.begin() + 1, mag.end());
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<long>(sorted.size() / 2), sorted.end());
    const double floor = sorted[sorted.size() / 2];
    if (!(mag[best] > 4.0 * floor)) throw NumericalError("envelope fit: no spectral peak above the noise floor");

    // dense search between the neighbouring bins
    double f_best = static_cast<double>(best) * df;
    double m_best = mag[best];
    for (int j = -50; j <= 50; ++j) {
        const double f = (static_cast<double>(best) + j / 50.0) * df;
        if (f <= 0.0) continue;
        const double m = dft_magnitude(times, x, f);
        if (m > m_best) {
            m_best = m;
            f_best = f;
        }
    }
    return f_best;
}

EnvelopeFit fit_envelope(std::span<const double> times, std::span<const double> values, const FitOptions& options) {
    if (times.size() != values.size()) throw ValidationError("envelope fit: times and values differ in length");
    const double dt = uniform_step(times);
    const auto x = detrended(values);
    const double mean = values[0] - x[0];

    double freq = options.period_guess_s > 0.0 ? 1.0 / options.period_guess_s : spectral_peak_frequency(times, values);
    if (freq == 0.0) {
        EnvelopeFit flat;
        flat.offset = mean;
        flat.period_s = 0.0;
        flat.gaussian_rms_s = 0.0;
        flat.center_s = options.fit_center ? options.center_guess_s : 0.0;
        return flat;
    }
    const double span = times.back() - times.front();
    if (span * freq < 3.0) throw ValidationError("envelope fit: trace spans fewer than 3 oscillation periods");

    const auto window = static_cast<std::size_t>(std::max(1.0, std::round(1.0 / (freq * dt))));
    const auto env = running_envelope(x, window);
    const auto peak_it = std::max_element(env.begin(), env.end());
    const auto peak_idx = static_cast<std::size_t>(peak_it - env.begin());
    double tc0 = 0.0;
    if (options.fit_center) tc0 = options.center_guess_s != 0.0 ? options.center_guess_s : times[peak_idx];

    // width: first point on either side of tc0 where the envelope drops below e^{-1/2} of its peak
    double w0 = 0.5 * span;
    {
        const double level = *peak_it * std::exp(-0.5);
        for (std::size_t i = peak_idx; i < env.size(); ++i) {
            if (env[i] < level) {
                w0 = std::max(times[i] - (options.fit_center ? tc0 : times.front()), 2.0 * dt);
                break;
            }
        }
    }

    // phase from the DFT at the chosen frequency, referenced to tc0
    std::complex<double> acc{0.0, 0.0};
    for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * std::polar(1.0, -two_pi * freq * (times[i] - tc0));

    DampedCosine functor{times, values, options.fit_center, options.fixed_width_s};
    Eigen::VectorXd p(functor.inputs());
    p(0) = mean;
    p(1) = std::max(*peak_it, 1e-12);
    p(2) = 1.0 / freq;
    p(3) = std::arg(acc);
    if (functor.fit_width()) p(4) = w0;
    if (options.fit_center) p(functor.center_index()) = tc0;

    Eigen::LevenbergMarquardt<DampedCosine> lm(functor);
    lm.parameters.maxfev = 4000;
    lm.parameters.xtol = 1e-12;
    lm.parameters.ftol = 1e-14;
    const auto status = lm.minimize(p);
    if (status == Eigen::LevenbergMarquardtSpace::ImproperInputParameters)
        throw NumericalError("envelope fit: improper input to Levenberg-Marquardt");
    if (!std::isfinite(p.norm())) throw NumericalError("envelope fit: diverged");

    EnvelopeFit fit;
    fit.offset = p(0);
    fit.amplitude = p(1);
    fit.period_s = p(2);
    fit.phase = p(3);
    fit.gaussian_rms_s = std::abs(functor.width(p));
    fit.center_s = functor.center(p);
    if (fit.amplitude < 0.0) {
        fit.amplitude = -fit.amplitude;
        fit.phase += constants::pi;
    }
    fit.phase = std::remainder(fit.phase, two_pi);
    if (fit.phase <= -constants::pi) fit.phase += two_pi;

    Eigen::VectorXd resid(functor.values());
    functor(p, resid);
    fit.residual_norm = resid.norm();
    return fit;
}

double evaluate(const EnvelopeFit& fit, double t) {
    if (fit.period_s == 0.0) return fit.offset;
    const double u = t - fit.center_s;
    return fit.offset + fit.amplitude * std::cos(two_pi * u / fit.period_s + fit.phase) *
                            std::exp(-u * u / (2.0 * fit.gaussian_rms_s * fit.gaussian_rms_s));
}

}  // namespace washboard
