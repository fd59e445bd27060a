// Time grids, pulse envelopes, spectral filtering and the
// empty-cavity reflection.
//
// Units: the cavity decay rate sets the scale, so times are in 1/kappa and
// frequencies in kappa. Fourier pair used throughout:
//
//   f(w) = (1/2pi) \int f(t) exp(+i w t) dt,   f(t) = \int f(w) exp(-i w t) dw
//
// With this sign d/dt corresponds to -i w, which makes the cavity response
// -(k/2 + i w)/(k/2 - i w) causal.

#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

namespace cavcat {

using cplx = std::complex<double>;

/// Uniformly spaced samples t_i = t_start + i * spacing, i = 0 .. n-1.
class TimeGrid {
public:
    TimeGrid(double t_start, double t_end, std::size_t n_samples);

    /// Grid on [t_start, t_start + k*spacing] with k = round((t_end - t_start)/spacing).
    static TimeGrid with_spacing(double t_start, double t_end, double spacing);

    double t_start() const noexcept { return t_start_; }
    double t_end() const noexcept { return t_end_; }
    std::size_t size() const noexcept { return n_; }
    double spacing() const noexcept { return (t_end_ - t_start_) / static_cast<double>(n_ - 1); }
    double at(std::size_t i) const noexcept;

    /// Trapezoid weight of sample i.
    double weight(std::size_t i) const noexcept;

    bool operator==(const TimeGrid&) const = default;

private:
    double t_start_;
    double t_end_;
    std::size_t n_;
};

/// Ring-down margin appended after a pulse of duration T.
double default_margin(double duration);

/// Default sample spacing (1/kappa units).
inline constexpr double kDefaultSpacing = 0.05;

/// Grid [0, T + margin] at the given spacing.
TimeGrid pulse_grid(double duration, double spacing = kDefaultSpacing);
TimeGrid pulse_grid(double duration, double spacing, double margin);

/// Complex pulse shape sampled on a TimeGrid.
class ComplexEnvelope {
public:
    ComplexEnvelope(TimeGrid grid, std::vector<cplx> samples);

    static ComplexEnvelope zeros(const TimeGrid& grid);

    const TimeGrid& grid() const noexcept { return grid_; }
    std::span<const cplx> samples() const noexcept { return samples_; }
    std::size_t size() const noexcept { return samples_.size(); }
    const cplx& operator[](std::size_t i) const noexcept { return samples_[i]; }

    /// \int |f|^2 dt by the trapezoidal rule.
    double norm_squared() const;
    ComplexEnvelope scaled(cplx factor) const;
    ComplexEnvelope operator-() const { return scaled(-1.0); }
    double max_abs_difference(const ComplexEnvelope& other) const;

private:
    TimeGrid grid_;
    std::vector<cplx> samples_;
};

/// Continuous-time form of a pulse, evaluated by the integrator between samples.
using PulseShape = std::function<cplx(double)>;

/// f(t) = A exp[-(t - T/2)^2 / (T/5)^2] with A chosen so that the sampled
/// envelope has unit trapezoidal norm on its grid.
struct GaussianPulse {
    double duration;
    double amplitude;

    cplx operator()(double t) const;
    ComplexEnvelope sample(const TimeGrid& grid) const;
};

/// Normalized Gaussian pulse of duration T on `grid`. Rejects grids with fewer
/// than 64 samples across T/5 or that do not cover [0, T].
GaussianPulse make_gaussian(double duration, const TimeGrid& grid);
ComplexEnvelope make_gaussian_pulse(double duration, const TimeGrid& grid);

/// Cubic Lagrange interpolation of an envelope; zero outside the grid.
PulseShape interpolate(const ComplexEnvelope& f);

/// \int f*(t) g(t) dt (trapezoidal). Throws ConfigError on mismatched grids.
cplx inner_product(const ComplexEnvelope& f, const ComplexEnvelope& g);

/// 1 - <f_ref|f>.
cplx mismatch(const ComplexEnvelope& f_ref, const ComplexEnvelope& f);

/// Samples of f(w) on the DFT frequency lattice of a zero-padded copy of the signal.
struct SpectralEnvelope {
    std::vector<double> frequencies;
    std::vector<cplx> samples;
    double t_start = 0.0;
    double spacing = 0.0;

    double frequency_step() const;
    /// \int |f(w)|^2 dw on the lattice, times 2 pi (equals the time-domain norm).
    double norm_squared() const;
};

/// Forward transform. The signal is zero-padded to a power of two of at least
/// `min_length` samples (default: the envelope length).
SpectralEnvelope to_spectrum(const ComplexEnvelope& f, std::size_t min_length = 0);

/// Inverse transform, returning the first grid.size() samples.
ComplexEnvelope from_spectrum(const SpectralEnvelope& spectrum, const TimeGrid& grid);

/// Fraction of spectral power at |w| above one tenth of the Nyquist frequency.
double high_band_power_fraction(const SpectralEnvelope& spectrum);

using FrequencyResponse = std::function<cplx(double)>;

/// Applies a causal linear filter H(w) to a pulse that is zero before the
/// first sample. `response_at_infinity` is the instantaneous part of the
/// filter; the remaining part acts as a trapezoidal convolution. The signal is
/// padded with enough zeros for a ring-down of `ring_down_time`.
ComplexEnvelope apply_causal_filter(const ComplexEnvelope& f, const FrequencyResponse& response,
                                    cplx response_at_infinity, double ring_down_time);

/// -(k/2 + i w)/(k/2 - i w).
cplx empty_cavity_response(double kappa, double omega);

/// Reflected shape f_out^(0) for the atom in the uncoupled level.
ComplexEnvelope empty_cavity_reflect(const ComplexEnvelope& f_in, double kappa);

/// CSV with header "t,re,im", 17 significant digits.
void write_csv(std::ostream& os, const ComplexEnvelope& f);
ComplexEnvelope read_csv(std::istream& is);

} // namespace cavcat
