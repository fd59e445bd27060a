#include "cavcat/pulse.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

#include <unsupported/Eigen/FFT>

#include "cavcat/error.hpp"

namespace cavcat {

namespace {

std::size_t next_power_of_two(std::size_t n) {
    std::size_t m = 1;
    while (m < n) m <<= 1;
    return m;
}

void require_same_grid(const ComplexEnvelope& f, const ComplexEnvelope& g) {
    if (!(f.grid() == g.grid())) throw ConfigError("envelopes are sampled on different time grids");
}

} // namespace

// ---------------------------------------------------------------------------
// TimeGrid

TimeGrid::TimeGrid(double t_start, double t_end, std::size_t n_samples)
    : t_start_(t_start), t_end_(t_end), n_(n_samples) {
    if (n_samples < 2) throw ConfigError("time grid needs at least 2 samples");
    if (!(t_end > t_start) || !std::isfinite(t_start) || !std::isfinite(t_end))
        throw ConfigError("time grid needs t_end > t_start");
}

TimeGrid TimeGrid::with_spacing(double t_start, double t_end, double spacing) {
    if (!(spacing > 0.0)) throw ConfigError("grid spacing must be positive");
    const auto intervals = static_cast<std::size_t>(std::llround((t_end - t_start) / spacing));
    if (intervals < 1) throw ConfigError("grid spacing larger than the grid extent");
    return TimeGrid(t_start, t_start + spacing * static_cast<double>(intervals), intervals + 1);
}

double TimeGrid::at(std::size_t i) const noexcept {
    if (i + 1 == n_) return t_end_;
    return t_start_ + spacing() * static_cast<double>(i);
}

double TimeGrid::weight(std::size_t i) const noexcept {
    return (i == 0 || i + 1 == n_) ? 0.5 * spacing() : spacing();
}

double default_margin(double duration) { return std::max(20.0, 0.1 * duration); }

TimeGrid pulse_grid(double duration, double spacing) {
    return pulse_grid(duration, spacing, default_margin(duration));
}

TimeGrid pulse_grid(double duration, double spacing, double margin) {
    if (!(duration > 0.0)) throw ConfigError("pulse duration must be positive");
    if (margin < 0.0) throw ConfigError("grid margin must be non-negative");
    return TimeGrid::with_spacing(0.0, duration + margin, spacing);
}

// ---------------------------------------------------------------------------
// ComplexEnvelope

ComplexEnvelope::ComplexEnvelope(TimeGrid grid, std::vector<cplx> samples)
    : grid_(grid), samples_(std::move(samples)) {
    if (samples_.size() != grid_.size())
        throw ConfigError("envelope length " + std::to_string(samples_.size()) +
                          " does not match grid size " + std::to_string(grid_.size()));
}

ComplexEnvelope ComplexEnvelope::zeros(const TimeGrid& grid) {
    return ComplexEnvelope(grid, std::vector<cplx>(grid.size(), cplx{}));
}

double ComplexEnvelope::norm_squared() const {
    double s = 0.0;
    for (std::size_t i = 0; i < samples_.size(); ++i) s += grid_.weight(i) * std::norm(samples_[i]);
    return s;
}

ComplexEnvelope ComplexEnvelope::scaled(cplx factor) const {
    std::vector<cplx> out(samples_);
    for (auto& v : out) v *= factor;
    return ComplexEnvelope(grid_, std::move(out));
}

double ComplexEnvelope::max_abs_difference(const ComplexEnvelope& other) const {
    require_same_grid(*this, other);
    double m = 0.0;
    for (std::size_t i = 0; i < samples_.size(); ++i) m = std::max(m, std::abs(samples_[i] - other[i]));
    return m;
}

// ---------------------------------------------------------------------------
// Gaussian pulse

cplx GaussianPulse::operator()(double t) const {
    const double width = duration / 5.0;
    const double x = (t - 0.5 * duration) / width;
    return amplitude * std::exp(-x * x);
}

ComplexEnvelope GaussianPulse::sample(const TimeGrid& grid) const {
    std::vector<cplx> s(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) s[i] = (*this)(grid.at(i));
    return ComplexEnvelope(grid, std::move(s));
}

GaussianPulse make_gaussian(double duration, const TimeGrid& grid) {
    if (!(duration > 0.0)) throw ConfigError("pulse duration must be positive");
    if (grid.t_start() > 0.0 || grid.t_end() < duration)
        throw ConfigError("grid must span at least [0, T]");
    if ((duration / 5.0) / grid.spacing() < 64.0)
        throw ConfigError("grid under-resolves the pulse: fewer than 64 samples across T/5");
    GaussianPulse unit{duration, 1.0};
    const double n2 = unit.sample(grid).norm_squared();
    return GaussianPulse{duration, 1.0 / std::sqrt(n2)};
}

ComplexEnvelope make_gaussian_pulse(double duration, const TimeGrid& grid) {
    return make_gaussian(duration, grid).sample(grid);
}

PulseShape interpolate(const ComplexEnvelope& f) {
    return [f](double t) -> cplx {
        const auto& grid = f.grid();
        const double h = grid.spacing();
        const double x = (t - grid.t_start()) / h;
        const auto n = static_cast<long>(grid.size());
        if (x < 0.0 || x > static_cast<double>(n - 1)) return {};
        long i = static_cast<long>(std::floor(x));
        // stencil i-1 .. i+2, shifted inward at the edges
        long first = std::clamp(i - 1, 0L, std::max(0L, n - 4));
        const long count = std::min(4L, n);
        cplx sum{};
        for (long j = 0; j < count; ++j) {
            double w = 1.0;
            const double xj = static_cast<double>(first + j);
            for (long k = 0; k < count; ++k) {
                if (k == j) continue;
                const double xk = static_cast<double>(first + k);
                w *= (x - xk) / (xj - xk);
            }
            sum += w * f[static_cast<std::size_t>(first + j)];
        }
        return sum;
    };
}

cplx inner_product(const ComplexEnvelope& f, const ComplexEnvelope& g) {
    require_same_grid(f, g);
    const auto& grid = f.grid();
    cplx s{};
    for (std::size_t i = 0; i < f.size(); ++i) s += grid.weight(i) * std::conj(f[i]) * g[i];
    return s;
}

cplx mismatch(const ComplexEnvelope& f_ref, const ComplexEnvelope& f) { return 1.0 - inner_product(f_ref, f); }

// ---------------------------------------------------------------------------
// Spectral transforms

double SpectralEnvelope::frequency_step() const {
    return 2.0 * std::numbers::pi / (static_cast<double>(samples.size()) * spacing);
}

double SpectralEnvelope::norm_squared() const {
    double s = 0.0;
    for (const auto& v : samples) s += std::norm(v);
    return 2.0 * std::numbers::pi * s * frequency_step();
}

SpectralEnvelope to_spectrum(const ComplexEnvelope& f, std::size_t min_length) {
    const std::size_t m = next_power_of_two(std::max(min_length, f.size()));
    const double dt = f.grid().spacing();
    const double t0 = f.grid().t_start();

    std::vector<cplx> padded(m, cplx{});
    std::copy(f.samples().begin(), f.samples().end(), padded.begin());

    // inv() computes (1/m) sum_n x_n exp(+2 pi i k n / m)
    Eigen::FFT<double> fft;
    std::vector<cplx> summed;
    fft.inv(summed, padded);

    SpectralEnvelope out;
    out.t_start = t0;
    out.spacing = dt;
    out.frequencies.resize(m);
    out.samples.resize(m);
    const double dw = 2.0 * std::numbers::pi / (static_cast<double>(m) * dt);
    const double scale = dt * static_cast<double>(m) / (2.0 * std::numbers::pi);
    for (std::size_t k = 0; k < m; ++k) {
        const double kk = k < m / 2 ? static_cast<double>(k) : static_cast<double>(k) - static_cast<double>(m);
        const double w = kk * dw;
        out.frequencies[k] = w;
        out.samples[k] = scale * std::polar(1.0, w * t0) * summed[k];
    }
    return out;
}

ComplexEnvelope from_spectrum(const SpectralEnvelope& spectrum, const TimeGrid& grid) {
    const std::size_t m = spectrum.samples.size();
    if (m < grid.size()) throw ConfigError("spectrum shorter than the requested time grid");
    if (std::abs(grid.spacing() - spectrum.spacing) > 1e-12 * spectrum.spacing ||
        std::abs(grid.t_start() - spectrum.t_start) > 1e-12 * std::max(1.0, std::abs(spectrum.t_start)))
        throw ConfigError("time grid incompatible with the spectrum lattice");

    std::vector<cplx> shifted(m);
    for (std::size_t k = 0; k < m; ++k)
        shifted[k] = spectrum.samples[k] * std::polar(1.0, -spectrum.frequencies[k] * spectrum.t_start);

    // fwd() computes sum_k X_k exp(-2 pi i k n / m)
    Eigen::FFT<double> fft;
    std::vector<cplx> summed;
    fft.fwd(summed, shifted);

    const double dw = spectrum.frequency_step();
    std::vector<cplx> out(grid.size());
    for (std::size_t n = 0; n < grid.size(); ++n) out[n] = dw * summed[n];
    return ComplexEnvelope(grid, std::move(out));
}

double high_band_power_fraction(const SpectralEnvelope& spectrum) {
    const double nyquist = std::numbers::pi / spectrum.spacing;
    double total = 0.0;
    double high = 0.0;
    for (std::size_t k = 0; k < spectrum.samples.size(); ++k) {
        const double p = std::norm(spectrum.samples[k]);
        total += p;
        if (std::abs(spectrum.frequencies[k]) >= 0.1 * nyquist) high += p;
    }
    return total > 0.0 ? high / total : 0.0;
}

ComplexEnvelope apply_causal_filter(const ComplexEnvelope& f, const FrequencyResponse& response,
                                    cplx response_at_infinity, double ring_down_time) {
    const auto& grid = f.grid();
    const std::size_t n = f.size();
    const double dt = grid.spacing();

    // The pulse switches on at the first sample and the padding switches it off
    // after the last; halving the edge samples places the Fourier interpolant at
    // the midpoint of each jump, so the smooth part of the filter acts as a
    // trapezoidal convolution.
    std::vector<cplx> g(f.samples().begin(), f.samples().end());
    g.front() *= 0.5;
    g.back() *= 0.5;
    const auto guard = static_cast<std::size_t>(std::ceil(std::max(ring_down_time, 0.0) / dt));
    auto spectrum = to_spectrum(ComplexEnvelope(grid, std::move(g)), n + guard);
    for (std::size_t k = 0; k < spectrum.samples.size(); ++k) spectrum.samples[k] *= response(spectrum.frequencies[k]);
    auto out = from_spectrum(spectrum, grid);

    std::vector<cplx> s(out.samples().begin(), out.samples().end());
    // nothing has entered the cavity yet at the first sample
    s.front() = response_at_infinity * f[0];
    s.back() += 0.5 * response_at_infinity * f[n - 1];
    return ComplexEnvelope(grid, std::move(s));
}

cplx empty_cavity_response(double kappa, double omega) {
    const cplx i{0.0, 1.0};
    return -(0.5 * kappa + i * omega) / (0.5 * kappa - i * omega);
}

ComplexEnvelope empty_cavity_reflect(const ComplexEnvelope& f_in, double kappa) {
    if (!(kappa > 0.0)) throw ConfigError("kappa must be positive");
    const double dt = f_in.grid().spacing();
    if (dt > 0.1 / kappa)
        throw ConfigError("grid spacing " + std::to_string(dt) + " exceeds 0.1/kappa; cavity bandwidth unresolved");
    const double n2 = f_in.norm_squared();
    if (std::abs(n2 - 1.0) > 1e-8) throw ConfigError("input envelope is not normalized");

    const double leakage = high_band_power_fraction(to_spectrum(f_in));
    if (leakage > 1e-6)
        throw NumericalError("input pulse under-resolved: spectral power fraction " + std::to_string(leakage) +
                             " in the top frequency decade");

    // amplitude ring-down of the cavity is exp(-kappa t / 2); 40/kappa is 20 e-folds
    return apply_causal_filter(
        f_in, [kappa](double w) { return empty_cavity_response(kappa, w); }, cplx{1.0, 0.0}, 40.0 / kappa);
}

// ---------------------------------------------------------------------------
// CSV

void write_csv(std::ostream& os, const ComplexEnvelope& f) {
    os << "t,re,im\n" << std::setprecision(17);
    for (std::size_t i = 0; i < f.size(); ++i)
        os << f.grid().at(i) << ',' << f[i].real() << ',' << f[i].imag() << '\n';
}

ComplexEnvelope read_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != "t,re,im") throw ConfigError("envelope CSV must start with 't,re,im'");
    std::vector<double> ts;
    std::vector<cplx> vals;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string a, b, c;
        if (!std::getline(row, a, ',') || !std::getline(row, b, ',') || !std::getline(row, c))
            throw ConfigError("malformed envelope CSV row: " + line);
        try {
            ts.push_back(std::stod(a));
            vals.emplace_back(std::stod(b), std::stod(c));
        } catch (const std::exception&) {
            throw ConfigError("non-numeric envelope CSV row: " + line);
        }
    }
    if (ts.size() < 2) throw ConfigError("envelope CSV needs at least 2 rows");
    TimeGrid grid(ts.front(), ts.back(), ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i)
        if (std::abs(ts[i] - grid.at(i)) > 1e-9 * std::max(1.0, std::abs(ts[i])))
            throw ConfigError("envelope CSV times are not uniformly spaced");
    return ComplexEnvelope(grid, std::move(vals));
}

} // namespace cavcat
