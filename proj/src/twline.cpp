#include "readout/twline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "readout/common.hpp"

namespace readout::twline {

namespace {

// Lossless reciprocal two-port [[a, i*b], [i*c, d]] with real a, b, c, d.
struct Abcd {
    double a = 1.0;
    double b = 0.0;
    double c = 0.0;
    double d = 1.0;

    Abcd operator*(const Abcd& o) const {
        return {a * o.a - b * o.c, a * o.b + b * o.d, c * o.a + d * o.c, d * o.d - c * o.b};
    }
};

Abcd line_section(const CellSpec& cell, double length_m, double omega) {
    const double theta = omega * length_m * std::sqrt(cell.inductance_per_m * cell.capacitance_per_m);
    const double z = cell_impedance(cell);
    const double s = std::sin(theta);
    const double co = std::cos(theta);
    return {co, z * s, s / z, co};
}

constexpr double stopband_tolerance = 1e-12;

// sinh(sqrt(z2))/sqrt(z2), continued to sin(sqrt(-z2))/sqrt(-z2) for z2 < 0.
double sinhc_sq_arg(double z2) {
    if (std::abs(z2) < 1e-8) {
        return 1.0 + z2 / 6.0 + z2 * z2 / 120.0;
    }
    if (z2 > 0.0) {
        const double z = std::sqrt(z2);
        return std::sinh(z) / z;
    }
    const double z = std::sqrt(-z2);
    return std::sin(z) / z;
}

}  // namespace

void CellSpec::validate() const {
    if (!(length_m > 0.0) || !(inductance_per_m > 0.0) || !(capacitance_per_m > 0.0) ||
        !std::isfinite(length_m) || !std::isfinite(inductance_per_m) ||
        !std::isfinite(capacitance_per_m)) {
        throw std::invalid_argument("CellSpec: length, inductance and capacitance must be positive");
    }
}

double cell_impedance(const CellSpec& cell) {
    if (!(cell.inductance_per_m > 0.0) || !(cell.capacitance_per_m > 0.0)) {
        throw std::invalid_argument("cell_impedance: inductance and capacitance must be positive");
    }
    return std::sqrt(cell.inductance_per_m / cell.capacitance_per_m);
}

double cell_phase_velocity(const CellSpec& cell) {
    cell_impedance(cell);
    return 1.0 / std::sqrt(cell.inductance_per_m * cell.capacitance_per_m);
}

void StubGeometry::validate() const {
    if (stub_length_m < 0.0 || !(stub_width_m > 0.0) || !(line_width_m > 0.0) ||
        !(sheet_inductance_h >= 0.0)) {
        throw std::invalid_argument("StubGeometry: dimensions must be positive");
    }
    if (!(dielectric_thickness_m > 0.0)) {
        throw std::invalid_argument("StubGeometry: dielectric thickness must be positive");
    }
    if (!(rel_permittivity >= 1.0)) {
        throw std::invalid_argument("StubGeometry: relative permittivity must be >= 1");
    }
}

double stub_capacitance(const StubGeometry& g) {
    g.validate();
    return PhysicalConstants::eps0 * g.rel_permittivity * g.stub_length_m * g.stub_width_m /
           g.dielectric_thickness_m;
}

CellSpec cell_from_geometry(const StubGeometry& g, double cell_length_m, int stubs_per_cell,
                            CellLabel label) {
    g.validate();
    if (!(cell_length_m > 0.0) || stubs_per_cell < 0) {
        throw std::invalid_argument("cell_from_geometry: invalid cell length or stub count");
    }
    if (!(g.sheet_inductance_h > 0.0)) {
        throw std::invalid_argument("cell_from_geometry: sheet inductance must be positive");
    }
    const double strip_c = PhysicalConstants::eps0 * g.rel_permittivity * g.line_width_m *
                           cell_length_m / g.dielectric_thickness_m;
    CellSpec cell;
    cell.length_m = cell_length_m;
    cell.inductance_per_m = g.sheet_inductance_h / g.line_width_m;
    cell.capacitance_per_m = (strip_c + stubs_per_cell * stub_capacitance(g)) / cell_length_m;
    cell.label = label;
    return cell;
}

void SupercellSpec::validate() const {
    if (n_unloaded < 0 || n_loaded < 0 || n_unloaded + n_loaded == 0) {
        throw std::invalid_argument("SupercellSpec: need at least one cell per period");
    }
    if (n_supercells < 1) {
        throw std::invalid_argument("SupercellSpec: need at least one period");
    }
    if (n_unloaded > 0) unloaded.validate();
    if (n_loaded > 0) loaded.validate();
}

double SupercellSpec::period_m() const {
    return n_unloaded * unloaded.length_m + n_loaded * loaded.length_m;
}

long long SupercellSpec::total_cells() const {
    return static_cast<long long>(n_supercells) * (n_unloaded + n_loaded);
}

double SupercellSpec::total_length_m() const { return n_supercells * period_m(); }

double SupercellSpec::delay_per_period_s() const {
    // Long-wavelength limit of the periodic line: sqrt(<L><C>) per unit length.
    const double lu = n_unloaded > 0 ? n_unloaded * unloaded.length_m : 0.0;
    const double ll = n_loaded > 0 ? n_loaded * loaded.length_m : 0.0;
    double l_sum = 0.0, c_sum = 0.0;
    if (lu > 0.0) {
        l_sum += lu * unloaded.inductance_per_m;
        c_sum += lu * unloaded.capacitance_per_m;
    }
    if (ll > 0.0) {
        l_sum += ll * loaded.inductance_per_m;
        c_sum += ll * loaded.capacitance_per_m;
    }
    return std::sqrt(l_sum * c_sum);
}

SupercellSpec uniform_supercell(const CellSpec& cell, int cells_per_period, int n_supercells) {
    SupercellSpec sc;
    sc.n_unloaded = cells_per_period;
    sc.n_loaded = 0;
    sc.unloaded = cell;
    sc.unloaded.label = CellLabel::unloaded;
    sc.loaded = cell;
    sc.loaded.label = CellLabel::loaded;
    sc.n_supercells = n_supercells;
    sc.validate();
    return sc;
}

SupercellSpec contrast_supercell(double inductance_per_m, double mean_capacitance_per_m,
                                 double impedance_ratio, double cell_length_m, int n_unloaded,
                                 int n_loaded, int n_supercells) {
    if (!(impedance_ratio > 0.0)) {
        throw std::invalid_argument("contrast_supercell: impedance ratio must be positive");
    }
    const double r2 = impedance_ratio * impedance_ratio;
    const double c_unloaded = mean_capacitance_per_m * (n_unloaded + n_loaded) /
                              (n_unloaded + n_loaded / r2);
    SupercellSpec sc;
    sc.n_unloaded = n_unloaded;
    sc.n_loaded = n_loaded;
    sc.unloaded = {cell_length_m, inductance_per_m, c_unloaded, CellLabel::unloaded};
    sc.loaded = {cell_length_m, inductance_per_m, c_unloaded / r2, CellLabel::loaded};
    sc.n_supercells = n_supercells;
    sc.validate();
    return sc;
}

SupercellSpec reference_supercell() {
    return contrast_supercell(35e-12 / 1e-6, 9.3e-15 / 1e-6, 80.0 / 50.0, 2e-6, 30, 4, 1200);
}

BlochPoint bloch_dispersion(const SupercellSpec& sc, double freq_hz) {
    sc.validate();
    if (!(freq_hz > 0.0) || !std::isfinite(freq_hz)) {
        throw std::invalid_argument("bloch_dispersion: frequency must be positive");
    }
    const double omega = two_pi * freq_hz;
    Abcd m;
    if (sc.n_unloaded > 0) m = m * line_section(sc.unloaded, sc.n_unloaded * sc.unloaded.length_m, omega);
    if (sc.n_loaded > 0) m = m * line_section(sc.loaded, sc.n_loaded * sc.loaded.length_m, omega);

    const double period = sc.period_m();
    const double x = 0.5 * (m.a + m.d);
    const double reference_phase = omega * sc.delay_per_period_s();

    BlochPoint p;
    p.half_trace = x;
    p.in_stopband = std::abs(x) > 1.0 + stopband_tolerance;

    double phase = 0.0;
    if (p.in_stopband) {
        // Band edge: k*period pinned at a multiple of pi with the parity of x.
        const double offset = x > 0.0 ? 0.0 : std::numbers::pi;
        const double m_index = std::round((reference_phase - offset) / two_pi);
        phase = offset + two_pi * m_index;
        p.attenuation_np_per_m = std::acosh(std::abs(x)) / period;
    } else {
        const double base = std::acos(std::clamp(x, -1.0, 1.0));
        const double m_index = std::round(reference_phase / two_pi);
        double best = 0.0;
        double best_dist = std::numeric_limits<double>::infinity();
        for (double mi = m_index - 1.0; mi <= m_index + 1.0; mi += 1.0) {
            for (double sign : {-1.0, 1.0}) {
                const double cand = two_pi * mi + sign * base;
                const double dist = std::abs(cand - reference_phase);
                if (dist < best_dist) {
                    best_dist = dist;
                    best = cand;
                }
            }
        }
        phase = best;
    }
    p.k_rad_per_m = phase / period;
    return p;
}

std::vector<Stopband> find_stopbands(const SupercellSpec& sc, double f_lo, double f_hi,
                                     int samples) {
    if (!(f_lo > 0.0) || !(f_hi > f_lo) || samples < 2) {
        throw std::invalid_argument("find_stopbands: invalid sweep");
    }
    auto inside = [&](double f) { return bloch_dispersion(sc, f).in_stopband; };
    auto refine = [&](double a, double b) {
        // a and b straddle an edge; returns the edge frequency.
        const bool state_a = inside(a);
        for (int i = 0; i < 80; ++i) {
            const double mid = 0.5 * (a + b);
            if (inside(mid) == state_a) {
                a = mid;
            } else {
                b = mid;
            }
        }
        return 0.5 * (a + b);
    };

    std::vector<Stopband> bands;
    const double step = (f_hi - f_lo) / (samples - 1);
    double prev_f = f_lo;
    bool prev_in = inside(f_lo);
    double open_lower = prev_in ? f_lo : 0.0;
    for (int i = 1; i < samples; ++i) {
        const double f = f_lo + i * step;
        const bool now_in = inside(f);
        if (now_in != prev_in) {
            const double edge = refine(prev_f, f);
            if (now_in) {
                open_lower = edge;
            } else {
                bands.push_back({open_lower, edge});
            }
        }
        prev_in = now_in;
        prev_f = f;
    }
    if (prev_in) {
        bands.push_back({open_lower, f_hi});
    }
    return bands;
}

double bragg_frequency(const SupercellSpec& sc) {
    sc.validate();
    return 1.0 / (2.0 * sc.delay_per_period_s());
}

std::string to_string(MixingMode mode) {
    return mode == MixingMode::three_wave ? "three_wave" : "four_wave";
}

MixingMode mixing_mode_from_string(const std::string& name) {
    if (name == "three_wave") return MixingMode::three_wave;
    if (name == "four_wave") return MixingMode::four_wave;
    throw std::invalid_argument("unknown mixing mode '" + name + "'");
}

double idler_frequency(double f_pump, double f_signal, MixingMode mode) {
    return mode == MixingMode::three_wave ? f_pump - f_signal : 2.0 * f_pump - f_signal;
}

double phase_mismatch(const SupercellSpec& sc, double f_pump, double f_signal, MixingMode mode) {
    const double f_idler = idler_frequency(f_pump, f_signal, mode);
    if (!(f_signal > 0.0) || !(f_idler > 0.0)) {
        throw std::domain_error("phase_mismatch: signal and idler frequencies must be positive");
    }
    const auto p = bloch_dispersion(sc, f_pump);
    const auto s = bloch_dispersion(sc, f_signal);
    const auto i = bloch_dispersion(sc, f_idler);
    if (p.in_stopband) throw std::domain_error("phase_mismatch: pump inside a stopband");
    if (s.in_stopband) throw std::domain_error("phase_mismatch: signal inside a stopband");
    if (i.in_stopband) throw std::domain_error("phase_mismatch: idler inside a stopband");
    const double pump_terms = mode == MixingMode::three_wave ? p.k_rad_per_m : 2.0 * p.k_rad_per_m;
    return pump_terms - s.k_rad_per_m - i.k_rad_per_m;
}

double coupled_mode_gain(double coupling_per_m, double mismatch_per_m, double length_m) {
    const double half = 0.5 * mismatch_per_m;
    const double z2 = (coupling_per_m * coupling_per_m - half * half) * length_m * length_m;
    const double amp = coupling_per_m * length_m * sinhc_sq_arg(z2);
    return 1.0 + amp * amp;
}

GainProfile gain_profile(const SupercellSpec& sc, const PumpSpec& pump,
                         std::span<const double> freqs_hz, const GainOptions& options) {
    sc.validate();
    if (!(pump.coupling_per_m >= 0.0)) {
        throw std::invalid_argument("gain_profile: pump strength must be non-negative");
    }
    if (!(options.ripple_period_hz > 0.0)) {
        throw std::invalid_argument("gain_profile: ripple period must be positive");
    }
    if (options.loss_slope_db_per_ghz < 0.0) {
        throw std::invalid_argument("gain_profile: loss slope must be non-negative");
    }
    if (bloch_dispersion(sc, pump.freq_hz).in_stopband) {
        throw std::domain_error("gain_profile: pump inside a stopband");
    }
    const double length = sc.total_length_m();
    const bool pumped = pump.coupling_per_m > 0.0;

    GainProfile g;
    g.ripple_period_hz = options.ripple_period_hz;
    g.ripple_amplitude_db = options.ripple_amplitude_db;
    g.freqs_hz.assign(freqs_hz.begin(), freqs_hz.end());
    for (double f : freqs_hz) {
        if (!(f > 0.0)) {
            throw std::invalid_argument("gain_profile: frequencies must be positive");
        }
        double on_off = 0.0;
        if (pumped) {
            double gain = 1.0;
            try {
                const double dk = phase_mismatch(sc, pump.freq_hz, f, pump.mode);
                gain = coupled_mode_gain(pump.coupling_per_m, dk, length);
            } catch (const std::domain_error&) {
                gain = 1.0;  // no phase-matched idler
            }
            on_off = 10.0 * std::log10(gain) +
                     options.ripple_amplitude_db *
                         std::sin(two_pi * f / options.ripple_period_hz + options.ripple_phase_rad);
        }
        const double loss = options.loss_slope_db_per_ghz * f / 1e9;
        g.on_off_db.push_back(on_off);
        g.insertion_loss_db.push_back(loss);
        g.net_db.push_back(on_off - loss);
    }
    return g;
}

}  // namespace readout::twline
