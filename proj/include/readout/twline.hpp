#pragma once

#include <span>
#include <string>
#include <vector>

namespace readout::twline {

enum class CellLabel { unloaded, loaded };

struct CellSpec {
    double length_m = 0.0;
    double inductance_per_m = 0.0;   // H/m
    double capacitance_per_m = 0.0;  // F/m
    CellLabel label = CellLabel::unloaded;

    void validate() const;
};

double cell_impedance(const CellSpec& cell);
double cell_phase_velocity(const CellSpec& cell);

// Inverted microstrip with rectangular stubs over a thin dielectric.
struct StubGeometry {
    double stub_length_m = 0.0;
    double stub_width_m = 0.0;
    double dielectric_thickness_m = 0.0;
    double rel_permittivity = 1.0;
    double line_width_m = 0.0;
    double sheet_inductance_h = 0.0;  // H per square

    void validate() const;
};

// Parallel-plate capacitance of one stub.
double stub_capacitance(const StubGeometry& g);

// Cell whose inductance is the kinetic inductance of the center strip and
// whose capacitance is the strip plus `stubs_per_cell` stubs, all parallel plate.
CellSpec cell_from_geometry(const StubGeometry& g, double cell_length_m, int stubs_per_cell,
                            CellLabel label);

struct SupercellSpec {
    int n_unloaded = 0;
    int n_loaded = 0;
    CellSpec unloaded;
    CellSpec loaded;
    int n_supercells = 1;

    void validate() const;
    double period_m() const;
    long long total_cells() const;
    double total_length_m() const;
    // Group delay per period in the quasi-static limit, sum of l*sqrt(LC).
    double delay_per_period_s() const;
};

// A supercell made only of copies of one cell.
SupercellSpec uniform_supercell(const CellSpec& cell, int cells_per_period, int n_supercells);

// Two impedance levels at a common inductance per length, with the capacitances
// chosen so that the length-averaged capacitance equals `mean_capacitance_per_m`.
SupercellSpec contrast_supercell(double inductance_per_m, double mean_capacitance_per_m,
                                 double impedance_ratio, double cell_length_m, int n_unloaded,
                                 int n_loaded, int n_supercells);

// 1200 periods of 30 unloaded + 4 loaded 2 um cells, 35 pH/um, 9.3 fF/um on
// average, loaded/unloaded impedance ratio 80/50.
SupercellSpec reference_supercell();

struct BlochPoint {
    double k_rad_per_m = 0.0;          // unwrapped Bloch wavenumber
    double attenuation_np_per_m = 0.0; // nonzero only inside a stopband
    double half_trace = 0.0;           // cos(k*period) = (A + D) / 2
    bool in_stopband = false;
};

BlochPoint bloch_dispersion(const SupercellSpec& sc, double freq_hz);

struct Stopband {
    double lower_hz = 0.0;
    double upper_hz = 0.0;
    double center_hz() const { return 0.5 * (lower_hz + upper_hz); }
};

// Stopbands in [f_lo, f_hi] located on an `samples`-point grid and refined by bisection.
std::vector<Stopband> find_stopbands(const SupercellSpec& sc, double f_lo, double f_hi,
                                     int samples = 4000);

// First-order Bragg estimate v/(2*period) from the quasi-static delay.
double bragg_frequency(const SupercellSpec& sc);

enum class MixingMode { three_wave, four_wave };

std::string to_string(MixingMode mode);
MixingMode mixing_mode_from_string(const std::string& name);

double idler_frequency(double f_pump, double f_signal, MixingMode mode);

// Throws std::domain_error when the idler is non-positive or any of the three
// waves lies inside a stopband.
double phase_mismatch(const SupercellSpec& sc, double f_pump, double f_signal, MixingMode mode);

struct PumpSpec {
    double freq_hz = 0.0;
    double coupling_per_m = 0.0;  // parametric coupling g
    MixingMode mode = MixingMode::three_wave;
};

struct GainOptions {
    double loss_slope_db_per_ghz = 0.75;
    double ripple_period_hz = 25e6;
    double ripple_amplitude_db = 0.0;
    double ripple_phase_rad = 0.0;
};

struct GainProfile {
    std::vector<double> freqs_hz;
    std::vector<double> on_off_db;
    std::vector<double> insertion_loss_db;
    std::vector<double> net_db;
    double ripple_period_hz = 0.0;
    double ripple_amplitude_db = 0.0;
};

// Small-signal coupled-mode power gain 1 + [(g/kappa) sinh(kappa*x)]^2 with
// kappa^2 = g^2 - (mismatch/2)^2, continued analytically through kappa = 0.
double coupled_mode_gain(double coupling_per_m, double mismatch_per_m, double length_m);

GainProfile gain_profile(const SupercellSpec& sc, const PumpSpec& pump,
                         std::span<const double> freqs_hz, const GainOptions& options = {});

}  // namespace readout::twline
