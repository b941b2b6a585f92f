#pragma once

#include <cmath>
#include <complex>
#include <filesystem>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "readout/cqed.hpp"

namespace readout::calfit {

struct ComplexTrace {
    std::vector<double> freqs_hz;
    std::vector<std::complex<double>> s21;
};

ComplexTrace read_s21_csv(const std::filesystem::path& path);
void write_s21_csv(const ComplexTrace& trace, const std::filesystem::path& path);

// Fitted hanger resonance S21 = A (1 - (Q/Q_c) e^{i phi} / (1 + 2iQ(f - f0)/f0)).
struct ResonatorFit {
    double f_res_hz = 0.0;
    double q_c = 0.0;
    double q_int = 0.0;  // +inf when 1/Q - cos(phi)/Q_c is not resolved above zero
    double q = 0.0;
    double phi_rad = 0.0;
    std::complex<double> amplitude{1.0, 0.0};
    // Parameter order: f_res, Q, Q_c, phi, Re A, Im A.
    Eigen::Matrix<double, 6, 6> covariance = Eigen::Matrix<double, 6, 6>::Zero();
    double residual_rms = 0.0;
    int n_points = 0;

    double sigma_f_res() const { return std::sqrt(covariance(0, 0)); }
    double sigma_q() const { return std::sqrt(covariance(1, 1)); }
    double sigma_q_c() const { return std::sqrt(covariance(2, 2)); }
    bool q_int_resolved() const { return std::isfinite(q_int); }
    std::complex<double> model(double freq_hz) const;
};

// Circle-fit initialization followed by nonlinear least squares.
// Throws FitError("no dip found") or FitError on non-convergence;
// std::invalid_argument when the trace is too short.
ResonatorFit fit_resonator(const ComplexTrace& trace);

struct ChiEstimate {
    double chi_hz = 0.0;
    double sigma_hz = 0.0;
    ResonatorFit state0;
    ResonatorFit state1;
};

// chi = (f_res,0 - f_res,1) / 2.
ChiEstimate extract_chi(const ComplexTrace& trace0, const ComplexTrace& trace1);

struct LorentzianFit {
    double center_hz = 0.0;
    double fwhm_hz = 0.0;
    double amplitude = 0.0;
    double offset = 0.0;
    double sigma_center_hz = 0.0;
    bool ok = false;
};

// Single Lorentzian peak a / (1 + (2(f - c)/w)^2) + b.
LorentzianFit fit_lorentzian(std::span<const double> freqs_hz, std::span<const double> response);

struct StarkOptions {
    cqed::PowerModel power_model = cqed::PowerModel::coupling_limited;
    int resamples = 1000;
    std::uint64_t seed = 1;
    double chi_sigma_hz = 0.0;
};

struct StarkCalibration {
    double attenuation_db = 0.0;  // signed: P_cav = P_gen + attenuation_db
    double p_gen_at_n1_dbm = 0.0;
    double p_cav_at_n1_dbm = 0.0;
    double uncertainty_db = 0.0;
    std::vector<double> slice_powers_dbm;
    std::vector<double> slice_shift_hz;
    std::vector<double> slice_shift_sigma_hz;
};

// Cavity parameters as used by the power conversion, from a resonator fit.
cqed::CavityQubitParams params_from_fit(const ResonatorFit& fit, double chi_hz, double f_q_hz);

// Finds the generator power at which the qubit has moved by 2*chi from the
// map's intrinsic frequency and converts it to an attenuation. Throws
// FitError("crossing not found") or FitError("non-monotone shift curve").
StarkCalibration calibrate_stark(const cqed::StarkMap& map, const ResonatorFit& fit, double chi_hz,
                                 const StarkOptions& options = {});

struct SpectrumTrace {
    std::vector<double> freqs_hz;
    std::vector<double> power_dbm;
};

SpectrumTrace read_spectrum_csv(const std::filesystem::path& path);
void write_spectrum_csv(const SpectrumTrace& trace, const std::filesystem::path& path);

struct SystemGainEstimate {
    double gain_db = 0.0;
    double tone_peak_dbm = 0.0;
    double tone_freq_hz = 0.0;
    double on_chip_tone_dbm = 0.0;
    double floor_dbm = 0.0;  // median bin power
};

// G_sys = SA tone power - on-chip tone power, where the on-chip power is the
// generator power plus the calibrated attenuation and, when a resonator fit is
// given, the hanger transmission |S21|^2 at the tone frequency.
SystemGainEstimate extract_system_gain(const SpectrumTrace& sa, const StarkCalibration& cal,
                                       double tone_gen_power_dbm,
                                       const ResonatorFit* resonator = nullptr);

struct NoiseFloor {
    double power_dbm = 0.0;  // mean power per resolution bandwidth
    double sigma_db = 0.0;   // standard error of the mean, in dB
    int bins = 0;
};

// Averages the bins within +-window of tone_freq +- detuning.
NoiseFloor measure_noise_floor(const SpectrumTrace& sa, double tone_freq_hz, double detuning_hz,
                               double window_hz = 1e6);

struct NoiseMeasurement {
    double tone_freq_hz = 0.0;
    double sa_tone_power_dbm = 0.0;
    double sa_noise_floor_dbm = 0.0;
    double resolution_bw_hz = 30e3;
    double detuning_hz = 10e6;
    double system_gain_db = 0.0;
    // One-sigma inputs to the resampling.
    double attenuation_sigma_db = 0.0;
    double gain_sigma_db = 0.0;
    double floor_sigma_db = 0.0;
};

struct AddedNoiseOptions {
    int resamples = 1000;
    std::uint64_t seed = 1;
};

struct AddedNoiseResult {
    double added_quanta = 0.0;
    double sigma = 0.0;
    double excess_over_ql = 0.0;  // added_quanta - 1/2
    double noise_temp_k = 0.0;
    bool under_vacuum = false;    // more than 3 sigma below zero: calibration inconsistency
};

// Input-referred noise temperature P_SA / (G_sys k_B BW) and the added quanta
// derived from it.
double system_noise_temperature(const NoiseMeasurement& m);
AddedNoiseResult extract_added_noise(const NoiseMeasurement& m, const AddedNoiseOptions& options = {});

}  // namespace readout::calfit
