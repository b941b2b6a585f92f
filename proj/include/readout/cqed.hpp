#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace readout::cqed {

struct CavityQubitParams {
    int id = 0;
    double f_res_hz = 0.0;
    double q_c = 0.0;
    double q_int = 0.0;
    double chi_hz = 0.0;  // cavity pull is 2*chi between qubit states
    double f_q_hz = 0.0;
    double qubit_linewidth_hz = 50e3;
    double asymmetry_rad = 0.0;

    double q_total() const;
    // Throws std::invalid_argument on a violated invariant.
    void validate() const;
};

// The eight cavity-qubit pairs of the reference device, with Q_int set to
// 1000 * Q_c (only the lower bound 500 * Q_c is known).
std::vector<CavityQubitParams> reference_device();

// Hanger-geometry transmission. State 1 moves the resonance down by 2*chi.
std::complex<double> s21(const CavityQubitParams& p, double freq_hz, int qubit_state);
std::vector<std::complex<double>> s21_trace(const CavityQubitParams& p,
                                            std::span<const double> freqs_hz, int qubit_state);

enum class PowerModel {
    coupling_limited,  // Q taken equal to Q_c
    exact,             // Q_c / Q^2 prefactor
};

std::string to_string(PowerModel model);
PowerModel power_model_from_string(const std::string& name);

// Drive power at the cavity input port for a mean occupation of `photons`.
double cavity_power(const CavityQubitParams& p, double photons,
                    PowerModel model = PowerModel::coupling_limited);
double photons_from_power(const CavityQubitParams& p, double watts,
                          PowerModel model = PowerModel::coupling_limited);

// Linear ac Stark shift to lower frequency, 2*chi per photon.
double stark_shifted_freq(const CavityQubitParams& p, double photons);

struct StarkMap {
    std::vector<double> readout_powers_dbm;  // at the generator
    std::vector<double> qubit_drive_freqs_hz;
    std::vector<double> response;  // row-major [power][freq]
    CavityQubitParams params;

    double at(std::size_t power_index, std::size_t freq_index) const {
        return response[power_index * qubit_drive_freqs_hz.size() + freq_index];
    }
    std::span<const double> slice(std::size_t power_index) const {
        return {response.data() + power_index * qubit_drive_freqs_hz.size(),
                qubit_drive_freqs_hz.size()};
    }
    void validate() const;
};

struct StarkMapOptions {
    double noise_level = 0.0;
    double broadening_hz_per_photon = 20e3;
    double max_photons = 50.0;  // linear-regime bound
    PowerModel power_model = PowerModel::coupling_limited;
    std::uint64_t seed = 1;
};

// attenuation_db is the signed gain from generator to cavity port
// (P_cav = P_gen + attenuation_db), so a lossy line has a negative value.
// Throws std::domain_error when a slice exceeds the linear-regime photon bound.
StarkMap synth_stark_map(const CavityQubitParams& p, double attenuation_db,
                         std::span<const double> power_axis_dbm, std::span<const double> freq_axis_hz,
                         const StarkMapOptions& options = {});

// Photon number reached at a generator power for a given line attenuation.
double photons_at_generator_power(const CavityQubitParams& p, double attenuation_db,
                                  double p_gen_dbm, PowerModel model = PowerModel::coupling_limited);

// CSV triplets (power_dBm, qubit_freq_Hz, response) with a '#' header block
// carrying the parameters.
void write_stark_map_csv(const StarkMap& map, const std::filesystem::path& path);
StarkMap read_stark_map_csv(const std::filesystem::path& path);

}  // namespace readout::cqed
