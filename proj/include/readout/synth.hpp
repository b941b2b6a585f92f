#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "readout/cqed.hpp"
#include "readout/rfchain.hpp"

namespace readout::synth {

// Generator settings for a synthetic calibration bundle: one S21 pair, one
// Stark map and one spectrum-analyzer trace per qubit, measured through `chain`.
struct BundleSpec {
    std::string name = "synthetic";
    std::vector<cqed::CavityQubitParams> qubits;
    rfchain::ChainSpec chain;
    std::uint64_t seed = 1;

    double attenuation_db = -110.0;  // generator -> cavity port, signed

    int s21_points = 401;
    double s21_span_linewidths = 20.0;
    double s21_noise = 0.01;  // per quadrature, relative to the off-resonance level

    double stark_below_db = 20.0;  // power axis relative to the <N>=1 generator power
    double stark_above_db = 10.0;
    double stark_step_db = 0.5;
    double stark_noise = 0.02;
    double broadening_hz_per_photon = 20e3;

    double tone_on_chip_dbm = -130.0;
    double tone_offset_hz = 3e6;  // tone placed above the ground-state resonance
    double resolution_bw_hz = 30e3;
    double detuning_hz = 10e6;
    double sa_span_hz = 30e6;
    double sa_averages = 100.0;  // sets the per-bin relative scatter 1/sqrt(averages)

    // Drops every noise source; used for round-trip checks.
    bool zero_noise = false;
};

struct QubitTruth {
    int id = 0;
    double tone_gen_power_dbm = 0.0;
    double p_gen_at_n1_dbm = 0.0;
    rfchain::SystemNoiseResult system;  // chain cascade at the ground-state resonance
};

// Writes <dir>/q<id>/{s21_state0,s21_state1,stark_map,sa_trace}.csv and
// <dir>/manifest.json; `resolved_config` and the seed are embedded in the manifest.
std::vector<QubitTruth> write_bundle(const BundleSpec& spec, const std::filesystem::path& dir,
                                     const nlohmann::json& resolved_config = nlohmann::json::object());

}  // namespace readout::synth
