#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "readout/calfit.hpp"
#include "readout/cqed.hpp"
#include "readout/rfchain.hpp"

namespace readout::calfit {

// One qubit's files and measurement settings, as listed in a bundle manifest.
struct QubitInputs {
    int id = 0;
    std::filesystem::path s21_state0;
    std::filesystem::path s21_state1;
    std::filesystem::path stark_map;
    std::filesystem::path sa_trace;
    double tone_gen_power_dbm = 0.0;
    double resolution_bw_hz = 30e3;
    double detuning_hz = 10e6;
    double chi_prior_sigma_hz = 0.0;
};

struct Bundle {
    std::string name;
    std::filesystem::path root;
    std::vector<QubitInputs> qubits;
};

inline constexpr const char* manifest_file = "manifest.json";

// Reads <dir>/manifest.json. Throws ConfigError on schema violations. Missing
// CSV files are not checked here; they surface as per-qubit data errors.
Bundle load_bundle(const std::filesystem::path& dir);

struct PipelineOptions {
    cqed::PowerModel power_model = cqed::PowerModel::coupling_limited;
    int resamples = 1000;
    std::uint64_t seed = 1;
    double noise_window_hz = 1e6;
};

enum class FailureKind { none, data, fit };

struct QubitReport {
    int id = 0;
    FailureKind failure = FailureKind::none;
    std::string failed_stage;
    std::string error;

    std::optional<ChiEstimate> chi;
    std::optional<double> f_q_hz;
    std::optional<StarkCalibration> stark;
    std::optional<SystemGainEstimate> gain;
    std::optional<NoiseMeasurement> measurement;
    std::optional<AddedNoiseResult> noise;
    std::optional<rfchain::SystemNoiseResult> system;

    bool ok() const { return failure == FailureKind::none; }
};

struct PipelineReport {
    std::string bundle_name;
    std::vector<QubitReport> qubits;

    bool all_ok() const;
    bool any_fit_failure() const;
};

// Runs resonator/chi fits, Stark calibration, system gain and added-noise
// extraction for every qubit. A failing stage is recorded on that qubit only.
PipelineReport run_pipeline(const Bundle& bundle, const PipelineOptions& options);

struct PairedNoiseRow {
    int id = 0;
    double freq_hz = 0.0;
    double added_quanta_a = 0.0;
    double added_quanta_b = 0.0;
    double noise_temp_a_k = 0.0;
    double noise_temp_b_k = 0.0;
    double sqrt_noise_temp_ratio = 0.0;  // sqrt(T_N,a / T_N,b)
};

// Rows for qubits that succeeded in both reports, ordered by id.
std::vector<PairedNoiseRow> pair_reports(const PipelineReport& a, const PipelineReport& b);

}  // namespace readout::calfit
