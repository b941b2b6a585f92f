#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "readout/cqed.hpp"
#include "readout/rfchain.hpp"

namespace readout::shots {

struct Shot {
    double i = 0.0;
    double q = 0.0;
    int prepared_state = 0;
};

struct ShotEnsemble {
    std::vector<Shot> shots;
    double integration_time_s = 0.0;
    double readout_freq_hz = 0.0;
    std::uint64_t seed = 0;

    // Throws std::invalid_argument unless both states are present.
    void validate() const;
};

struct ShotOptions {
    double readout_freq_hz = 0.0;   // 0 selects the midpoint f_res - chi
    double photon_flux_hz = 1e6;    // measurement rate, photons per second
    double relaxation_prob = 0.0;   // fraction of state-1 shots that decay during integration
    std::uint64_t seed = 1;
    std::size_t chunk_size = 16384;  // shots per parallel work unit; output does not depend on it
};

// Means S21(f_ro, state); per-quadrature noise variance
// (N_added + 1/2) / (flux * tau). Prepared states alternate 0, 1, 0, ...
ShotEnsemble simulate_shots(const cqed::CavityQubitParams& params,
                            const rfchain::SystemNoiseResult& chain, std::size_t n,
                            double integration_time_s, const ShotOptions& options = {});

// Separation-to-noise ratio the generative model produces in expectation.
double expected_snr(const cqed::CavityQubitParams& params, double added_quanta,
                    double integration_time_s, const ShotOptions& options);
// Photon flux for which expected_snr equals `snr`.
double flux_for_snr(const cqed::CavityQubitParams& params, double added_quanta,
                    double integration_time_s, double snr, double readout_freq_hz = 0.0);

enum class ThresholdRule { midpoint, max_likelihood };

struct ReadoutStats {
    double rotation_rad = 0.0;
    double i0 = 0.0;
    double i1 = 0.0;
    double sigma0 = 0.0;
    double sigma1 = 0.0;
    double mu = 0.0;
    double sigma_t = 0.0;
    double snr = 0.0;
    double threshold = 0.0;
    double p01 = 0.0;  // P(0|1): prepared 1, assigned 0
    double p10 = 0.0;  // P(1|0)
    double fidelity = 0.0;
    std::size_t n0 = 0;
    std::size_t n1 = 0;
};

// Rotates the IQ plane so the mean separation lies along +I and fits one
// Gaussian per prepared state. Fidelity fields use the midpoint threshold.
ReadoutStats rotate_and_fit(const ShotEnsemble& e);

ReadoutStats fidelity(const ShotEnsemble& e, ThresholdRule rule = ThresholdRule::midpoint);

// 1 - Q(snr / sqrt(2)) for equal-width Gaussians split at the midpoint.
double analytic_fidelity(double snr);

struct Histogram {
    std::vector<double> bin_centers;
    std::vector<std::size_t> counts0;
    std::vector<std::size_t> counts1;
};

// Histogram of the rotated I quadrature.
Histogram histogram(const ShotEnsemble& e, const ReadoutStats& stats, int bins = 100);

void write_ensemble_csv(const ShotEnsemble& e, const std::filesystem::path& path);
ShotEnsemble read_ensemble_csv(const std::filesystem::path& path);
void write_histogram_csv(const Histogram& h, const std::filesystem::path& path);

}  // namespace readout::shots
