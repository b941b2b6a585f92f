#include <algorithm>
#include <cmath>
#include <random>

#include "readout/calfit.hpp"
#include "readout/common.hpp"
#include "readout/csv.hpp"
#include "readout/rfchain.hpp"

namespace readout::calfit {

SpectrumTrace read_spectrum_csv(const std::filesystem::path& path) {
    const auto table = csv::read(path);
    const auto fc = table.column("frequency_Hz");
    const auto pc = table.column("power_dBm");
    SpectrumTrace t;
    for (const auto& r : table.rows) {
        t.freqs_hz.push_back(r[fc]);
        t.power_dbm.push_back(r[pc]);
    }
    if (t.freqs_hz.empty()) {
        throw DataError(path.string() + ": no spectrum bins");
    }
    return t;
}

void write_spectrum_csv(const SpectrumTrace& trace, const std::filesystem::path& path) {
    csv::Writer w({"frequency_Hz", "power_dBm"});
    for (std::size_t i = 0; i < trace.freqs_hz.size(); ++i) {
        w.row({trace.freqs_hz[i], trace.power_dbm[i]});
    }
    w.save(path);
}

SystemGainEstimate extract_system_gain(const SpectrumTrace& sa, const StarkCalibration& cal,
                                       double tone_gen_power_dbm, const ResonatorFit* resonator) {
    if (sa.freqs_hz.empty() || sa.freqs_hz.size() != sa.power_dbm.size()) {
        throw DataError("extract_system_gain: empty or inconsistent spectrum");
    }
    std::vector<double> sorted = sa.power_dbm;
    const auto mid = sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2);
    std::nth_element(sorted.begin(), mid, sorted.end());
    const double floor_dbm = *mid;

    const auto peak = std::max_element(sa.power_dbm.begin(), sa.power_dbm.end());
    const auto idx = static_cast<std::size_t>(peak - sa.power_dbm.begin());
    if (*peak - floor_dbm < 10.0) {
        throw FitError("extract_system_gain: peak not found (less than 10 dB above the floor)");
    }

    SystemGainEstimate g;
    g.tone_freq_hz = sa.freqs_hz[idx];
    g.floor_dbm = floor_dbm;
    // Remove the noise carried by the tone bin.
    g.tone_peak_dbm = rfchain::watts_to_dbm(rfchain::dbm_to_watts(*peak) -
                                            rfchain::dbm_to_watts(floor_dbm));
    g.on_chip_tone_dbm = tone_gen_power_dbm + cal.attenuation_db;
    if (resonator != nullptr) {
        const auto t = resonator->model(g.tone_freq_hz) / resonator->amplitude;
        g.on_chip_tone_dbm += 10.0 * std::log10(std::norm(t));
    }
    g.gain_db = g.tone_peak_dbm - g.on_chip_tone_dbm;
    return g;
}

NoiseFloor measure_noise_floor(const SpectrumTrace& sa, double tone_freq_hz, double detuning_hz,
                               double window_hz) {
    double sum = 0.0;
    double sum2 = 0.0;
    int n = 0;
    for (std::size_t i = 0; i < sa.freqs_hz.size(); ++i) {
        const double f = sa.freqs_hz[i];
        const bool near_lo = std::abs(f - (tone_freq_hz - detuning_hz)) <= window_hz;
        const bool near_hi = std::abs(f - (tone_freq_hz + detuning_hz)) <= window_hz;
        if (near_lo || near_hi) {
            const double w = rfchain::dbm_to_watts(sa.power_dbm[i]);
            sum += w;
            sum2 += w * w;
            ++n;
        }
    }
    if (n < 2) {
        throw DataError("measure_noise_floor: no spectrum bins at the requested detuning");
    }
    const double mean = sum / n;
    const double var = std::max(sum2 / n - mean * mean, 0.0) * n / (n - 1);
    NoiseFloor out;
    out.power_dbm = rfchain::watts_to_dbm(mean);
    out.sigma_db = 10.0 / std::log(10.0) * std::sqrt(var / n) / mean;
    out.bins = n;
    return out;
}

double system_noise_temperature(const NoiseMeasurement& m) {
    if (!(m.resolution_bw_hz > 0.0)) {
        throw std::invalid_argument("system_noise_temperature: resolution bandwidth must be positive");
    }
    const double p_noise = rfchain::dbm_to_watts(m.sa_noise_floor_dbm);
    const double g = rfchain::db_to_linear(m.system_gain_db);
    return p_noise / (g * PhysicalConstants::k_b * m.resolution_bw_hz);
}

AddedNoiseResult extract_added_noise(const NoiseMeasurement& m, const AddedNoiseOptions& options) {
    if (!(m.tone_freq_hz > 0.0)) {
        throw std::invalid_argument("extract_added_noise: frequency must be positive");
    }
    AddedNoiseResult out;
    out.noise_temp_k = system_noise_temperature(m);
    out.added_quanta = rfchain::noise_temp_to_added_quanta(out.noise_temp_k, m.tone_freq_hz);
    out.excess_over_ql = out.added_quanta - 0.5;

    // The attenuation error enters G_sys one-to-one in dB.
    const double gain_sigma = std::hypot(m.attenuation_sigma_db, m.gain_sigma_db);
    if (options.resamples > 1 && (gain_sigma > 0.0 || m.floor_sigma_db > 0.0)) {
        std::mt19937_64 rng(options.seed);
        std::normal_distribution<double> normal(0.0, 1.0);
        double sum = 0.0;
        double sum2 = 0.0;
        for (int r = 0; r < options.resamples; ++r) {
            NoiseMeasurement t = m;
            t.system_gain_db += gain_sigma * normal(rng);
            t.sa_noise_floor_dbm += m.floor_sigma_db * normal(rng);
            const double n = rfchain::noise_temp_to_added_quanta(system_noise_temperature(t), t.tone_freq_hz);
            sum += n;
            sum2 += n * n;
        }
        const double mean = sum / options.resamples;
        out.sigma = std::sqrt(std::max(sum2 / options.resamples - mean * mean, 0.0) *
                              options.resamples / (options.resamples - 1));
    }
    out.under_vacuum = out.added_quanta + 3.0 * out.sigma < 0.0;
    return out;
}

}  // namespace readout::calfit
