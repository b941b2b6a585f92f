#include "readout/synth.hpp"
#include "readout/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include "readout/calfit.hpp"
#include "readout/common.hpp"

namespace readout::synth {

using nlohmann::json;

namespace {

std::mt19937_64 stream_rng(std::uint64_t seed, int qubit_id, int stream) {
    return std::mt19937_64(derive_seed(seed, static_cast<std::uint64_t>(qubit_id) * 16 + stream));
}

calfit::ComplexTrace s21_with_noise(const cqed::CavityQubitParams& p, int state,
                                    const BundleSpec& spec, std::mt19937_64& rng) {
    const double linewidth = p.f_res_hz / p.q_total();
    const double center = p.f_res_hz - p.chi_hz;
    const double span = spec.s21_span_linewidths * linewidth;
    calfit::ComplexTrace t;
    std::normal_distribution<double> normal(0.0, 1.0);
    const double sigma = spec.zero_noise ? 0.0 : spec.s21_noise;
    for (int i = 0; i < spec.s21_points; ++i) {
        const double f = center - span / 2.0 + span * i / (spec.s21_points - 1);
        t.freqs_hz.push_back(f);
        auto z = cqed::s21(p, f, state);
        if (sigma > 0.0) {
            const double re = normal(rng);
            const double im = normal(rng);
            z += sigma * std::complex<double>(re, im);
        }
        t.s21.push_back(z);
    }
    return t;
}

}  // namespace

std::vector<QubitTruth> write_bundle(const BundleSpec& spec, const std::filesystem::path& dir,
                                     const json& resolved_config) {
    spec.chain.validate();
    if (spec.qubits.empty()) {
        throw std::invalid_argument("write_bundle: no qubits");
    }
    if (spec.s21_points < 50 || !(spec.stark_step_db > 0.0) || !(spec.resolution_bw_hz > 0.0) ||
        !(spec.sa_averages > 0.0)) {
        throw std::invalid_argument("write_bundle: invalid sweep settings");
    }
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw std::runtime_error(dir.string() + ": cannot create directory: " + ec.message());
    }

    std::vector<QubitTruth> truths;
    json manifest;
    manifest["name"] = spec.name;
    manifest["seed"] = spec.seed;
    manifest["config"] = resolved_config;
    manifest["qubits"] = json::array();
    json truth_block = json::array();

    for (const auto& p : spec.qubits) {
        p.validate();
        const std::string sub = "q" + std::to_string(p.id);
        std::filesystem::create_directories(dir / sub);

        auto rng_s21 = stream_rng(spec.seed, p.id, 0);
        calfit::write_s21_csv(s21_with_noise(p, 0, spec, rng_s21), dir / sub / "s21_state0.csv");
        calfit::write_s21_csv(s21_with_noise(p, 1, spec, rng_s21), dir / sub / "s21_state1.csv");

        const double p_cav_n1 = rfchain::watts_to_dbm(cqed::cavity_power(p, 1.0));
        const double p_gen_n1 = p_cav_n1 - spec.attenuation_db;
        std::vector<double> powers;
        const auto n_steps = static_cast<int>(
            std::floor((spec.stark_below_db + spec.stark_above_db) / spec.stark_step_db + 1e-9));
        for (int k = 0; k <= n_steps; ++k) {
            powers.push_back(p_gen_n1 - spec.stark_below_db + k * spec.stark_step_db);
        }
        const double n_max = std::pow(10.0, spec.stark_above_db / 10.0);
        const double w_max = p.qubit_linewidth_hz + spec.broadening_hz_per_photon * n_max;
        const double f_lo = p.f_q_hz - 2.0 * p.chi_hz * n_max - 3.0 * w_max;
        const double f_hi = p.f_q_hz + 4.0 * p.qubit_linewidth_hz;
        const double df = p.qubit_linewidth_hz / 4.0;
        std::vector<double> freqs;
        const auto n_freqs = static_cast<int>(std::floor((f_hi - f_lo) / df)) + 1;
        for (int k = 0; k < n_freqs; ++k) {
            freqs.push_back(f_lo + k * df);
        }
        cqed::StarkMapOptions so;
        so.noise_level = spec.zero_noise ? 0.0 : spec.stark_noise;
        so.broadening_hz_per_photon = spec.broadening_hz_per_photon;
        so.max_photons = std::max(50.0, 2.0 * n_max);
        so.seed = derive_seed(spec.seed, static_cast<std::uint64_t>(p.id) * 16 + 1);
        const auto map = cqed::synth_stark_map(p, spec.attenuation_db, powers, freqs, so);
        cqed::write_stark_map_csv(map, dir / sub / "stark_map.csv");

        // Spectrum analyzer: cascade noise in each bin plus the transmitted tone.
        const double tone_freq = p.f_res_hz + spec.tone_offset_hz;
        const double tone_gen = spec.tone_on_chip_dbm - spec.attenuation_db;
        const int half_bins = static_cast<int>(std::lround(spec.sa_span_hz / 2.0 / spec.resolution_bw_hz));
        auto rng_sa = stream_rng(spec.seed, p.id, 2);
        std::normal_distribution<double> normal(0.0, 1.0);
        const double scatter = spec.zero_noise ? 0.0 : 1.0 / std::sqrt(spec.sa_averages);
        calfit::SpectrumTrace sa;
        for (int k = -half_bins; k <= half_bins; ++k) {
            const double f = tone_freq + k * spec.resolution_bw_hz;
            const auto c = rfchain::cascade(spec.chain, f);
            const double g = rfchain::db_to_linear(c.gain_db);
            double w = g * PhysicalConstants::k_b * c.noise_temp_k * spec.resolution_bw_hz;
            if (scatter > 0.0) {
                w *= std::max(1.0 + scatter * normal(rng_sa), 1e-3);
            }
            if (k == 0) {
                w += g * rfchain::dbm_to_watts(spec.tone_on_chip_dbm) *
                     std::norm(cqed::s21(p, tone_freq, 0));
            }
            sa.freqs_hz.push_back(f);
            sa.power_dbm.push_back(rfchain::watts_to_dbm(w));
        }
        calfit::write_spectrum_csv(sa, dir / sub / "sa_trace.csv");

        QubitTruth t;
        t.id = p.id;
        t.tone_gen_power_dbm = tone_gen;
        t.p_gen_at_n1_dbm = p_gen_n1;
        t.system = rfchain::cascade(spec.chain, p.f_res_hz);
        truths.push_back(t);

        manifest["qubits"].push_back({{"id", p.id},
                                      {"s21_state0", sub + "/s21_state0.csv"},
                                      {"s21_state1", sub + "/s21_state1.csv"},
                                      {"stark_map", sub + "/stark_map.csv"},
                                      {"sa_trace", sub + "/sa_trace.csv"},
                                      {"tone_gen_power_dbm", tone_gen},
                                      {"resolution_bw_hz", spec.resolution_bw_hz},
                                      {"detuning_hz", spec.detuning_hz}});
        truth_block.push_back({{"id", p.id},
                               {"attenuation_db", spec.attenuation_db},
                               {"p_gen_at_n1_dbm", p_gen_n1},
                               {"system_gain_db", t.system.gain_db},
                               {"noise_temp_k", t.system.noise_temp_k},
                               {"added_quanta", t.system.added_quanta}});
    }
    manifest["truth"] = truth_block;

    std::ofstream out(dir / calfit::manifest_file, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error((dir / calfit::manifest_file).string() + ": cannot write file");
    }
    out << manifest.dump(2) << '\n';
    return truths;
}

}  // namespace readout::synth
