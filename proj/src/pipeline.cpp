#include "readout/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <future>
#include <map>

#include <nlohmann/json.hpp>

#include "readout/common.hpp"

namespace readout::calfit {

using nlohmann::json;

Bundle load_bundle(const std::filesystem::path& dir) {
    const auto path = dir / manifest_file;
    std::ifstream in(path);
    if (!in) {
        throw ConfigError(path.string() + ": cannot open bundle manifest");
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    Bundle b;
    b.root = dir;
    try {
        b.name = j.value("name", dir.filename().string());
        for (const auto& q : j.at("qubits")) {
            QubitInputs in_q;
            in_q.id = q.at("id").get<int>();
            in_q.s21_state0 = dir / q.at("s21_state0").get<std::string>();
            in_q.s21_state1 = dir / q.at("s21_state1").get<std::string>();
            in_q.stark_map = dir / q.at("stark_map").get<std::string>();
            in_q.sa_trace = dir / q.at("sa_trace").get<std::string>();
            in_q.tone_gen_power_dbm = q.at("tone_gen_power_dbm").get<double>();
            in_q.resolution_bw_hz = q.value("resolution_bw_hz", 30e3);
            in_q.detuning_hz = q.value("detuning_hz", 10e6);
            in_q.chi_prior_sigma_hz = q.value("chi_prior_sigma_hz", 0.0);
            if (!(in_q.resolution_bw_hz > 0.0) || !(in_q.detuning_hz > 0.0)) {
                throw ConfigError(path.string() + ": qubit " + std::to_string(in_q.id) +
                                  ": resolution_bw_hz and detuning_hz must be positive");
            }
            b.qubits.push_back(std::move(in_q));
        }
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    if (b.qubits.empty()) {
        throw ConfigError(path.string() + ": manifest lists no qubits");
    }
    return b;
}

namespace {

QubitReport run_qubit(const QubitInputs& q, const PipelineOptions& options) {
    QubitReport rep;
    rep.id = q.id;
    std::string stage;
    try {
        stage = "resonator";
        const auto t0 = read_s21_csv(q.s21_state0);
        const auto t1 = read_s21_csv(q.s21_state1);
        rep.chi = extract_chi(t0, t1);

        stage = "stark";
        const auto map = cqed::read_stark_map_csv(q.stark_map);
        rep.f_q_hz = map.params.f_q_hz;
        StarkOptions so;
        so.power_model = options.power_model;
        so.resamples = options.resamples;
        so.seed = derive_seed(options.seed, static_cast<std::uint64_t>(q.id) * 4 + 0);
        so.chi_sigma_hz = std::hypot(rep.chi->sigma_hz, q.chi_prior_sigma_hz);
        rep.stark = calibrate_stark(map, rep.chi->state0, rep.chi->chi_hz, so);

        stage = "system_gain";
        const auto sa = read_spectrum_csv(q.sa_trace);
        rep.gain = extract_system_gain(sa, *rep.stark, q.tone_gen_power_dbm, &rep.chi->state0);

        stage = "noise";
        const auto floor = measure_noise_floor(sa, rep.gain->tone_freq_hz, q.detuning_hz,
                                               options.noise_window_hz);
        NoiseMeasurement m;
        m.tone_freq_hz = rep.chi->state0.f_res_hz;
        m.sa_tone_power_dbm = rep.gain->tone_peak_dbm;
        m.sa_noise_floor_dbm = floor.power_dbm;
        m.resolution_bw_hz = q.resolution_bw_hz;
        m.detuning_hz = q.detuning_hz;
        m.system_gain_db = rep.gain->gain_db;
        m.attenuation_sigma_db = rep.stark->uncertainty_db;
        m.floor_sigma_db = floor.sigma_db;
        rep.measurement = m;
        AddedNoiseOptions no;
        no.resamples = options.resamples;
        no.seed = derive_seed(options.seed, static_cast<std::uint64_t>(q.id) * 4 + 1);
        rep.noise = extract_added_noise(m, no);

        rfchain::SystemNoiseResult sys;
        sys.freq_hz = m.tone_freq_hz;
        sys.gain_db = m.system_gain_db;
        sys.noise_temp_k = rep.noise->noise_temp_k;
        sys.added_quanta = rep.noise->added_quanta;
        sys.sigma.gain_db = std::hypot(m.attenuation_sigma_db, m.gain_sigma_db);
        sys.sigma.added_quanta = rep.noise->sigma;
        sys.sigma.noise_temp_k = rep.noise->sigma * PhysicalConstants::hbar * two_pi * m.tone_freq_hz /
                                 PhysicalConstants::k_b;
        rep.system = sys;
    } catch (const FitError& e) {
        rep.failure = FailureKind::fit;
        rep.failed_stage = stage;
        rep.error = e.what();
    } catch (const std::exception& e) {
        rep.failure = FailureKind::data;
        rep.failed_stage = stage;
        rep.error = e.what();
    }
    return rep;
}

}  // namespace

bool PipelineReport::all_ok() const {
    return std::all_of(qubits.begin(), qubits.end(), [](const auto& q) { return q.ok(); });
}

bool PipelineReport::any_fit_failure() const {
    return std::any_of(qubits.begin(), qubits.end(),
                       [](const auto& q) { return q.failure == FailureKind::fit; });
}

PipelineReport run_pipeline(const Bundle& bundle, const PipelineOptions& options) {
    std::vector<std::future<QubitReport>> jobs;
    jobs.reserve(bundle.qubits.size());
    for (const auto& q : bundle.qubits) {
        jobs.push_back(std::async(std::launch::async, run_qubit, std::cref(q), std::cref(options)));
    }
    PipelineReport report;
    report.bundle_name = bundle.name;
    for (auto& j : jobs) {
        report.qubits.push_back(j.get());
    }
    return report;
}

std::vector<PairedNoiseRow> pair_reports(const PipelineReport& a, const PipelineReport& b) {
    std::map<int, const QubitReport*> by_id;
    for (const auto& q : b.qubits) {
        if (q.ok()) by_id[q.id] = &q;
    }
    std::vector<PairedNoiseRow> rows;
    for (const auto& qa : a.qubits) {
        auto it = by_id.find(qa.id);
        if (!qa.ok() || it == by_id.end()) continue;
        const auto& qb = *it->second;
        PairedNoiseRow r;
        r.id = qa.id;
        r.freq_hz = qa.system->freq_hz;
        r.added_quanta_a = qa.noise->added_quanta;
        r.added_quanta_b = qb.noise->added_quanta;
        r.noise_temp_a_k = qa.noise->noise_temp_k;
        r.noise_temp_b_k = qb.noise->noise_temp_k;
        r.sqrt_noise_temp_ratio = std::sqrt(r.noise_temp_a_k / r.noise_temp_b_k);
        rows.push_back(r);
    }
    std::sort(rows.begin(), rows.end(), [](const auto& x, const auto& y) { return x.id < y.id; });
    return rows;
}

}  // namespace readout::calfit
