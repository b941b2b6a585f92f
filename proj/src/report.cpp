#include "readout/report.hpp"

#include <cmath>

namespace readout::report {

namespace {

json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

std::string failure_name(calfit::FailureKind k) {
    switch (k) {
        case calfit::FailureKind::none: return "none";
        case calfit::FailureKind::data: return "data";
        case calfit::FailureKind::fit: return "fit";
    }
    return "unknown";
}

}  // namespace

json to_json(const rfchain::SystemNoiseResult& r) {
    return {{"freq_hz", num(r.freq_hz)},
            {"gain_db", num(r.gain_db)},
            {"noise_temp_k", num(r.noise_temp_k)},
            {"added_quanta", num(r.added_quanta)},
            {"sigma",
             {{"gain_db", num(r.sigma.gain_db)},
              {"noise_temp_k", num(r.sigma.noise_temp_k)},
              {"added_quanta", num(r.sigma.added_quanta)}}}};
}

json to_json(const rfchain::ChainComparisonRow& r) {
    return {{"freq_hz", num(r.freq_hz)},
            {"a", to_json(r.a)},
            {"b", to_json(r.b)},
            {"sqrt_noise_temp_ratio", num(r.sqrt_noise_temp_ratio)}};
}

json to_json(const calfit::ResonatorFit& f) {
    return {{"f_res_hz", num(f.f_res_hz)},
            {"sigma_f_res_hz", num(f.sigma_f_res())},
            {"q", num(f.q)},
            {"sigma_q", num(f.sigma_q())},
            {"q_c", num(f.q_c)},
            {"sigma_q_c", num(f.sigma_q_c())},
            {"q_int", num(f.q_int)},
            {"q_int_resolved", f.q_int_resolved()},
            {"phi_rad", num(f.phi_rad)},
            {"amplitude", {num(f.amplitude.real()), num(f.amplitude.imag())}},
            {"residual_rms", num(f.residual_rms)},
            {"n_points", f.n_points}};
}

json to_json(const calfit::ChiEstimate& c) {
    return {{"chi_hz", num(c.chi_hz)},
            {"sigma_hz", num(c.sigma_hz)},
            {"state0", to_json(c.state0)},
            {"state1", to_json(c.state1)}};
}

json to_json(const calfit::StarkCalibration& s) {
    json slices = json::array();
    for (std::size_t i = 0; i < s.slice_powers_dbm.size(); ++i) {
        slices.push_back({{"power_dbm", num(s.slice_powers_dbm[i])},
                          {"shift_hz", num(s.slice_shift_hz[i])},
                          {"sigma_hz", num(s.slice_shift_sigma_hz[i])}});
    }
    return {{"attenuation_db", num(s.attenuation_db)},
            {"uncertainty_db", num(s.uncertainty_db)},
            {"p_gen_at_n1_dbm", num(s.p_gen_at_n1_dbm)},
            {"p_cav_at_n1_dbm", num(s.p_cav_at_n1_dbm)},
            {"slices", std::move(slices)}};
}

json to_json(const calfit::SystemGainEstimate& g) {
    return {{"gain_db", num(g.gain_db)},
            {"tone_freq_hz", num(g.tone_freq_hz)},
            {"tone_peak_dbm", num(g.tone_peak_dbm)},
            {"on_chip_tone_dbm", num(g.on_chip_tone_dbm)},
            {"floor_dbm", num(g.floor_dbm)}};
}

json to_json(const calfit::NoiseMeasurement& m) {
    return {{"tone_freq_hz", num(m.tone_freq_hz)},
            {"sa_tone_power_dbm", num(m.sa_tone_power_dbm)},
            {"sa_noise_floor_dbm", num(m.sa_noise_floor_dbm)},
            {"resolution_bw_hz", num(m.resolution_bw_hz)},
            {"detuning_hz", num(m.detuning_hz)},
            {"system_gain_db", num(m.system_gain_db)},
            {"attenuation_sigma_db", num(m.attenuation_sigma_db)},
            {"gain_sigma_db", num(m.gain_sigma_db)},
            {"floor_sigma_db", num(m.floor_sigma_db)}};
}

json to_json(const calfit::AddedNoiseResult& n) {
    return {{"added_quanta", num(n.added_quanta)},
            {"sigma", num(n.sigma)},
            {"excess_over_ql", num(n.excess_over_ql)},
            {"noise_temp_k", num(n.noise_temp_k)},
            {"under_vacuum", n.under_vacuum}};
}

json to_json(const calfit::QubitReport& q) {
    json j = {{"id", q.id}, {"ok", q.ok()}, {"failure", failure_name(q.failure)}};
    if (!q.ok()) {
        j["failed_stage"] = q.failed_stage;
        j["error"] = q.error;
    }
    if (q.chi) j["resonator"] = to_json(*q.chi);
    if (q.f_q_hz) j["f_q_hz"] = num(*q.f_q_hz);
    if (q.stark) j["stark"] = to_json(*q.stark);
    if (q.gain) j["system_gain"] = to_json(*q.gain);
    if (q.measurement) j["measurement"] = to_json(*q.measurement);
    if (q.noise) j["added_noise"] = to_json(*q.noise);
    if (q.system) j["system"] = to_json(*q.system);
    return j;
}

json to_json(const calfit::PipelineReport& p) {
    json qs = json::array();
    for (const auto& q : p.qubits) qs.push_back(to_json(q));
    return {{"bundle", p.bundle_name}, {"all_ok", p.all_ok()}, {"qubits", std::move(qs)}};
}

json to_json(const calfit::PairedNoiseRow& r) {
    return {{"id", r.id},
            {"freq_hz", num(r.freq_hz)},
            {"added_quanta_a", num(r.added_quanta_a)},
            {"added_quanta_b", num(r.added_quanta_b)},
            {"noise_temp_a_k", num(r.noise_temp_a_k)},
            {"noise_temp_b_k", num(r.noise_temp_b_k)},
            {"sqrt_noise_temp_ratio", num(r.sqrt_noise_temp_ratio)}};
}

json to_json(const twline::Stopband& s) {
    return {{"lower_hz", num(s.lower_hz)}, {"upper_hz", num(s.upper_hz)}, {"center_hz", num(s.center_hz())}};
}

json to_json(const shots::ReadoutStats& s) {
    return {{"rotation_rad", num(s.rotation_rad)},
            {"i0", num(s.i0)},
            {"i1", num(s.i1)},
            {"sigma0", num(s.sigma0)},
            {"sigma1", num(s.sigma1)},
            {"snr", num(s.snr)},
            {"threshold", num(s.threshold)},
            {"p01", num(s.p01)},
            {"p10", num(s.p10)},
            {"fidelity", num(s.fidelity)},
            {"n0", s.n0},
            {"n1", s.n1}};
}

}  // namespace readout::report
