#include "readout/cqed.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "readout/common.hpp"
#include "readout/csv.hpp"
#include "readout/rfchain.hpp"

namespace readout::cqed {

double CavityQubitParams::q_total() const { return 1.0 / (1.0 / q_c + 1.0 / q_int); }

void CavityQubitParams::validate() const {
    auto bad = [&](const std::string& msg) {
        throw std::invalid_argument("qubit " + std::to_string(id) + ": " + msg);
    };
    if (!(f_res_hz > 0.0) || !std::isfinite(f_res_hz)) bad("f_res must be positive");
    if (!(q_c > 0.0) || !(q_int > 0.0)) bad("quality factors must be positive");
    if (!(chi_hz >= 0.0)) bad("chi must be non-negative");
    if (!(f_q_hz > 0.0) || !(f_q_hz < f_res_hz)) bad("qubit frequency must lie below the cavity");
    if (!(qubit_linewidth_hz > 0.0)) bad("qubit linewidth must be positive");
    if (!std::isfinite(asymmetry_rad)) bad("asymmetry must be finite");
}

std::vector<CavityQubitParams> reference_device() {
    struct Row {
        double f_res_ghz, q_c, chi_khz, f_q_ghz;
    };
    constexpr Row rows[] = {
        {7.218, 7136, 135, 4.730}, {7.048, 4216, 140, 4.583}, {6.879, 7842, 159, 4.553},
        {6.707, 6603, 95, 3.399},  {6.522, 7843, 153, 4.288}, {6.299, 9642, 143, 4.066},
        {5.903, 5814, 156, 4.015}, {5.745, 11290, 265, 4.411},
    };
    std::vector<CavityQubitParams> out;
    int id = 1;
    for (const auto& r : rows) {
        CavityQubitParams p;
        p.id = id++;
        p.f_res_hz = r.f_res_ghz * 1e9;
        p.q_c = r.q_c;
        p.q_int = 1000.0 * r.q_c;
        p.chi_hz = r.chi_khz * 1e3;
        p.f_q_hz = r.f_q_ghz * 1e9;
        out.push_back(p);
    }
    return out;
}

std::complex<double> s21(const CavityQubitParams& p, double freq_hz, int qubit_state) {
    if (qubit_state != 0 && qubit_state != 1) {
        throw std::invalid_argument("s21: qubit state must be 0 or 1");
    }
    const double f0 = p.f_res_hz - 2.0 * p.chi_hz * qubit_state;
    const double q = p.q_total();
    const std::complex<double> coupling = (q / p.q_c) * std::polar(1.0, p.asymmetry_rad);
    // Normalized to the bare resonance so the linewidth is state independent.
    const std::complex<double> denom(1.0, 2.0 * q * (freq_hz - f0) / p.f_res_hz);
    return 1.0 - coupling / denom;
}

std::vector<std::complex<double>> s21_trace(const CavityQubitParams& p,
                                            std::span<const double> freqs_hz, int qubit_state) {
    std::vector<std::complex<double>> out;
    out.reserve(freqs_hz.size());
    for (double f : freqs_hz) {
        out.push_back(s21(p, f, qubit_state));
    }
    return out;
}

std::string to_string(PowerModel model) {
    return model == PowerModel::coupling_limited ? "coupling_limited" : "exact";
}

PowerModel power_model_from_string(const std::string& name) {
    if (name == "coupling_limited") return PowerModel::coupling_limited;
    if (name == "exact") return PowerModel::exact;
    throw std::invalid_argument("unknown power model '" + name + "'");
}

namespace {

// P / N for the selected model.
double power_per_photon(const CavityQubitParams& p, PowerModel model) {
    const double omega = two_pi * p.f_res_hz;
    const double prefactor =
        model == PowerModel::coupling_limited ? 1.0 / p.q_c : p.q_c / (p.q_total() * p.q_total());
    return prefactor * PhysicalConstants::hbar * omega * omega / 2.0;
}

}  // namespace

double cavity_power(const CavityQubitParams& p, double photons, PowerModel model) {
    if (!(photons >= 0.0)) {
        throw std::invalid_argument("cavity_power: photon number must be non-negative");
    }
    return photons * power_per_photon(p, model);
}

double photons_from_power(const CavityQubitParams& p, double watts, PowerModel model) {
    if (!(watts >= 0.0)) {
        throw std::invalid_argument("photons_from_power: power must be non-negative");
    }
    return watts / power_per_photon(p, model);
}

double stark_shifted_freq(const CavityQubitParams& p, double photons) {
    if (!(photons >= 0.0)) {
        throw std::invalid_argument("stark_shifted_freq: photon number must be non-negative");
    }
    return p.f_q_hz - 2.0 * p.chi_hz * photons;
}

double photons_at_generator_power(const CavityQubitParams& p, double attenuation_db,
                                  double p_gen_dbm, PowerModel model) {
    return photons_from_power(p, rfchain::dbm_to_watts(p_gen_dbm + attenuation_db), model);
}

void StarkMap::validate() const {
    if (readout_powers_dbm.empty() || qubit_drive_freqs_hz.empty()) {
        throw std::invalid_argument("StarkMap: empty axis");
    }
    if (response.size() != readout_powers_dbm.size() * qubit_drive_freqs_hz.size()) {
        throw std::invalid_argument("StarkMap: response size does not match axes");
    }
    for (std::size_t i = 1; i < readout_powers_dbm.size(); ++i) {
        if (!(readout_powers_dbm[i] > readout_powers_dbm[i - 1])) {
            throw std::invalid_argument("StarkMap: powers must be strictly increasing");
        }
    }
    for (std::size_t i = 1; i < qubit_drive_freqs_hz.size(); ++i) {
        if (!(qubit_drive_freqs_hz[i] > qubit_drive_freqs_hz[i - 1])) {
            throw std::invalid_argument("StarkMap: drive frequencies must be strictly increasing");
        }
    }
}

StarkMap synth_stark_map(const CavityQubitParams& p, double attenuation_db,
                         std::span<const double> power_axis_dbm, std::span<const double> freq_axis_hz,
                         const StarkMapOptions& options) {
    p.validate();
    StarkMap map;
    map.params = p;
    map.readout_powers_dbm.assign(power_axis_dbm.begin(), power_axis_dbm.end());
    map.qubit_drive_freqs_hz.assign(freq_axis_hz.begin(), freq_axis_hz.end());
    map.response.assign(power_axis_dbm.size() * freq_axis_hz.size(), 0.0);
    map.validate();
    if (options.noise_level < 0.0 || options.broadening_hz_per_photon < 0.0) {
        throw std::invalid_argument("synth_stark_map: negative noise or broadening");
    }

    const std::size_t nf = freq_axis_hz.size();
    for (std::size_t i = 0; i < power_axis_dbm.size(); ++i) {
        const double n = photons_at_generator_power(p, attenuation_db, power_axis_dbm[i],
                                                    options.power_model);
        if (n > options.max_photons) {
            throw std::domain_error("synth_stark_map: " + std::to_string(n) +
                                    " photons exceeds the linear Stark regime bound");
        }
        const double center = stark_shifted_freq(p, n);
        const double width = p.qubit_linewidth_hz + options.broadening_hz_per_photon * n;
        std::seed_seq seq{static_cast<std::uint32_t>(options.seed),
                          static_cast<std::uint32_t>(options.seed >> 32),
                          static_cast<std::uint32_t>(i)};
        std::mt19937_64 rng(seq);
        std::normal_distribution<double> normal(0.0, 1.0);
        for (std::size_t j = 0; j < nf; ++j) {
            const double u = 2.0 * (freq_axis_hz[j] - center) / width;
            double v = 1.0 / (1.0 + u * u);
            if (options.noise_level > 0.0) {
                v += options.noise_level * normal(rng);
            }
            map.response[i * nf + j] = v;
        }
    }
    return map;
}

void write_stark_map_csv(const StarkMap& map, const std::filesystem::path& path) {
    map.validate();
    csv::Writer w({"power_dBm", "qubit_freq_Hz", "response"});
    w.meta("id", std::to_string(map.params.id));
    w.meta("f_res_hz", map.params.f_res_hz);
    w.meta("q_c", map.params.q_c);
    w.meta("q_int", map.params.q_int);
    w.meta("chi_hz", map.params.chi_hz);
    w.meta("f_q_hz", map.params.f_q_hz);
    w.meta("qubit_linewidth_hz", map.params.qubit_linewidth_hz);
    w.meta("asymmetry_rad", map.params.asymmetry_rad);
    for (std::size_t i = 0; i < map.readout_powers_dbm.size(); ++i) {
        for (std::size_t j = 0; j < map.qubit_drive_freqs_hz.size(); ++j) {
            w.row({map.readout_powers_dbm[i], map.qubit_drive_freqs_hz[j], map.at(i, j)});
        }
    }
    w.save(path);
}

StarkMap read_stark_map_csv(const std::filesystem::path& path) {
    const auto table = csv::read(path);
    const std::string src = path.string();
    auto meta_value = [&](const std::string& key) {
        auto it = table.meta.find(key);
        if (it == table.meta.end()) {
            throw DataError(src + ": missing header field '" + key + "'");
        }
        try {
            return std::stod(it->second);
        } catch (const std::exception&) {
            throw DataError(src + ": header field '" + key + "' is not a number");
        }
    };
    StarkMap map;
    map.params.id = static_cast<int>(meta_value("id"));
    map.params.f_res_hz = meta_value("f_res_hz");
    map.params.q_c = meta_value("q_c");
    map.params.q_int = meta_value("q_int");
    map.params.chi_hz = meta_value("chi_hz");
    map.params.f_q_hz = meta_value("f_q_hz");
    map.params.qubit_linewidth_hz = meta_value("qubit_linewidth_hz");
    if (table.meta.count("asymmetry_rad") != 0) {
        map.params.asymmetry_rad = meta_value("asymmetry_rad");
    }

    const std::size_t pc = table.column("power_dBm");
    const std::size_t fc = table.column("qubit_freq_Hz");
    const std::size_t rc = table.column("response");
    if (table.rows.empty()) {
        throw DataError(src + ": no data rows");
    }
    for (const auto& r : table.rows) {
        if (map.readout_powers_dbm.empty() || r[pc] != map.readout_powers_dbm.back()) {
            map.readout_powers_dbm.push_back(r[pc]);
        }
        if (map.readout_powers_dbm.size() == 1) {
            map.qubit_drive_freqs_hz.push_back(r[fc]);
        }
        map.response.push_back(r[rc]);
    }
    const std::size_t nf = map.qubit_drive_freqs_hz.size();
    if (map.response.size() != nf * map.readout_powers_dbm.size()) {
        throw DataError(src + ": rows do not form a complete power x frequency grid");
    }
    for (std::size_t k = 0; k < table.rows.size(); ++k) {
        if (table.rows[k][fc] != map.qubit_drive_freqs_hz[k % nf]) {
            throw DataError(src + ": row " + std::to_string(k + 1) +
                            ": drive frequency does not match the first power slice");
        }
    }
    try {
        map.validate();
        map.params.validate();
    } catch (const std::invalid_argument& e) {
        throw DataError(src + ": " + e.what());
    }
    return map;
}

}  // namespace readout::cqed
