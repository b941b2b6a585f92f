#include "readout/config.hpp"

#include <fstream>

#include "readout/common.hpp"

namespace readout::config {

namespace {

template <typename F>
auto guarded(const std::string& where, F&& body) -> decltype(body()) {
    try {
        return body();
    } catch (const json::exception& e) {
        throw ConfigError(where + ": " + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(where + ": " + e.what());
    } catch (const std::domain_error& e) {
        throw ConfigError(where + ": " + e.what());
    }
}

rfchain::GainCurve parse_gain(const json& c, const std::filesystem::path& base_dir,
                              const rfchain::Band& band) {
    if (c.contains("gain_csv")) {
        auto path = std::filesystem::path(c.at("gain_csv").get<std::string>());
        if (path.is_relative()) path = base_dir / path;
        try {
            return rfchain::GainCurve::from_csv(path, c.value("gain_column", std::string()));
        } catch (const DataError& e) {
            throw ConfigError(e.what());
        }
    }
    if (c.contains("loss_db_per_ghz")) {
        const double slope = c.at("loss_db_per_ghz").get<double>();
        const double offset = c.value("gain_db", 0.0);
        return rfchain::GainCurve({{band.f_min_hz, offset - slope * band.f_min_hz / 1e9},
                                   {band.f_max_hz, offset - slope * band.f_max_hz / 1e9}});
    }
    const auto& g = c.at("gain_db");
    if (g.is_number()) {
        return rfchain::GainCurve(g.get<double>());
    }
    std::vector<std::pair<double, double>> pts;
    for (const auto& p : g) {
        pts.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
    }
    return rfchain::GainCurve(std::move(pts));
}

}  // namespace

json load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError(path.string() + ": cannot open config");
    }
    try {
        return json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

rfchain::ChainSpec parse_chain(const json& j, const std::filesystem::path& base_dir) {
    const std::string name = j.value("name", std::string("chain"));
    return guarded("chain '" + name + "'", [&] {
        rfchain::ChainSpec chain;
        chain.name = name;
        chain.reference_plane = j.value("reference_plane", std::size_t{0});
        const auto& band = j.at("band_hz");
        chain.band = {band.at(0).get<double>(), band.at(1).get<double>()};
        for (const auto& c : j.at("components")) {
            rfchain::ChainComponent comp;
            comp.name = c.at("name").get<std::string>();
            comp.kind = rfchain::component_kind_from_string(c.at("kind").get<std::string>());
            comp.gain_db = parse_gain(c, base_dir, chain.band);
            comp.noise_temp_k = c.value("noise_temp_k", 0.0);
            comp.physical_temp_k = c.value("physical_temp_k", 0.0);
            comp.gain_sigma_db = c.value("gain_sigma_db", 0.0);
            comp.temp_sigma_k = c.value("temp_sigma_k", 0.0);
            chain.components.push_back(std::move(comp));
        }
        chain.validate();
        return chain;
    });
}

std::vector<cqed::CavityQubitParams> parse_qubits(const json& j) {
    return guarded("qubits", [&] {
        std::vector<cqed::CavityQubitParams> out;
        if (j.is_string()) {
            if (j.get<std::string>() != "reference") {
                throw ConfigError("qubits: unknown preset '" + j.get<std::string>() + "'");
            }
            out = cqed::reference_device();
        } else {
            for (const auto& q : j) {
                cqed::CavityQubitParams p;
                p.id = q.at("id").get<int>();
                p.f_res_hz = q.at("f_res_hz").get<double>();
                p.q_c = q.at("q_c").get<double>();
                p.q_int = q.value("q_int", 1000.0 * p.q_c);
                p.chi_hz = q.at("chi_hz").get<double>();
                p.f_q_hz = q.at("f_q_hz").get<double>();
                p.qubit_linewidth_hz = q.value("qubit_linewidth_hz", 50e3);
                p.asymmetry_rad = q.value("asymmetry_rad", 0.0);
                out.push_back(p);
            }
        }
        for (auto& p : out) {
            p.validate();
        }
        return out;
    });
}

std::vector<double> parse_freqs(const json& j) {
    return guarded("frequencies", [&] {
        std::vector<double> out;
        if (j.is_array()) {
            out = j.get<std::vector<double>>();
        } else {
            const double start = j.at("start").get<double>();
            const double stop = j.at("stop").get<double>();
            const int points = j.at("points").get<int>();
            if (points < 1) throw ConfigError("frequencies: points must be >= 1");
            for (int i = 0; i < points; ++i) {
                out.push_back(points == 1 ? start : start + (stop - start) * i / (points - 1));
            }
        }
        if (out.empty()) throw ConfigError("frequencies: empty list");
        return out;
    });
}

twline::SupercellSpec parse_line(const json& j) {
    return guarded("line", [&] {
        if (j.value("preset", std::string()) == "reference") {
            auto sc = twline::reference_supercell();
            sc.n_supercells = j.value("n_supercells", sc.n_supercells);
            sc.validate();
            return sc;
        }
        const int n_u = j.at("n_unloaded").get<int>();
        const int n_l = j.at("n_loaded").get<int>();
        const int n_sc = j.at("n_supercells").get<int>();
        if (j.contains("impedance_ratio")) {
            return twline::contrast_supercell(j.at("inductance_per_m").get<double>(),
                                              j.at("mean_capacitance_per_m").get<double>(),
                                              j.at("impedance_ratio").get<double>(),
                                              j.at("cell_length_m").get<double>(), n_u, n_l, n_sc);
        }
        auto cell = [&](const json& c, twline::CellLabel label) {
            if (c.contains("geometry")) {
                const auto& g = c.at("geometry");
                twline::StubGeometry geo;
                geo.stub_length_m = g.at("stub_length_m").get<double>();
                geo.stub_width_m = g.at("stub_width_m").get<double>();
                geo.dielectric_thickness_m = g.at("dielectric_thickness_m").get<double>();
                geo.rel_permittivity = g.at("rel_permittivity").get<double>();
                geo.line_width_m = g.at("line_width_m").get<double>();
                geo.sheet_inductance_h = g.at("sheet_inductance_h").get<double>();
                return twline::cell_from_geometry(geo, c.at("length_m").get<double>(),
                                                  c.value("stubs_per_cell", 2), label);
            }
            twline::CellSpec s{c.at("length_m").get<double>(), c.at("inductance_per_m").get<double>(),
                               c.at("capacitance_per_m").get<double>(), label};
            s.validate();
            return s;
        };
        twline::SupercellSpec sc;
        sc.n_unloaded = n_u;
        sc.n_loaded = n_l;
        sc.n_supercells = n_sc;
        sc.unloaded = cell(j.at("unloaded"), twline::CellLabel::unloaded);
        sc.loaded = n_l > 0 ? cell(j.at("loaded"), twline::CellLabel::loaded) : sc.unloaded;
        sc.validate();
        return sc;
    });
}

twline::PumpSpec parse_pump(const json& j, const twline::SupercellSpec& line) {
    return guarded("pump", [&] {
        twline::PumpSpec p;
        p.mode = twline::mixing_mode_from_string(j.value("mode", std::string("three_wave")));
        p.coupling_per_m = j.value("coupling_per_m", 0.0);
        if (j.contains("freq_hz")) {
            p.freq_hz = j.at("freq_hz").get<double>();
        } else {
            const double f_hi = 4.0 * twline::bragg_frequency(line);
            const auto bands = twline::find_stopbands(line, 1e8, f_hi);
            if (bands.empty()) {
                throw ConfigError("pump: no stopband to place the pump against; set freq_hz");
            }
            p.freq_hz = j.value("below_edge_fraction", 0.98) * bands.front().lower_hz;
        }
        return p;
    });
}

twline::GainOptions parse_gain_options(const json& j) {
    return guarded("gain", [&] {
        twline::GainOptions o;
        o.loss_slope_db_per_ghz = j.value("loss_slope_db_per_ghz", o.loss_slope_db_per_ghz);
        o.ripple_period_hz = j.value("ripple_period_hz", o.ripple_period_hz);
        o.ripple_amplitude_db = j.value("ripple_amplitude_db", o.ripple_amplitude_db);
        o.ripple_phase_rad = j.value("ripple_phase_rad", o.ripple_phase_rad);
        return o;
    });
}

synth::BundleSpec parse_bundle_spec(const json& j, const std::filesystem::path& base_dir) {
    synth::BundleSpec s;
    s.chain = parse_chain(j.at("chain"), base_dir);
    s.qubits = parse_qubits(j.value("qubits", json("reference")));
    return guarded("synth", [&] {
        s.name = j.value("name", s.chain.name);
        s.attenuation_db = j.value("attenuation_db", s.attenuation_db);
        s.s21_points = j.value("s21_points", s.s21_points);
        s.s21_span_linewidths = j.value("s21_span_linewidths", s.s21_span_linewidths);
        s.s21_noise = j.value("s21_noise", s.s21_noise);
        s.stark_below_db = j.value("stark_below_db", s.stark_below_db);
        s.stark_above_db = j.value("stark_above_db", s.stark_above_db);
        s.stark_step_db = j.value("stark_step_db", s.stark_step_db);
        s.stark_noise = j.value("stark_noise", s.stark_noise);
        s.broadening_hz_per_photon = j.value("broadening_hz_per_photon", s.broadening_hz_per_photon);
        s.tone_on_chip_dbm = j.value("tone_on_chip_dbm", s.tone_on_chip_dbm);
        s.tone_offset_hz = j.value("tone_offset_hz", s.tone_offset_hz);
        s.resolution_bw_hz = j.value("resolution_bw_hz", s.resolution_bw_hz);
        s.detuning_hz = j.value("detuning_hz", s.detuning_hz);
        s.sa_span_hz = j.value("sa_span_hz", s.sa_span_hz);
        s.sa_averages = j.value("sa_averages", s.sa_averages);
        s.zero_noise = j.value("zero_noise", s.zero_noise);
        return s;
    });
}

}  // namespace readout::config
