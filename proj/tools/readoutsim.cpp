// readoutsim: synthesize calibration bundles, run calibrations, model chains,
// travelling-wave lines and readout shots.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include "readout/common.hpp"
#include "readout/config.hpp"
#include "readout/csv.hpp"
#include "readout/pipeline.hpp"
#include "readout/report.hpp"
#include "readout/rfchain.hpp"
#include "readout/shots.hpp"
#include "readout/synth.hpp"
#include "readout/twline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace readout;

namespace {

enum Exit { ok = 0, config_error = 2, data_error = 3, fit_error = 4 };

struct Options {
    fs::path config;
    std::optional<std::uint64_t> seed;
    fs::path out;
    std::string format = "json";
    std::vector<fs::path> bundles;
    std::vector<fs::path> reports;
};

struct Context {
    json config = json::object();
    fs::path base_dir = ".";
    std::uint64_t seed = 1;
};

Context resolve(const Options& opt) {
    Context ctx;
    if (!opt.config.empty()) {
        ctx.config = config::load(opt.config);
        ctx.base_dir = opt.config.parent_path();
        if (!ctx.config.is_object()) throw ConfigError(opt.config.string() + ": top level must be an object");
    }
    if (opt.seed) {
        ctx.seed = *opt.seed;
    } else if (ctx.config.contains("seed")) {
        ctx.seed = ctx.config.at("seed").get<std::uint64_t>();
    }
    ctx.config["seed"] = ctx.seed;
    return ctx;
}

const json& section(const Context& ctx, const char* key) {
    static const json empty = json::object();
    auto it = ctx.config.find(key);
    return it == ctx.config.end() ? empty : *it;
}

const json& require(const Context& ctx, const char* key) {
    auto it = ctx.config.find(key);
    if (it == ctx.config.end()) throw ConfigError(std::string("config: missing '") + key + "'");
    return *it;
}

json header(const char* command, const Context& ctx) {
    return {{"command", command}, {"seed", ctx.seed}, {"config", ctx.config}};
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError(path.string() + ": cannot write");
    out << text;
}

void emit(const Options& opt, const json& report, const std::string& file) {
    const std::string text = report.dump(2) + "\n";
    if (opt.out.empty()) {
        std::cout << text;
        return;
    }
    fs::create_directories(opt.out);
    write_text(opt.out / file, text);
}

fs::path csv_dir(const Options& opt) {
    if (opt.out.empty()) throw ConfigError("--format csv needs --out");
    fs::create_directories(opt.out);
    return opt.out;
}

std::vector<rfchain::ChainSpec> chains_from(const Context& ctx) {
    std::vector<rfchain::ChainSpec> chains;
    if (ctx.config.contains("chains")) {
        for (const auto& c : ctx.config.at("chains")) chains.push_back(config::parse_chain(c, ctx.base_dir));
    } else {
        chains.push_back(config::parse_chain(require(ctx, "chain"), ctx.base_dir));
    }
    if (chains.empty()) throw ConfigError("config: no chains given");
    return chains;
}

// --- synth -----------------------------------------------------------------

int cmd_synth(const Options& opt) {
    const auto ctx = resolve(opt);
    if (opt.out.empty()) throw ConfigError("synth: --out is required");
    const json& block = ctx.config.contains("synth") ? ctx.config.at("synth") : ctx.config;
    auto spec = config::parse_bundle_spec(block, ctx.base_dir);
    spec.seed = ctx.seed;
    const auto truth = synth::write_bundle(spec, opt.out, ctx.config);
    std::cout << "wrote " << truth.size() << " qubits to " << opt.out.string() << "\n";
    return ok;
}

// --- calibrate -------------------------------------------------------------

json noise_row(const calfit::QubitReport& q) {
    json r = {{"id", q.id}, {"ok", q.ok()}};
    if (!q.ok()) return r;
    r["f_res_hz"] = q.chi->state0.f_res_hz;
    r["q_c"] = q.chi->state0.q_c;
    r["chi_hz"] = q.chi->chi_hz;
    r["chi_sigma_hz"] = q.chi->sigma_hz;
    r["attenuation_db"] = q.stark->attenuation_db;
    r["attenuation_sigma_db"] = q.stark->uncertainty_db;
    r["system_gain_db"] = q.gain->gain_db;
    r["added_quanta"] = q.noise->added_quanta;
    r["added_quanta_sigma"] = q.noise->sigma;
    r["noise_temp_k"] = q.noise->noise_temp_k;
    r["under_vacuum"] = q.noise->under_vacuum;
    return r;
}

void write_noise_csv(const calfit::PipelineReport& rep, const fs::path& path) {
    csv::Writer w({"id", "f_res_Hz", "chi_Hz", "attenuation_dB", "system_gain_dB", "added_quanta",
                   "added_quanta_sigma", "noise_temp_K"});
    w.meta("bundle", rep.bundle_name);
    for (const auto& q : rep.qubits) {
        if (!q.ok()) continue;
        w.row({static_cast<double>(q.id), q.chi->state0.f_res_hz, q.chi->chi_hz, q.stark->attenuation_db,
               q.gain->gain_db, q.noise->added_quanta, q.noise->sigma, q.noise->noise_temp_k});
    }
    w.save(path);
}

void write_paired_csv(const std::vector<calfit::PairedNoiseRow>& rows, const fs::path& path) {
    csv::Writer w({"id", "frequency_Hz", "added_quanta_a", "added_quanta_b", "noise_temp_a_K",
                   "noise_temp_b_K", "sqrt_noise_temp_ratio"});
    for (const auto& r : rows) {
        w.row({static_cast<double>(r.id), r.freq_hz, r.added_quanta_a, r.added_quanta_b, r.noise_temp_a_k,
               r.noise_temp_b_k, r.sqrt_noise_temp_ratio});
    }
    w.save(path);
}

int cmd_calibrate(const Options& opt) {
    auto ctx = resolve(opt);
    if (opt.bundles.empty() || opt.bundles.size() > 2) {
        throw ConfigError("calibrate: give one or two --bundle directories");
    }
    const json& c = section(ctx, "calibrate");
    calfit::PipelineOptions po;
    try {
        po.power_model = cqed::power_model_from_string(c.value("power_model", std::string("coupling_limited")));
        po.resamples = c.value("resamples", po.resamples);
        po.noise_window_hz = c.value("noise_window_hz", po.noise_window_hz);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("calibrate: ") + e.what());
    }
    po.seed = ctx.seed;

    json report = header("calibrate", ctx);
    report["bundles"] = json::array();
    std::vector<calfit::PipelineReport> results;
    for (const auto& dir : opt.bundles) {
        const auto bundle = calfit::load_bundle(dir);
        results.push_back(calfit::run_pipeline(bundle, po));
        json b = report::to_json(results.back());
        json table = json::array();
        for (const auto& q : results.back().qubits) table.push_back(noise_row(q));
        b["noise_table"] = std::move(table);
        report["bundles"].push_back(std::move(b));
    }
    std::vector<calfit::PairedNoiseRow> paired;
    if (results.size() == 2) {
        paired = calfit::pair_reports(results[0], results[1]);
        json rows = json::array();
        for (const auto& r : paired) rows.push_back(report::to_json(r));
        report["compare"] = {{"a", results[0].bundle_name}, {"b", results[1].bundle_name}, {"rows", rows}};
    }

    if (opt.format == "csv") {
        const auto dir = csv_dir(opt);
        for (std::size_t i = 0; i < results.size(); ++i) {
            write_noise_csv(results[i], dir / ("noise_table_" + std::to_string(i) + ".csv"));
        }
        if (results.size() == 2) write_paired_csv(paired, dir / "compare.csv");
    }
    emit(opt, report, "calibrate.json");

    int code = ok;
    for (const auto& r : results) {
        for (const auto& q : r.qubits) {
            if (q.ok()) continue;
            std::cerr << r.bundle_name << " qubit " << q.id << " failed at " << q.failed_stage << ": " << q.error
                      << "\n";
            const int c2 = q.failure == calfit::FailureKind::fit ? fit_error : data_error;
            code = std::max(code, c2);
        }
        for (const auto& q : r.qubits) {
            if (q.ok() && q.noise->under_vacuum) {
                std::cerr << "warning: " << r.bundle_name << " qubit " << q.id
                          << " added noise below the vacuum floor; check the calibration\n";
            }
        }
    }
    return code;
}

// --- compare ---------------------------------------------------------------

// Pairs the first bundle of two calibrate reports by qubit id.
int cmd_compare(const Options& opt) {
    auto ctx = resolve(opt);
    if (opt.reports.size() != 2) throw ConfigError("compare: give exactly two --report files");
    std::vector<json> tables;
    std::vector<std::string> names;
    for (const auto& path : opt.reports) {
        const json r = config::load(path);
        try {
            const auto& b = r.at("bundles").at(0);
            names.push_back(b.at("bundle").get<std::string>());
            tables.push_back(b.at("noise_table"));
        } catch (const json::exception& e) {
            throw DataError(path.string() + ": not a calibrate report: " + e.what());
        }
    }
    std::map<int, json> by_id;
    for (const auto& row : tables[1]) {
        if (row.value("ok", false)) by_id[row.at("id").get<int>()] = row;
    }
    std::vector<calfit::PairedNoiseRow> rows;
    for (const auto& ra : tables[0]) {
        if (!ra.value("ok", false)) continue;
        auto it = by_id.find(ra.at("id").get<int>());
        if (it == by_id.end()) continue;
        calfit::PairedNoiseRow p;
        p.id = ra.at("id").get<int>();
        p.freq_hz = ra.at("f_res_hz").get<double>();
        p.added_quanta_a = ra.at("added_quanta").get<double>();
        p.added_quanta_b = it->second.at("added_quanta").get<double>();
        p.noise_temp_a_k = ra.at("noise_temp_k").get<double>();
        p.noise_temp_b_k = it->second.at("noise_temp_k").get<double>();
        p.sqrt_noise_temp_ratio = std::sqrt(p.noise_temp_a_k / p.noise_temp_b_k);
        rows.push_back(p);
    }
    json report = header("compare", ctx);
    report["reports"] = {opt.reports[0].string(), opt.reports[1].string()};
    json out = json::array();
    for (const auto& r : rows) out.push_back(report::to_json(r));
    report["compare"] = {{"a", names[0]}, {"b", names[1]}, {"rows", out}};
    if (opt.format == "csv") write_paired_csv(rows, csv_dir(opt) / "compare.csv");
    emit(opt, report, "compare.json");
    return ok;
}

// --- chain -----------------------------------------------------------------

std::vector<double> chain_freqs(const Context& ctx) {
    if (ctx.config.contains("frequencies")) return config::parse_freqs(ctx.config.at("frequencies"));
    std::vector<double> f;
    for (const auto& q : config::parse_qubits(ctx.config.value("qubits", json("reference")))) {
        f.push_back(q.f_res_hz);
    }
    return f;
}

int cmd_chain(const Options& opt) {
    auto ctx = resolve(opt);
    const auto chains = chains_from(ctx);
    const auto freqs = chain_freqs(ctx);

    json report = header("chain", ctx);
    report["chains"] = json::array();
    for (const auto& chain : chains) {
        json rows = json::array();
        csv::Writer w({"frequency_Hz", "gain_dB", "noise_temp_K", "added_quanta", "gain_sigma_dB",
                       "noise_temp_sigma_K", "added_quanta_sigma"});
        w.meta("chain", chain.name);
        for (double f : freqs) {
            const auto r = rfchain::cascade(chain, f);
            rows.push_back(report::to_json(r));
            w.row({r.freq_hz, r.gain_db, r.noise_temp_k, r.added_quanta, r.sigma.gain_db, r.sigma.noise_temp_k,
                   r.sigma.added_quanta});
        }
        report["chains"].push_back({{"name", chain.name}, {"rows", std::move(rows)}});
        if (opt.format == "csv") w.save(csv_dir(opt) / ("chain_" + chain.name + ".csv"));
    }
    if (chains.size() >= 2) {
        const auto cmp = rfchain::compare_chains(chains[0], chains[1], freqs);
        json rows = json::array();
        csv::Writer w({"frequency_Hz", "added_quanta_a", "added_quanta_b", "sqrt_noise_temp_ratio"});
        for (const auto& r : cmp) {
            rows.push_back(report::to_json(r));
            w.row({r.freq_hz, r.a.added_quanta, r.b.added_quanta, r.sqrt_noise_temp_ratio});
        }
        report["compare"] = {{"a", chains[0].name}, {"b", chains[1].name}, {"rows", std::move(rows)}};
        if (opt.format == "csv") w.save(csv_dir(opt) / "compare.csv");
    }
    emit(opt, report, "chain.json");
    return ok;
}

// --- twline ----------------------------------------------------------------

int cmd_twline(const Options& opt) {
    auto ctx = resolve(opt);
    const auto line = config::parse_line(section(ctx, "line"));
    const double bragg = twline::bragg_frequency(line);
    std::vector<double> disp_f;
    if (ctx.config.contains("dispersion")) {
        disp_f = config::parse_freqs(ctx.config.at("dispersion"));
    } else {
        for (int i = 1; i <= 2000; ++i) disp_f.push_back(2.0 * bragg * i / 2000.0);
    }
    const auto stopbands = twline::find_stopbands(line, disp_f.front(), disp_f.back());

    json report = header("twline", ctx);
    report["line"] = {{"period_m", line.period_m()},
                      {"total_cells", line.total_cells()},
                      {"total_length_m", line.total_length_m()},
                      {"unloaded_impedance_ohm", twline::cell_impedance(line.unloaded)},
                      {"loaded_impedance_ohm", twline::cell_impedance(line.loaded)},
                      {"bragg_estimate_hz", bragg}};
    report["stopbands"] = json::array();
    for (const auto& s : stopbands) report["stopbands"].push_back(report::to_json(s));

    csv::Writer dw({"frequency_Hz", "k_rad_per_m", "attenuation_Np_per_m", "half_trace", "stopband"});
    json disp = json::array();
    for (double f : disp_f) {
        const auto b = twline::bloch_dispersion(line, f);
        dw.row({f, b.k_rad_per_m, b.attenuation_np_per_m, b.half_trace, b.in_stopband ? 1.0 : 0.0});
        disp.push_back({{"freq_hz", f}, {"k_rad_per_m", b.k_rad_per_m},
                        {"attenuation_np_per_m", b.attenuation_np_per_m}, {"in_stopband", b.in_stopband}});
    }

    std::optional<twline::GainProfile> gain;
    if (ctx.config.contains("pump")) {
        const auto pump = config::parse_pump(ctx.config.at("pump"), line);
        const auto opts = config::parse_gain_options(section(ctx, "gain"));
        const auto freqs = config::parse_freqs(require(ctx, "frequencies"));
        try {
            gain = twline::gain_profile(line, pump, freqs, opts);
        } catch (const std::domain_error& e) {
            throw ConfigError(std::string("twline: ") + e.what());
        }
        report["pump"] = {{"freq_hz", pump.freq_hz},
                          {"coupling_per_m", pump.coupling_per_m},
                          {"mode", twline::to_string(pump.mode)}};
        double peak = -INFINITY;
        for (double g : gain->on_off_db) peak = std::max(peak, g);
        report["gain_summary"] = {{"peak_on_off_db", peak},
                                  {"ripple_period_hz", gain->ripple_period_hz},
                                  {"ripple_amplitude_db", gain->ripple_amplitude_db}};
    }

    if (opt.format == "csv") {
        const auto dir = csv_dir(opt);
        dw.save(dir / "dispersion.csv");
        if (gain) {
            csv::Writer gw({"frequency_Hz", "on_off_dB", "loss_dB", "net_dB"});
            for (std::size_t i = 0; i < gain->freqs_hz.size(); ++i) {
                gw.row({gain->freqs_hz[i], gain->on_off_db[i], gain->insertion_loss_db[i], gain->net_db[i]});
            }
            gw.save(dir / "gain.csv");
        }
    } else {
        report["dispersion"] = std::move(disp);
        if (gain) {
            report["gain"] = {{"freqs_hz", gain->freqs_hz},
                              {"on_off_db", gain->on_off_db},
                              {"loss_db", gain->insertion_loss_db},
                              {"net_db", gain->net_db}};
        }
    }
    emit(opt, report, "twline.json");
    return ok;
}

// --- shots -----------------------------------------------------------------

struct NoiseSetting {
    std::string name;
    rfchain::SystemNoiseResult system;
};

int cmd_shots(const Options& opt) {
    auto ctx = resolve(opt);
    const json& s = section(ctx, "shots");
    const auto qubits = config::parse_qubits(ctx.config.value("qubits", json("reference")));
    const int qubit_id = s.value("qubit", qubits.front().id);
    const cqed::CavityQubitParams* params = nullptr;
    for (const auto& q : qubits) {
        if (q.id == qubit_id) params = &q;
    }
    if (!params) throw ConfigError("shots: qubit " + std::to_string(qubit_id) + " not in the qubit table");

    const std::size_t n = s.value("n", std::size_t{100000});
    const double tau = s.value("integration_time_s", 1e-6);
    shots::ShotOptions so;
    so.readout_freq_hz = s.value("readout_freq_hz", 0.0);
    so.relaxation_prob = s.value("relaxation_prob", 0.0);
    so.photon_flux_hz = s.value("photon_flux_hz", so.photon_flux_hz);
    const auto rule = s.value("threshold", std::string("midpoint")) == "max_likelihood"
                          ? shots::ThresholdRule::max_likelihood
                          : shots::ThresholdRule::midpoint;
    const int bins = s.value("bins", 100);
    const double f_eval = so.readout_freq_hz > 0.0 ? so.readout_freq_hz : params->f_res_hz - params->chi_hz;

    std::vector<NoiseSetting> settings;
    for (const auto& chain : chains_from(ctx)) {
        settings.push_back({chain.name, rfchain::cascade(chain, f_eval)});
    }
    if (s.contains("target_snr")) {
        so.photon_flux_hz = shots::flux_for_snr(*params, settings.front().system.added_quanta, tau,
                                                s.at("target_snr").get<double>(), so.readout_freq_hz);
    }

    json report = header("shots", ctx);
    report["qubit"] = qubit_id;
    report["readout_freq_hz"] = f_eval;
    report["photon_flux_hz"] = so.photon_flux_hz;
    report["settings"] = json::array();
    std::vector<shots::ReadoutStats> stats;
    for (std::size_t k = 0; k < settings.size(); ++k) {
        auto o = so;
        o.seed = derive_seed(ctx.seed, k);
        const auto e = shots::simulate_shots(*params, settings[k].system, n, tau, o);
        const auto st = shots::fidelity(e, rule);
        stats.push_back(st);
        report["settings"].push_back({{"name", settings[k].name},
                                      {"system", report::to_json(settings[k].system)},
                                      {"expected_snr", shots::expected_snr(*params, settings[k].system.added_quanta,
                                                                           tau, o)},
                                      {"analytic_fidelity", shots::analytic_fidelity(st.snr)},
                                      {"stats", report::to_json(st)}});
        if (opt.format == "csv") {
            const auto dir = csv_dir(opt);
            shots::write_ensemble_csv(e, dir / ("shots_" + settings[k].name + ".csv"));
            shots::write_histogram_csv(shots::histogram(e, st, bins), dir / ("histogram_" + settings[k].name + ".csv"));
        }
    }
    if (settings.size() >= 2) {
        report["compare"] = {{"a", settings[0].name},
                             {"b", settings[1].name},
                             {"snr_ratio_b_over_a", stats[1].snr / stats[0].snr},
                             {"sqrt_noise_temp_ratio_a_over_b",
                              std::sqrt(settings[0].system.noise_temp_k / settings[1].system.noise_temp_k)},
                             {"fidelity_a", stats[0].fidelity},
                             {"fidelity_b", stats[1].fidelity}};
    }
    emit(opt, report, "shots.json");
    return ok;
}

void add_common(CLI::App* sub, Options& opt, bool needs_config) {
    auto* c = sub->add_option("--config", opt.config, "JSON config file");
    if (needs_config) c->required();
    sub->add_option("--seed", opt.seed, "RNG seed; overrides the config");
    sub->add_option("--out", opt.out, "output directory");
    sub->add_option("--format", opt.format, "report format")->check(CLI::IsMember({"json", "csv"}));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Readout chain calibration and simulation"};
    app.require_subcommand(1);
    Options opt;

    auto* synth = app.add_subcommand("synth", "write a synthetic calibration bundle");
    add_common(synth, opt, true);
    auto* calibrate = app.add_subcommand("calibrate", "calibrate one bundle, or compare two");
    add_common(calibrate, opt, false);
    calibrate->add_option("--bundle", opt.bundles, "bundle directory (repeat for a comparison)")->required();
    auto* chain = app.add_subcommand("chain", "cascade gain and noise of amplifier chains");
    add_common(chain, opt, true);
    auto* twline = app.add_subcommand("twline", "dispersion and gain of a loaded line");
    add_common(twline, opt, true);
    auto* shots = app.add_subcommand("shots", "simulate single-shot readout");
    add_common(shots, opt, true);
    auto* compare = app.add_subcommand("compare", "pair two calibrate reports by qubit");
    add_common(compare, opt, false);
    compare->add_option("--report", opt.reports, "calibrate report (give two)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : config_error;
    }

    try {
        if (*synth) return cmd_synth(opt);
        if (*calibrate) return cmd_calibrate(opt);
        if (*chain) return cmd_chain(opt);
        if (*twline) return cmd_twline(opt);
        if (*shots) return cmd_shots(opt);
        if (*compare) return cmd_compare(opt);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return config_error;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return data_error;
    } catch (const FitError& e) {
        std::cerr << "fit failure: " << e.what() << "\n";
        return fit_error;
    } catch (const json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return config_error;
    } catch (const std::logic_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return config_error;
    } catch (const std::exception& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return data_error;
    }
    return config_error;
}
