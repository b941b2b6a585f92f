#include "readout/rfchain.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "readout/common.hpp"
#include "readout/csv.hpp"

namespace readout::rfchain {

namespace {

void require_finite(double x, const char* what) {
    if (!std::isfinite(x)) {
        throw std::invalid_argument(std::string(what) + ": non-finite input");
    }
}

double photon_energy(double freq_hz) {
    return PhysicalConstants::hbar * two_pi * freq_hz;
}

}  // namespace

double dbm_to_watts(double dbm) {
    require_finite(dbm, "dbm_to_watts");
    return std::pow(10.0, dbm / 10.0) * 1e-3;
}

double watts_to_dbm(double watts) {
    require_finite(watts, "watts_to_dbm");
    if (watts <= 0.0) {
        throw std::invalid_argument("watts_to_dbm: power must be positive");
    }
    return 10.0 * std::log10(watts / 1e-3);
}

double db_to_linear(double db) {
    require_finite(db, "db_to_linear");
    return std::pow(10.0, db / 10.0);
}

double linear_to_db(double ratio) {
    require_finite(ratio, "linear_to_db");
    if (ratio <= 0.0) {
        throw std::invalid_argument("linear_to_db: ratio must be positive");
    }
    return 10.0 * std::log10(ratio);
}

double psd_to_added_quanta(double psd_w_per_hz, double freq_hz) {
    require_finite(psd_w_per_hz, "psd_to_added_quanta");
    require_finite(freq_hz, "psd_to_added_quanta");
    if (freq_hz <= 0.0) {
        throw std::invalid_argument("psd_to_added_quanta: frequency must be positive");
    }
    if (psd_w_per_hz < 0.0) {
        throw std::invalid_argument("psd_to_added_quanta: negative power spectral density");
    }
    const double e = photon_energy(freq_hz);
    return (psd_w_per_hz - 0.5 * e) / e;
}

double noise_temp_to_added_quanta(double noise_temp_k, double freq_hz) {
    return psd_to_added_quanta(PhysicalConstants::k_b * noise_temp_k, freq_hz);
}

double added_quanta_to_noise_temp(double quanta, double freq_hz) {
    if (freq_hz <= 0.0) {
        throw std::invalid_argument("added_quanta_to_noise_temp: frequency must be positive");
    }
    return (quanta + 0.5) * photon_energy(freq_hz) / PhysicalConstants::k_b;
}

GainCurve::GainCurve(double constant_db) : points_{{0.0, constant_db}} {
    require_finite(constant_db, "GainCurve");
}

GainCurve::GainCurve(std::vector<std::pair<double, double>> points_hz_db)
    : points_(std::move(points_hz_db)) {
    if (points_.empty()) {
        throw std::invalid_argument("GainCurve: no points");
    }
    for (const auto& [f, g] : points_) {
        require_finite(f, "GainCurve frequency");
        require_finite(g, "GainCurve gain");
    }
    std::sort(points_.begin(), points_.end());
    for (std::size_t i = 1; i < points_.size(); ++i) {
        if (points_[i].first == points_[i - 1].first) {
            throw std::invalid_argument("GainCurve: duplicate frequency");
        }
    }
}

double GainCurve::at(double freq_hz) const {
    if (points_.size() == 1) {
        return points_.front().second;
    }
    if (freq_hz < points_.front().first || freq_hz > points_.back().first) {
        throw std::out_of_range("GainCurve: frequency outside tabulated range");
    }
    auto hi = std::lower_bound(points_.begin(), points_.end(), freq_hz,
                               [](const auto& p, double f) { return p.first < f; });
    if (hi->first == freq_hz) {
        return hi->second;
    }
    auto lo = hi - 1;
    const double t = (freq_hz - lo->first) / (hi->first - lo->first);
    return lo->second + t * (hi->second - lo->second);
}

bool GainCurve::covers(double f_lo, double f_hi) const {
    return points_.size() == 1 || (f_lo >= points_.front().first && f_hi <= points_.back().first);
}

double GainCurve::max_db() const {
    double m = points_.front().second;
    for (const auto& p : points_) {
        m = std::max(m, p.second);
    }
    return m;
}

GainCurve GainCurve::from_csv(const std::filesystem::path& path, const std::string& gain_column) {
    const auto table = csv::read(path);
    std::size_t fcol = 0;
    std::size_t gcol = 1;
    if (!gain_column.empty()) {
        fcol = table.column("frequency_Hz");
        gcol = table.column(gain_column);
    } else if (table.header.size() != 2) {
        throw DataError(path.string() + ": expected two columns (frequency_Hz, gain_dB)");
    }
    std::vector<std::pair<double, double>> pts;
    for (const auto& r : table.rows) {
        pts.emplace_back(r[fcol], r[gcol]);
    }
    if (pts.empty()) {
        throw DataError(path.string() + ": no gain samples");
    }
    try {
        return GainCurve(std::move(pts));
    } catch (const std::invalid_argument& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

std::string to_string(ComponentKind kind) {
    switch (kind) {
        case ComponentKind::amplifier: return "amplifier";
        case ComponentKind::attenuator: return "attenuator";
        case ComponentKind::passive: return "passive";
    }
    return "passive";
}

ComponentKind component_kind_from_string(const std::string& name) {
    if (name == "amplifier") return ComponentKind::amplifier;
    if (name == "attenuator") return ComponentKind::attenuator;
    if (name == "passive") return ComponentKind::passive;
    throw std::invalid_argument("unknown component kind '" + name + "'");
}

double ChainComponent::effective_noise_temp(double gain_linear) const {
    if (kind == ComponentKind::amplifier) {
        return noise_temp_k;
    }
    return (1.0 / gain_linear - 1.0) * physical_temp_k;
}

void ChainSpec::validate() const {
    if (components.empty()) {
        throw std::invalid_argument("chain '" + name + "': no components");
    }
    if (reference_plane >= components.size()) {
        throw std::invalid_argument("chain '" + name + "': reference plane out of range");
    }
    if (!(band.f_min_hz > 0.0) || !(band.f_max_hz >= band.f_min_hz)) {
        throw std::invalid_argument("chain '" + name + "': invalid band");
    }
    bool has_amplifier = false;
    for (const auto& c : components) {
        const std::string where = "chain '" + name + "' component '" + c.name + "': ";
        if (!c.gain_db.covers(band.f_min_hz, band.f_max_hz)) {
            throw std::invalid_argument(where + "gain curve does not cover the band");
        }
        if (c.gain_sigma_db < 0.0 || c.temp_sigma_k < 0.0) {
            throw std::invalid_argument(where + "negative uncertainty");
        }
        if (c.kind == ComponentKind::amplifier) {
            has_amplifier = true;
            if (!(c.noise_temp_k >= 0.0)) {
                throw std::invalid_argument(where + "negative noise temperature");
            }
        } else {
            if (!(c.physical_temp_k >= 0.0)) {
                throw std::invalid_argument(where + "negative physical temperature");
            }
            for (const auto& [f, g] : c.gain_db.points()) {
                if (g > 0.0) {
                    throw std::invalid_argument(where + "lossy stage with positive gain");
                }
            }
        }
    }
    if (!has_amplifier) {
        throw std::invalid_argument("chain '" + name + "': no amplifier");
    }
}

SystemNoiseResult cascade(const ChainSpec& chain, double freq_hz) {
    chain.validate();
    if (!chain.band.contains(freq_hz)) {
        throw std::out_of_range("cascade: frequency outside chain band");
    }
    const auto first = chain.components.begin() + static_cast<std::ptrdiff_t>(chain.reference_plane);
    const std::vector<ChainComponent> stages(first, chain.components.end());
    const std::size_t n = stages.size();

    std::vector<double> gains(n);
    std::vector<double> temps(n);  // noise or physical temperature, per kind
    for (std::size_t i = 0; i < n; ++i) {
        gains[i] = db_to_linear(stages[i].gain_db.at(freq_hz));
        temps[i] = stages[i].kind == ComponentKind::amplifier ? stages[i].noise_temp_k
                                                              : stages[i].physical_temp_k;
    }

    auto friis = [&](const std::vector<double>& g, const std::vector<double>& t) {
        double total = 0.0;
        double upstream_gain = 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double te = stages[i].kind == ComponentKind::amplifier
                                  ? t[i]
                                  : (1.0 / g[i] - 1.0) * t[i];
            total += te / upstream_gain;
            upstream_gain *= g[i];
        }
        return total;
    };

    SystemNoiseResult r;
    r.freq_hz = freq_hz;
    double g_sys = 1.0;
    for (double g : gains) {
        g_sys *= g;
    }
    r.gain_db = linear_to_db(g_sys);
    r.noise_temp_k = friis(gains, temps);
    r.added_quanta = noise_temp_to_added_quanta(r.noise_temp_k, freq_hz);

    // First-order propagation in linear units.
    double var_t = 0.0;
    double rel_var_g = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double sigma_g = gains[i] * std::log(10.0) / 10.0 * stages[i].gain_sigma_db;
        if (sigma_g > 0.0) {
            const double h = gains[i] * 1e-6;
            auto up = gains;
            auto dn = gains;
            up[i] += h;
            dn[i] -= h;
            const double d = (friis(up, temps) - friis(dn, temps)) / (2.0 * h);
            var_t += d * d * sigma_g * sigma_g;
            rel_var_g += (sigma_g / gains[i]) * (sigma_g / gains[i]);
        }
        if (stages[i].temp_sigma_k > 0.0) {
            const double h = std::max(std::abs(temps[i]), 1.0) * 1e-6;
            auto up = temps;
            auto dn = temps;
            up[i] += h;
            dn[i] -= h;
            const double d = (friis(gains, up) - friis(gains, dn)) / (2.0 * h);
            var_t += d * d * stages[i].temp_sigma_k * stages[i].temp_sigma_k;
        }
    }
    r.sigma.noise_temp_k = std::sqrt(var_t);
    r.sigma.gain_db = 10.0 / std::log(10.0) * std::sqrt(rel_var_g);
    r.sigma.added_quanta =
        PhysicalConstants::k_b * r.sigma.noise_temp_k / (PhysicalConstants::hbar * two_pi * freq_hz);
    return r;
}

std::vector<ChainComparisonRow> compare_chains(const ChainSpec& a, const ChainSpec& b,
                                               std::span<const double> freqs_hz) {
    if (freqs_hz.empty()) {
        throw std::invalid_argument("compare_chains: empty frequency list");
    }
    std::vector<ChainComparisonRow> rows;
    rows.reserve(freqs_hz.size());
    for (double f : freqs_hz) {
        ChainComparisonRow row;
        row.freq_hz = f;
        row.a = cascade(a, f);
        row.b = cascade(b, f);
        row.sqrt_noise_temp_ratio = std::sqrt(row.a.noise_temp_k / row.b.noise_temp_k);
        rows.push_back(row);
    }
    return rows;
}

}  // namespace readout::rfchain
