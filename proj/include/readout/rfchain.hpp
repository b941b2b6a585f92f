#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace readout::rfchain {

double dbm_to_watts(double dbm);
double watts_to_dbm(double watts);
double db_to_linear(double db);
double linear_to_db(double ratio);

// Added noise in quanta from an input-referred power spectral density:
// (psd - hbar*w/2) / (hbar*w), w = 2*pi*f.
double psd_to_added_quanta(double psd_w_per_hz, double freq_hz);
double noise_temp_to_added_quanta(double noise_temp_k, double freq_hz);
double added_quanta_to_noise_temp(double quanta, double freq_hz);

// Gain in dB as a piecewise-linear function of frequency. A single point is
// a frequency-independent gain.
class GainCurve {
public:
    GainCurve() : GainCurve(0.0) {}
    explicit GainCurve(double constant_db);
    explicit GainCurve(std::vector<std::pair<double, double>> points_hz_db);

    // Throws std::out_of_range outside the tabulated range.
    double at(double freq_hz) const;
    bool covers(double f_lo, double f_hi) const;
    bool is_constant() const { return points_.size() == 1; }
    double max_db() const;
    std::span<const std::pair<double, double>> points() const { return points_; }

    // Two-column (frequency_Hz, gain_dB) CSV, or a wider CSV from which the
    // named column is taken.
    static GainCurve from_csv(const std::filesystem::path& path,
                              const std::string& gain_column = "");

private:
    std::vector<std::pair<double, double>> points_;
};

enum class ComponentKind { amplifier, attenuator, passive };

std::string to_string(ComponentKind kind);
ComponentKind component_kind_from_string(const std::string& name);

struct ChainComponent {
    std::string name;
    ComponentKind kind = ComponentKind::passive;
    GainCurve gain_db;
    double noise_temp_k = 0.0;     // amplifiers, input referred
    double physical_temp_k = 0.0;  // attenuators and passives
    double gain_sigma_db = 0.0;
    double temp_sigma_k = 0.0;

    // Input-referred effective noise temperature at the given linear gain.
    double effective_noise_temp(double gain_linear) const;
};

struct Band {
    double f_min_hz = 0.0;
    double f_max_hz = 0.0;
    bool contains(double f) const { return f >= f_min_hz && f <= f_max_hz; }
};

struct ChainSpec {
    std::string name;
    std::vector<ChainComponent> components;
    std::size_t reference_plane = 0;  // 0 = on-chip cavity port
    Band band;

    // Throws std::invalid_argument describing the first violated invariant.
    void validate() const;
};

struct SystemNoiseResult {
    double freq_hz = 0.0;
    double gain_db = 0.0;
    double noise_temp_k = 0.0;
    double added_quanta = 0.0;
    struct {
        double gain_db = 0.0;
        double noise_temp_k = 0.0;
        double added_quanta = 0.0;
    } sigma;
};

// Friis cascade from the reference plane to the output.
SystemNoiseResult cascade(const ChainSpec& chain, double freq_hz);

struct ChainComparisonRow {
    double freq_hz = 0.0;
    SystemNoiseResult a;
    SystemNoiseResult b;
    double sqrt_noise_temp_ratio = 0.0;  // sqrt(T_N,a / T_N,b)
};

std::vector<ChainComparisonRow> compare_chains(const ChainSpec& a, const ChainSpec& b,
                                               std::span<const double> freqs_hz);

}  // namespace readout::rfchain
