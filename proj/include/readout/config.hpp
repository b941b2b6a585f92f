#pragma once

#include <filesystem>
#include <vector>

#include <nlohmann/json.hpp>

#include "readout/cqed.hpp"
#include "readout/rfchain.hpp"
#include "readout/synth.hpp"
#include "readout/twline.hpp"

// JSON configuration readers. Every schema problem surfaces as ConfigError
// naming the offending key.
namespace readout::config {

using nlohmann::json;

json load(const std::filesystem::path& path);

// Relative CSV paths inside a chain are resolved against base_dir.
rfchain::ChainSpec parse_chain(const json& j, const std::filesystem::path& base_dir);

// "reference" or an array of per-qubit objects.
std::vector<cqed::CavityQubitParams> parse_qubits(const json& j);

// Either an explicit array or {"start", "stop", "points"}.
std::vector<double> parse_freqs(const json& j);

twline::SupercellSpec parse_line(const json& j);
// A missing "freq_hz" places the pump 2% below the first stopband.
twline::PumpSpec parse_pump(const json& j, const twline::SupercellSpec& line);
twline::GainOptions parse_gain_options(const json& j);

synth::BundleSpec parse_bundle_spec(const json& j, const std::filesystem::path& base_dir);

}  // namespace readout::config
