#pragma once

#include <numbers>
#include <stdexcept>
#include <string>

namespace readout {

// CODATA 2018 exact values. Every module reads these; nothing else defines them.
struct PhysicalConstants {
    static constexpr double k_b = 1.380649e-23;      // J/K
    static constexpr double hbar = 1.054571817e-34;  // J s
    static constexpr double eps0 = 8.8541878128e-12; // F/m
};

inline constexpr double two_pi = 2.0 * std::numbers::pi;

// Malformed or inconsistent configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Unreadable or malformed input data (CLI exit code 3).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A fit or a calibration step could not produce a result (CLI exit code 4).
class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace readout

#include <cstdint>

namespace readout {

// Independent, reproducible 64-bit seed for sub-stream `stream` of `base`.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace readout
