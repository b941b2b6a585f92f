#include "readout/shots.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <future>
#include <random>
#include <stdexcept>
#include <thread>

#include "readout/common.hpp"
#include "readout/csv.hpp"

namespace readout::shots {

namespace {

double resolve_readout_freq(const cqed::CavityQubitParams& p, double requested) {
    return requested > 0.0 ? requested : p.f_res_hz - p.chi_hz;
}

struct Moments {
    double mean = 0.0;
    double sd = 0.0;
    std::size_t n = 0;
};

Moments moments(const std::vector<double>& v) {
    Moments m;
    m.n = v.size();
    if (m.n < 2) return m;
    double sum = 0.0;
    for (double x : v) sum += x;
    m.mean = sum / static_cast<double>(m.n);
    double ss = 0.0;
    for (double x : v) ss += (x - m.mean) * (x - m.mean);
    m.sd = std::sqrt(ss / static_cast<double>(m.n - 1));
    return m;
}

std::vector<double> rotated_i(const ShotEnsemble& e, double angle) {
    const std::complex<double> rot = std::polar(1.0, -angle);
    std::vector<double> out;
    out.reserve(e.shots.size());
    for (const auto& s : e.shots) {
        out.push_back((std::complex<double>(s.i, s.q) * rot).real());
    }
    return out;
}

void classify(const ShotEnsemble& e, const std::vector<double>& i_rot, ReadoutStats& st) {
    std::size_t wrong0 = 0;
    std::size_t wrong1 = 0;
    for (std::size_t k = 0; k < e.shots.size(); ++k) {
        const int assigned = i_rot[k] > st.threshold ? 1 : 0;
        if (e.shots[k].prepared_state == 0 && assigned == 1) ++wrong0;
        if (e.shots[k].prepared_state == 1 && assigned == 0) ++wrong1;
    }
    st.p10 = static_cast<double>(wrong0) / static_cast<double>(st.n0);
    st.p01 = static_cast<double>(wrong1) / static_cast<double>(st.n1);
    st.fidelity = 1.0 - 0.5 * (st.p01 + st.p10);
}

// Equal-prior crossing of two Gaussians, preferring the root between the means.
double max_likelihood_threshold(const ReadoutStats& st) {
    const double s0 = st.sigma0;
    const double s1 = st.sigma1;
    const double a = 1.0 / (2.0 * s1 * s1) - 1.0 / (2.0 * s0 * s0);
    const double b = -st.i1 / (s1 * s1) + st.i0 / (s0 * s0);
    const double c = st.i1 * st.i1 / (2.0 * s1 * s1) - st.i0 * st.i0 / (2.0 * s0 * s0) + std::log(s1 / s0);
    const double mid = 0.5 * (st.i0 + st.i1);
    if (std::abs(a) < 1e-12 * std::abs(b) || a == 0.0) {
        return b != 0.0 ? -c / b : mid;
    }
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) {
        return mid;
    }
    const double r1 = (-b + std::sqrt(disc)) / (2.0 * a);
    const double r2 = (-b - std::sqrt(disc)) / (2.0 * a);
    const double lo = std::min(st.i0, st.i1);
    const double hi = std::max(st.i0, st.i1);
    const bool in1 = r1 >= lo && r1 <= hi;
    const bool in2 = r2 >= lo && r2 <= hi;
    if (in1 && !in2) return r1;
    if (in2 && !in1) return r2;
    return std::abs(r1 - mid) < std::abs(r2 - mid) ? r1 : r2;
}

}  // namespace

void ShotEnsemble::validate() const {
    bool has0 = false;
    bool has1 = false;
    for (const auto& s : shots) {
        if (s.prepared_state == 0) has0 = true;
        else if (s.prepared_state == 1) has1 = true;
        else throw std::invalid_argument("ShotEnsemble: prepared state must be 0 or 1");
    }
    if (!has0 || !has1) {
        throw std::invalid_argument("ShotEnsemble: both prepared states must be present");
    }
}

double expected_snr(const cqed::CavityQubitParams& params, double added_quanta,
                    double integration_time_s, const ShotOptions& options) {
    const double f = resolve_readout_freq(params, options.readout_freq_hz);
    const double sep = std::abs(cqed::s21(params, f, 1) - cqed::s21(params, f, 0));
    const double var = (added_quanta + 0.5) / (options.photon_flux_hz * integration_time_s);
    return sep / std::sqrt(2.0 * var);
}

double flux_for_snr(const cqed::CavityQubitParams& params, double added_quanta,
                    double integration_time_s, double snr, double readout_freq_hz) {
    ShotOptions unit;
    unit.readout_freq_hz = readout_freq_hz;
    unit.photon_flux_hz = 1.0;
    const double s1 = expected_snr(params, added_quanta, integration_time_s, unit);
    return (snr / s1) * (snr / s1);
}

constexpr std::size_t rng_block = 1024;

ShotEnsemble simulate_shots(const cqed::CavityQubitParams& params,
                            const rfchain::SystemNoiseResult& chain, std::size_t n,
                            double integration_time_s, const ShotOptions& options) {
    if (n < 2) {
        throw std::invalid_argument("simulate_shots: need at least two shots");
    }
    if (!(integration_time_s > 0.0) || !(options.photon_flux_hz > 0.0)) {
        throw std::invalid_argument("simulate_shots: integration time and flux must be positive");
    }
    if (!(options.relaxation_prob >= 0.0 && options.relaxation_prob <= 1.0)) {
        throw std::invalid_argument("simulate_shots: relaxation probability must lie in [0, 1]");
    }
    if (!(chain.added_quanta >= -0.5)) {
        throw std::invalid_argument("simulate_shots: added noise below the vacuum level");
    }
    params.validate();
    const std::size_t chunk = std::max<std::size_t>(options.chunk_size, 1);

    ShotEnsemble e;
    e.integration_time_s = integration_time_s;
    e.readout_freq_hz = resolve_readout_freq(params, options.readout_freq_hz);
    e.seed = options.seed;
    e.shots.resize(n);

    const auto m0 = cqed::s21(params, e.readout_freq_hz, 0);
    const auto m1 = cqed::s21(params, e.readout_freq_hz, 1);
    const double sigma =
        std::sqrt((chain.added_quanta + 0.5) / (options.photon_flux_hz * integration_time_s));

    // Random streams belong to fixed blocks of shots, so the work split never changes the output.
    auto fill_block = [&](std::size_t b) {
        std::mt19937_64 rng(derive_seed(options.seed, b));
        std::normal_distribution<double> normal(0.0, 1.0);
        std::uniform_real_distribution<double> uniform(0.0, 1.0);
        const std::size_t end = std::min(n, (b + 1) * rng_block);
        for (std::size_t k = b * rng_block; k < end; ++k) {
            const int state = static_cast<int>(k % 2);
            std::complex<double> mean = state == 0 ? m0 : m1;
            if (state == 1 && options.relaxation_prob > 0.0 && uniform(rng) < options.relaxation_prob) {
                const double excited_fraction = uniform(rng);
                mean = excited_fraction * m1 + (1.0 - excited_fraction) * m0;
            }
            const double ni = normal(rng);
            const double nq = normal(rng);
            e.shots[k] = {mean.real() + sigma * ni, mean.imag() + sigma * nq, state};
        }
    };

    const std::size_t n_blocks = (n + rng_block - 1) / rng_block;
    const std::size_t blocks_per_chunk = std::max<std::size_t>(1, (chunk + rng_block - 1) / rng_block);
    const std::size_t n_chunks = (n_blocks + blocks_per_chunk - 1) / blocks_per_chunk;
    const std::size_t workers =
        std::min<std::size_t>(n_chunks, std::max(1u, std::thread::hardware_concurrency()));
    std::vector<std::future<void>> jobs;
    for (std::size_t w = 0; w < workers; ++w) {
        jobs.push_back(std::async(std::launch::async, [&, w] {
            for (std::size_t c = w; c < n_chunks; c += workers) {
                const std::size_t last = std::min(n_blocks, (c + 1) * blocks_per_chunk);
                for (std::size_t b = c * blocks_per_chunk; b < last; ++b) fill_block(b);
            }
        }));
    }
    for (auto& j : jobs) j.get();
    return e;
}

ReadoutStats rotate_and_fit(const ShotEnsemble& e) {
    e.validate();
    std::complex<double> sum0(0.0, 0.0);
    std::complex<double> sum1(0.0, 0.0);
    std::size_t n0 = 0;
    std::size_t n1 = 0;
    for (const auto& s : e.shots) {
        if (s.prepared_state == 0) {
            sum0 += std::complex<double>(s.i, s.q);
            ++n0;
        } else {
            sum1 += std::complex<double>(s.i, s.q);
            ++n1;
        }
    }
    const auto d = sum1 / static_cast<double>(n1) - sum0 / static_cast<double>(n0);
    ReadoutStats st;
    st.rotation_rad = std::abs(d) > 0.0 ? std::arg(d) : 0.0;

    const auto i_rot = rotated_i(e, st.rotation_rad);
    std::vector<double> v0;
    std::vector<double> v1;
    v0.reserve(n0);
    v1.reserve(n1);
    for (std::size_t k = 0; k < e.shots.size(); ++k) {
        (e.shots[k].prepared_state == 0 ? v0 : v1).push_back(i_rot[k]);
    }
    const auto g0 = moments(v0);
    const auto g1 = moments(v1);
    if (!(g0.sd > 0.0) || !(g1.sd > 0.0)) {
        throw std::invalid_argument("rotate_and_fit: degenerate ensemble (zero variance)");
    }
    st.n0 = n0;
    st.n1 = n1;
    st.i0 = g0.mean;
    st.i1 = g1.mean;
    st.sigma0 = g0.sd;
    st.sigma1 = g1.sd;
    st.mu = std::abs(st.i0 - st.i1);
    st.sigma_t = std::hypot(st.sigma0, st.sigma1);
    st.snr = st.mu / st.sigma_t;
    st.threshold = 0.5 * (st.i0 + st.i1);
    classify(e, i_rot, st);
    return st;
}

ReadoutStats fidelity(const ShotEnsemble& e, ThresholdRule rule) {
    auto st = rotate_and_fit(e);
    if (rule == ThresholdRule::max_likelihood) {
        st.threshold = max_likelihood_threshold(st);
        classify(e, rotated_i(e, st.rotation_rad), st);
    }
    return st;
}

double analytic_fidelity(double snr) {
    if (!(snr >= 0.0)) {
        throw std::invalid_argument("analytic_fidelity: snr must be non-negative");
    }
    return 1.0 - 0.5 * std::erfc(snr / 2.0);
}

Histogram histogram(const ShotEnsemble& e, const ReadoutStats& stats, int bins) {
    if (bins < 1) {
        throw std::invalid_argument("histogram: need at least one bin");
    }
    const auto i_rot = rotated_i(e, stats.rotation_rad);
    const auto [lo_it, hi_it] = std::minmax_element(i_rot.begin(), i_rot.end());
    const double lo = *lo_it;
    const double width = std::max(*hi_it - lo, 1e-300) / bins;
    Histogram h;
    h.counts0.assign(static_cast<std::size_t>(bins), 0);
    h.counts1.assign(static_cast<std::size_t>(bins), 0);
    for (int b = 0; b < bins; ++b) {
        h.bin_centers.push_back(lo + (b + 0.5) * width);
    }
    for (std::size_t k = 0; k < i_rot.size(); ++k) {
        auto b = static_cast<std::size_t>((i_rot[k] - lo) / width);
        b = std::min(b, static_cast<std::size_t>(bins - 1));
        (e.shots[k].prepared_state == 0 ? h.counts0 : h.counts1)[b] += 1;
    }
    return h;
}

void write_ensemble_csv(const ShotEnsemble& e, const std::filesystem::path& path) {
    csv::Writer w({"I", "Q", "prepared_state"});
    w.meta("integration_time_s", e.integration_time_s);
    w.meta("readout_freq_hz", e.readout_freq_hz);
    w.meta("seed", std::to_string(e.seed));
    for (const auto& s : e.shots) {
        w.row({s.i, s.q, static_cast<double>(s.prepared_state)});
    }
    w.save(path);
}

ShotEnsemble read_ensemble_csv(const std::filesystem::path& path) {
    const auto t = csv::read(path);
    const auto ic = t.column("I");
    const auto qc = t.column("Q");
    const auto sc = t.column("prepared_state");
    ShotEnsemble e;
    for (const auto& r : t.rows) {
        if (r[sc] != 0.0 && r[sc] != 1.0) {
            throw DataError(path.string() + ": prepared_state must be 0 or 1");
        }
        e.shots.push_back({r[ic], r[qc], static_cast<int>(r[sc])});
    }
    try {
        if (auto it = t.meta.find("integration_time_s"); it != t.meta.end()) e.integration_time_s = std::stod(it->second);
        if (auto it = t.meta.find("readout_freq_hz"); it != t.meta.end()) e.readout_freq_hz = std::stod(it->second);
        if (auto it = t.meta.find("seed"); it != t.meta.end()) e.seed = std::stoull(it->second);
    } catch (const std::exception&) {
        throw DataError(path.string() + ": malformed header field");
    }
    return e;
}

void write_histogram_csv(const Histogram& h, const std::filesystem::path& path) {
    csv::Writer w({"bin_center", "count_state0", "count_state1"});
    for (std::size_t b = 0; b < h.bin_centers.size(); ++b) {
        w.row({h.bin_centers[b], static_cast<double>(h.counts0[b]), static_cast<double>(h.counts1[b])});
    }
    w.save(path);
}

}  // namespace readout::shots
