#include <cmath>
#include <filesystem>
#include <random>

#include <gtest/gtest.h>

#include "readout/cqed.hpp"
#include "readout/rfchain.hpp"
#include "readout/shots.hpp"

using namespace readout;
using namespace readout::shots;

namespace {

cqed::CavityQubitParams qubit(int id) { return cqed::reference_device().at(static_cast<std::size_t>(id - 1)); }

rfchain::SystemNoiseResult noise(double quanta) {
    rfchain::SystemNoiseResult r;
    r.added_quanta = quanta;
    return r;
}

// Independent oracle: 1 - Q(x / sqrt 2), Q the upper normal tail.
double gaussian_oracle(double snr) { return 1.0 - 0.5 * std::erfc(snr / 2.0); }

ShotEnsemble at_snr(double snr, std::size_t n, std::uint64_t seed, double quanta = 4.0, double relax = 0.0) {
    const auto p = qubit(3);
    ShotOptions o;
    o.photon_flux_hz = flux_for_snr(p, quanta, 1e-6, snr);
    o.seed = seed;
    o.relaxation_prob = relax;
    return simulate_shots(p, noise(quanta), n, 1e-6, o);
}

ShotEnsemble manual(const std::vector<std::pair<double, double>>& s0, const std::vector<std::pair<double, double>>& s1) {
    ShotEnsemble e;
    e.integration_time_s = 1e-6;
    for (std::size_t k = 0; k < std::max(s0.size(), s1.size()); ++k) {
        if (k < s0.size()) e.shots.push_back({s0[k].first, s0[k].second, 0});
        if (k < s1.size()) e.shots.push_back({s1[k].first, s1[k].second, 1});
    }
    return e;
}

}  // namespace

TEST(AnalyticFidelity, Limits) {
    EXPECT_DOUBLE_EQ(analytic_fidelity(0.0), 0.5);
    EXPECT_NEAR(analytic_fidelity(40.0), 1.0, 1e-15);
    EXPECT_THROW(analytic_fidelity(-1.0), std::invalid_argument);
}

TEST(AnalyticFidelity, TwoRootTwo) {
    const double oracle = gaussian_oracle(2 * std::sqrt(2.0));
    EXPECT_NEAR(analytic_fidelity(2 * std::sqrt(2.0)), oracle, 1e-15);
    EXPECT_NEAR(oracle, 0.97725, 5e-6);
}

TEST(AnalyticFidelity, StrictlyIncreasing) {
    double prev = 0.0;
    for (double s = 0.0; s < 8.0; s += 0.05) {
        const double f = analytic_fidelity(s);
        EXPECT_GT(f, prev);
        prev = f;
    }
}

TEST(RotateAndFit, ArithmeticExample) {
    std::vector<std::pair<double, double>> s0, s1;
    for (int k = 0; k < 50000; ++k) {
        const double d = (k % 2 == 0) ? 1.0 : -1.0;
        s0.emplace_back(-1.0 + d, 0.0);
        s1.emplace_back(1.0 + d, 0.0);
    }
    const auto st = rotate_and_fit(manual(s0, s1));
    EXPECT_NEAR(st.mu, 2.0, 1e-12);
    EXPECT_NEAR(st.sigma_t, std::sqrt(2.0), 1e-4);
    EXPECT_NEAR(st.snr, std::sqrt(2.0), 1e-4);
}

TEST(RotateAndFit, SeparationAlongQ) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> z(0.0, 1.0);
    std::vector<std::pair<double, double>> s0, s1;
    for (int k = 0; k < 20000; ++k) {
        s0.emplace_back(z(rng), -1.5 + z(rng));
        s1.emplace_back(z(rng), 1.5 + z(rng));
    }
    const auto st = rotate_and_fit(manual(s0, s1));
    EXPECT_NEAR(std::abs(std::cos(st.rotation_rad)), 0.0, 0.02);
    EXPECT_NEAR(st.mu, 3.0, 0.05);
}

TEST(RotateAndFit, InvariantUnderRotationAndScale) {
    const auto e = at_snr(2.0, 20000, 4);
    const double base = rotate_and_fit(e).snr;
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> angle(-3.14, 3.14), scale(1e-3, 1e3);
    for (int t = 0; t < 20; ++t) {
        auto e2 = e;
        const auto rot = std::polar(scale(rng), angle(rng));
        for (auto& s : e2.shots) {
            const auto z = std::complex<double>(s.i, s.q) * rot;
            s.i = z.real();
            s.q = z.imag();
        }
        EXPECT_NEAR(rotate_and_fit(e2).snr / base, 1.0, 1e-9);
    }
}

TEST(RotateAndFit, DegenerateEnsemble) {
    EXPECT_THROW(rotate_and_fit(manual({{0, 0}, {0, 0}}, {{1, 1}, {1, 1}})), std::invalid_argument);
    EXPECT_THROW(rotate_and_fit(manual({{0, 0}, {1, 0}}, {})), std::invalid_argument);
}

TEST(Simulate, SnrConsistency) {
    const std::size_t n = 100000;
    const auto st = rotate_and_fit(at_snr(2.0, n, 11));
    // Delta-method standard error for equal-sigma Gaussians with m shots per state.
    const double m = n / 2.0;
    const double se = std::sqrt((1.0 + 2.0 * 2.0 / 4.0) / m);
    EXPECT_NEAR(st.snr, 2.0, 3 * se);
}

TEST(Simulate, ExpectedSnrMatchesDesign) {
    const auto p = qubit(3);
    ShotOptions o;
    o.photon_flux_hz = 2e6;
    const double quanta = 3.0;
    const auto d = cqed::s21(p, p.f_res_hz - p.chi_hz, 1) - cqed::s21(p, p.f_res_hz - p.chi_hz, 0);
    const double oracle = std::abs(d) * std::sqrt(2e6 * 1e-6) / std::sqrt(2 * (quanta + 0.5));
    EXPECT_NEAR(expected_snr(p, quanta, 1e-6, o), oracle, 1e-12);
    EXPECT_NEAR(flux_for_snr(p, quanta, 1e-6, oracle), 2e6, 1e-3);
}

TEST(Simulate, IndependentOfChunking) {
    const auto p = qubit(2);
    ShotOptions a, b;
    a.chunk_size = 1000;
    b.chunk_size = 50000;
    a.relaxation_prob = b.relaxation_prob = 0.1;
    const auto ea = simulate_shots(p, noise(5.0), 30001, 1e-6, a);
    const auto eb = simulate_shots(p, noise(5.0), 30001, 1e-6, b);
    ASSERT_EQ(ea.shots.size(), eb.shots.size());
    for (std::size_t k = 0; k < ea.shots.size(); ++k) {
        EXPECT_EQ(ea.shots[k].i, eb.shots[k].i);
        EXPECT_EQ(ea.shots[k].q, eb.shots[k].q);
    }
}

TEST(Simulate, Errors) {
    const auto p = qubit(1);
    EXPECT_THROW(simulate_shots(p, noise(1.0), 1, 1e-6), std::invalid_argument);
    EXPECT_THROW(simulate_shots(p, noise(1.0), 10, 0.0), std::invalid_argument);
    ShotOptions o;
    o.relaxation_prob = 1.5;
    EXPECT_THROW(simulate_shots(p, noise(1.0), 10, 1e-6, o), std::invalid_argument);
}

TEST(Fidelity, PerfectSeparation) {
    const auto st = fidelity(at_snr(40.0, 10000, 1));
    EXPECT_DOUBLE_EQ(st.fidelity, 1.0);
}

TEST(Fidelity, NoInformation) {
    const auto p = qubit(1);
    ShotOptions o;
    o.photon_flux_hz = 1e3;
    const std::size_t n = 100000;
    const auto st = fidelity(simulate_shots(p, noise(1e6), n, 1e-6, o));
    EXPECT_NEAR(st.fidelity, 0.5, 3 * std::sqrt(0.25 / n) + 0.01);
}

TEST(Fidelity, MonteCarloMatchesGaussianOracle) {
    const std::size_t n = 100000;
    std::uint64_t seed = 100;
    for (double snr : {0.5, 1.0, 2.0, 3.0}) {
        const auto st = fidelity(at_snr(snr, n, ++seed));
        const double f = gaussian_oracle(st.snr);
        EXPECT_NEAR(st.fidelity, f, 3 * std::sqrt(f * (1 - f) / n)) << snr;
    }
}

TEST(Fidelity, MaxLikelihoodNotWorseWithUnequalSigma) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> z(0.0, 1.0);
    std::vector<std::pair<double, double>> s0, s1;
    for (int k = 0; k < 50000; ++k) {
        s0.emplace_back(z(rng), 0.1 * z(rng));
        s1.emplace_back(2.5 + 2.0 * z(rng), 0.1 * z(rng));
    }
    const auto e = manual(s0, s1);
    const auto mid = fidelity(e, ThresholdRule::midpoint);
    const auto ml = fidelity(e, ThresholdRule::max_likelihood);
    EXPECT_GE(ml.fidelity, mid.fidelity - 3 * std::sqrt(0.25 / 100000));
    EXPECT_NE(ml.threshold, mid.threshold);
}

TEST(Fidelity, LowerNoiseIsBetter) {
    const auto p = qubit(3);
    ShotOptions o;
    o.photon_flux_hz = flux_for_snr(p, 9.0, 1e-6, 1.5);
    double prev = 0.0;
    std::uint64_t seed = 0;
    for (double q : {12.0, 9.0, 7.0, 5.0, 4.0, 2.0, 0.5}) {
        o.seed = ++seed;
        const double f = fidelity(simulate_shots(p, noise(q), 100000, 1e-6, o)).fidelity;
        EXPECT_GT(f, prev) << q;
        prev = f;
    }
}

TEST(Fidelity, SnrRatioFollowsNoiseTemperature) {
    const auto p = qubit(3);
    const double f = p.f_res_hz - p.chi_hz;
    // T_N ratio 2.1025 between two chains at the readout frequency.
    const double t_b = 1.5;
    const double qa = rfchain::noise_temp_to_added_quanta(2.1025 * t_b, f);
    const double qb = rfchain::noise_temp_to_added_quanta(t_b, f);
    ShotOptions o;
    o.photon_flux_hz = flux_for_snr(p, qa, 1e-6, 2.0);
    o.seed = 1;
    const auto sa = rotate_and_fit(simulate_shots(p, noise(qa), 100000, 1e-6, o));
    o.seed = 2;
    const auto sb = rotate_and_fit(simulate_shots(p, noise(qb), 100000, 1e-6, o));
    EXPECT_NEAR(sb.snr / sa.snr, 1.45, 0.05 * 1.45);
}

TEST(Fidelity, RelaxationSkewsStateOne) {
    const std::size_t n = 100000;
    const auto clean = at_snr(3.0, n, 9, 4.0, 0.0);
    const auto relaxed = at_snr(3.0, n, 9, 4.0, 0.15);
    const auto st = fidelity(relaxed);
    EXPECT_LT(st.fidelity, analytic_fidelity(rotate_and_fit(clean).snr));
    // Third standardized moment of state-1 projections leans toward the state-0 mean.
    const double c = std::cos(st.rotation_rad), s = std::sin(st.rotation_rad);
    double m = 0, m2 = 0, m3 = 0, k = 0;
    for (const auto& x : relaxed.shots) {
        if (x.prepared_state != 1) continue;
        const double v = x.i * c + x.q * s;
        m += v, m2 += v * v, m3 += v * v * v, k += 1;
    }
    m /= k;
    const double var = m2 / k - m * m;
    const double skew = (m3 / k - 3 * m * var - m * m * m) / std::pow(var, 1.5);
    const double toward_zero = st.i0 < st.i1 ? -1.0 : 1.0;
    EXPECT_GT(skew * toward_zero, 0.1);
}

TEST(Csv, EnsembleAndHistogram) {
    const auto e = at_snr(2.0, 2000, 5);
    const auto path = std::filesystem::temp_directory_path() / "shots_roundtrip.csv";
    write_ensemble_csv(e, path);
    const auto r = read_ensemble_csv(path);
    ASSERT_EQ(r.shots.size(), e.shots.size());
    for (std::size_t k = 0; k < e.shots.size(); ++k) {
        EXPECT_EQ(r.shots[k].i, e.shots[k].i);
        EXPECT_EQ(r.shots[k].q, e.shots[k].q);
        EXPECT_EQ(r.shots[k].prepared_state, e.shots[k].prepared_state);
    }
    EXPECT_EQ(r.seed, e.seed);
    EXPECT_EQ(r.integration_time_s, e.integration_time_s);
    const auto st = rotate_and_fit(e);
    const auto h = histogram(e, st, 40);
    ASSERT_EQ(h.bin_centers.size(), 40u);
    std::size_t total = 0;
    for (std::size_t b = 0; b < 40; ++b) total += h.counts0[b] + h.counts1[b];
    EXPECT_EQ(total, e.shots.size());
    write_histogram_csv(h, path);
    std::filesystem::remove(path);
}
