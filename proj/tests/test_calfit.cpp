#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "readout/calfit.hpp"
#include "readout/common.hpp"
#include "readout/cqed.hpp"
#include "readout/pipeline.hpp"
#include "readout/rfchain.hpp"
#include "readout/synth.hpp"

using namespace readout;
using namespace readout::calfit;

namespace {

constexpr double kB = 1.380649e-23;
constexpr double hbar = 1.054571817e-34;
constexpr double pi = 3.14159265358979323846;

cqed::CavityQubitParams qubit(int id) { return cqed::reference_device().at(static_cast<std::size_t>(id - 1)); }

ComplexTrace trace(const cqed::CavityQubitParams& p, int state, double noise, std::uint64_t seed,
                   double center_shift = 0.0, int points = 401) {
    const double lw = p.f_res_hz / p.q_total();
    const double f0 = p.f_res_hz + center_shift;
    ComplexTrace t;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0.0, noise);
    for (int i = 0; i < points; ++i) {
        const double f = f0 - 10 * lw + 20 * lw * i / (points - 1);
        t.freqs_hz.push_back(f);
        auto s = cqed::s21(p, f, state);
        if (noise > 0) s += std::complex<double>(z(rng), z(rng));
        t.s21.push_back(s);
    }
    return t;
}

ComplexTrace shifted(const cqed::CavityQubitParams& p, double shift_hz, std::uint64_t seed, double noise = 0.0) {
    auto q = p;
    q.f_res_hz -= shift_hz;
    auto t = trace(q, 0, noise, seed, shift_hz);
    return t;
}

double oracle_p_cav_dbm(double f, double q_c) {
    const double w = 2 * pi * f;
    return 10 * std::log10(hbar * w * w / (2 * q_c) / 1e-3);
}

std::vector<double> axis(double lo, double hi, int n) {
    std::vector<double> v;
    for (int i = 0; i < n; ++i) v.push_back(lo + (hi - lo) * i / (n - 1));
    return v;
}

cqed::StarkMap stark_map(const cqed::CavityQubitParams& p, double att, double noise, std::uint64_t seed) {
    const double p1 = oracle_p_cav_dbm(p.f_res_hz, p.q_c) - att;
    std::vector<double> powers;
    for (double d = -20; d <= 10 + 1e-9; d += 0.5) powers.push_back(p1 + d);
    const double span_lo = p.f_q_hz - 2 * p.chi_hz * 10 - 40 * 20e3 - 1e6;
    cqed::StarkMapOptions o;
    o.noise_level = noise;
    o.seed = seed;
    return cqed::synth_stark_map(p, att, powers, axis(span_lo, p.f_q_hz + 1e6, 1601), o);
}

}  // namespace

TEST(ResonatorFit, NoiselessRecovery) {
    const auto p = qubit(3);
    const auto f = fit_resonator(trace(p, 0, 0.0, 1));
    EXPECT_NEAR(f.f_res_hz / 6.879e9, 1.0, 1e-4);
    EXPECT_NEAR(f.q_c / 7842, 1.0, 1e-4);
    EXPECT_NEAR(f.q / p.q_total(), 1.0, 1e-4);
    EXPECT_LT(f.residual_rms, 1e-6);
}

TEST(ResonatorFit, OnePercentNoise) {
    for (int id = 1; id <= 8; ++id) {
        const auto p = qubit(id);
        const auto f = fit_resonator(trace(p, 0, 0.01, 100 + static_cast<std::uint64_t>(id)));
        EXPECT_NEAR(f.q_c / p.q_c, 1.0, 0.01) << id;
        EXPECT_NEAR(f.f_res_hz / p.f_res_hz, 1.0, 1e-5) << id;
        EXPECT_GT(f.sigma_q_c(), 0.0);
        EXPECT_GT(f.sigma_f_res(), 0.0);
    }
}

TEST(ResonatorFit, RecoversAmplitudeAndAsymmetry) {
    auto p = qubit(4);
    p.asymmetry_rad = 0.2;
    auto t = trace(p, 0, 0.0, 1);
    const std::complex<double> a = std::polar(0.3, 1.1);
    for (auto& s : t.s21) s *= a;
    const auto f = fit_resonator(t);
    EXPECT_NEAR(std::abs(f.amplitude), 0.3, 1e-5);
    EXPECT_NEAR(f.phi_rad, 0.2, 1e-4);
    EXPECT_NEAR(f.q_c / p.q_c, 1.0, 1e-4);
}

TEST(ResonatorFit, FlatTraceHasNoDip) {
    ComplexTrace t;
    for (int i = 0; i < 200; ++i) {
        t.freqs_hz.push_back(7e9 + i * 1e4);
        t.s21.emplace_back(1.0, 0.0);
    }
    try {
        fit_resonator(t);
        FAIL();
    } catch (const FitError& e) {
        EXPECT_NE(std::string(e.what()).find("no dip found"), std::string::npos);
    }
}

TEST(ResonatorFit, InputContract) {
    const auto p = qubit(1);
    EXPECT_THROW(fit_resonator(trace(p, 0, 0.0, 1, 0.0, 40)), std::invalid_argument);
    auto narrow = trace(p, 0, 0.0, 1);
    const double lw = p.f_res_hz / p.q_total();
    for (std::size_t i = 0; i < narrow.freqs_hz.size(); ++i) {
        narrow.freqs_hz[i] = p.f_res_hz - lw + 2 * lw * static_cast<double>(i) / 400.0;
        narrow.s21[i] = cqed::s21(p, narrow.freqs_hz[i], 0);
    }
    EXPECT_THROW(fit_resonator(narrow), std::invalid_argument);
}

TEST(Chi, IdenticalTracesGiveZero) {
    const auto t = trace(qubit(1), 0, 0.0, 1);
    EXPECT_NEAR(extract_chi(t, t).chi_hz, 0.0, 1.0);
}

TEST(Chi, TableOffsets) {
    const auto p = qubit(1);
    EXPECT_NEAR(extract_chi(trace(p, 0, 0.0, 1), shifted(p, 270e3, 2)).chi_hz, 135e3, 10.0);
    const auto q = qubit(8);
    EXPECT_NEAR(extract_chi(trace(q, 0, 0.0, 1), shifted(q, 530e3, 2)).chi_hz, 265e3, 10.0);
}

TEST(Chi, NoisyWithinTableUncertainty) {
    for (int id = 1; id <= 8; ++id) {
        const auto p = qubit(id);
        const auto c = extract_chi(trace(p, 0, 0.01, 10 + static_cast<std::uint64_t>(id)),
                                   trace(p, 1, 0.01, 50 + static_cast<std::uint64_t>(id), -2 * p.chi_hz));
        EXPECT_NEAR(c.chi_hz, p.chi_hz, 5e3) << id;
        EXPECT_GT(c.sigma_hz, 0.0);
    }
}

TEST(Chi, AntisymmetricUnderSwap) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> shift(50e3, 600e3);
    for (int i = 0; i < 10; ++i) {
        const auto p = qubit(1 + static_cast<int>(rng() % 8));
        const double s = shift(rng);
        const auto a = trace(p, 0, 0.005, rng());
        const auto b = shifted(p, s, rng(), 0.005);
        const auto ab = extract_chi(a, b), ba = extract_chi(b, a);
        EXPECT_NEAR(ab.chi_hz, -ba.chi_hz, 1e-6 * std::abs(ab.chi_hz));
        EXPECT_NEAR(ab.sigma_hz, ba.sigma_hz, 1e-6 * ab.sigma_hz);
    }
}

TEST(Lorentzian, RecoversPeak) {
    const auto f = axis(4.7e9, 4.72e9, 801);
    std::vector<double> y;
    for (double x : f) {
        const double d = (x - 4.711e9) / (0.5 * 300e3);
        y.push_back(0.1 + 2.0 / (1 + d * d));
    }
    const auto fit = fit_lorentzian(f, y);
    ASSERT_TRUE(fit.ok);
    EXPECT_NEAR(fit.center_hz, 4.711e9, 1.0);
    EXPECT_NEAR(fit.fwhm_hz, 300e3, 10.0);
    EXPECT_NEAR(fit.amplitude, 2.0, 1e-4);
}

TEST(Stark, RoundTripAllQubits) {
    for (int id = 1; id <= 8; ++id) {
        const auto p = qubit(id);
        const auto fit = fit_resonator(trace(p, 0, 0.0, 1));
        StarkOptions o;
        o.seed = 3;
        o.resamples = 200;
        const auto cal = calibrate_stark(stark_map(p, -110.0, 0.02, 7 + static_cast<std::uint64_t>(id)), fit,
                                         p.chi_hz, o);
        EXPECT_NEAR(cal.attenuation_db, -110.0, 0.1) << id;
        EXPECT_GT(cal.uncertainty_db, 0.0);
        EXPECT_NEAR(cal.p_gen_at_n1_dbm + cal.attenuation_db, cal.p_cav_at_n1_dbm, 1e-9);
    }
}

TEST(Stark, QubitOneCavityPower) {
    const auto p = qubit(1);
    const auto fit = fit_resonator(trace(p, 0, 0.0, 1));
    const auto cal = calibrate_stark(stark_map(p, -110.0, 0.0, 1), fit, p.chi_hz);
    EXPECT_NEAR(cal.p_cav_at_n1_dbm, oracle_p_cav_dbm(7.218e9, 7136), 0.01);
    EXPECT_NEAR(cal.p_cav_at_n1_dbm, -138.2, 0.05);
}

TEST(Stark, NoShiftMeansNoCrossing) {
    auto p = qubit(2);
    const auto fit = fit_resonator(trace(p, 0, 0.0, 1));
    p.chi_hz = 0.0;
    const auto map = stark_map(p, -110.0, 0.0, 1);
    try {
        calibrate_stark(map, fit, 0.0);
        FAIL();
    } catch (const FitError& e) {
        EXPECT_NE(std::string(e.what()).find("crossing not found"), std::string::npos);
    }
}

TEST(Stark, ModelChoiceEffectBounded) {
    auto p = qubit(5);
    p.q_int = 500 * p.q_c;
    const auto fit = fit_resonator(trace(p, 0, 0.0, 1));
    const auto map = stark_map(p, -110.0, 0.0, 1);
    StarkOptions a, b;
    a.power_model = cqed::PowerModel::coupling_limited;
    b.power_model = cqed::PowerModel::exact;
    const double d_db = calibrate_stark(map, fit, p.chi_hz, a).attenuation_db -
                        calibrate_stark(map, fit, p.chi_hz, b).attenuation_db;
    // N_added scales as 10^(dG/10); the attenuation difference maps one-to-one onto G.
    EXPECT_LT(std::abs(std::pow(10.0, d_db / 10) - 1.0), p.q_c / p.q_int * 2.0);
}

TEST(SystemGain, Arithmetic) {
    SpectrumTrace sa;
    for (int i = 0; i < 101; ++i) {
        sa.freqs_hz.push_back(7e9 + i * 30e3);
        sa.power_dbm.push_back(i == 50 ? -45.0 : -300.0);
    }
    StarkCalibration cal;
    cal.attenuation_db = -110.0;
    const auto g = extract_system_gain(sa, cal, -30.0);
    EXPECT_NEAR(g.gain_db, 95.0, 1e-9);
    EXPECT_DOUBLE_EQ(g.tone_freq_hz, 7e9 + 50 * 30e3);
    sa.power_dbm[50] = -35.0;
    EXPECT_NEAR(extract_system_gain(sa, cal, -30.0).gain_db - g.gain_db, 10.0, 1e-9);
}

TEST(SystemGain, NoPeak) {
    SpectrumTrace sa;
    for (int i = 0; i < 50; ++i) {
        sa.freqs_hz.push_back(7e9 + i * 30e3);
        sa.power_dbm.push_back(-100.0 + (i == 25 ? 5.0 : 0.0));
    }
    EXPECT_THROW(extract_system_gain(sa, StarkCalibration{}, -30.0), FitError);
}

TEST(SystemGain, SyntheticTraceWithNoise) {
    // G_sys = 95 dB, tone -140 dBm on chip, 1.72 K input-referred, 100 averages.
    std::mt19937_64 rng(17);
    std::normal_distribution<double> z(0.0, 0.1);
    const double g = std::pow(10.0, 9.5);
    SpectrumTrace sa;
    for (int k = -500; k <= 500; ++k) {
        const double f = 6.5e9 + k * 30e3;
        double w = g * kB * 1.72 * 30e3 * (1 + z(rng));
        if (k == 0) w += g * 1e-3 * std::pow(10.0, -14.0);
        sa.freqs_hz.push_back(f);
        sa.power_dbm.push_back(10 * std::log10(w / 1e-3));
    }
    StarkCalibration cal;
    cal.attenuation_db = -110.0;
    EXPECT_NEAR(extract_system_gain(sa, cal, -30.0).gain_db, 95.0, 0.1);
}

namespace {

NoiseMeasurement measurement_for(double t_n, double f, double gain_db) {
    NoiseMeasurement m;
    m.tone_freq_hz = f;
    m.system_gain_db = gain_db;
    m.resolution_bw_hz = 30e3;
    m.sa_noise_floor_dbm = 10 * std::log10(std::pow(10.0, gain_db / 10) * kB * t_n * 30e3 / 1e-3);
    return m;
}

}  // namespace

TEST(AddedNoise, OnePhotonPsd) {
    const double f = 6e9;
    const double t = hbar * 2 * pi * f / kB;
    EXPECT_NEAR(extract_added_noise(measurement_for(t, f, 80.0)).added_quanta, 0.5, 1e-9);
}

TEST(AddedNoise, KnownTemperature) {
    auto m = measurement_for(1.72, 6.5e9, 95.0);
    m.attenuation_sigma_db = 0.05;
    m.floor_sigma_db = 0.02;
    const auto r = extract_added_noise(m, {2000, 5});
    const double hw = hbar * 2 * pi * 6.5e9;
    EXPECT_NEAR(r.added_quanta, (kB * 1.72 - hw / 2) / hw, 1e-9);
    EXPECT_NEAR(r.excess_over_ql, r.added_quanta - 0.5, 1e-15);
    EXPECT_NEAR(r.noise_temp_k, 1.72, 1e-9);
    // First-order: dN = (N + 1/2) ln10/10 * dG.
    const double lin = (r.added_quanta + 0.5) * std::log(10.0) / 10 * std::hypot(0.05, 0.02);
    EXPECT_NEAR(r.sigma / lin, 1.0, 0.1);
    EXPECT_FALSE(r.under_vacuum);
}

TEST(AddedNoise, JointPowerShiftInvariance) {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> t(0.3, 10.0), s(-20.0, 20.0);
    for (int i = 0; i < 200; ++i) {
        const auto m = measurement_for(t(rng), 6.8e9, 90.0);
        StarkCalibration cal;
        cal.attenuation_db = -110.0;
        auto m2 = m;
        const double shift = s(rng);
        // A stronger tone and a larger SA reading cancel in G_sys and leave the floor alone.
        SpectrumTrace sa, sa2;
        for (int k = -20; k <= 20; ++k) {
            sa.freqs_hz.push_back(6.8e9 + k * 30e3);
            sa.power_dbm.push_back(k == 0 ? -40.0 : -250.0);
        }
        sa2 = sa;
        sa2.power_dbm[20] += shift;
        const double g1 = extract_system_gain(sa, cal, -30.0).gain_db;
        const double g2 = extract_system_gain(sa2, cal, -30.0 + shift).gain_db;
        m2.system_gain_db = m.system_gain_db + (g2 - g1);
        EXPECT_NEAR(extract_added_noise(m2).added_quanta, extract_added_noise(m).added_quanta, 1e-6);
    }
}

TEST(AddedNoise, ResampledSigmaConverges) {
    auto m = measurement_for(2.0, 6e9, 90.0);
    m.attenuation_sigma_db = 0.1;
    auto spread = [&](int resamples) {
        double s = 0, s2 = 0;
        const int seeds = 40;
        for (int k = 0; k < seeds; ++k) {
            const double v = extract_added_noise(m, {resamples, static_cast<std::uint64_t>(k + 1)}).sigma;
            s += v;
            s2 += v * v;
        }
        return std::sqrt(s2 / seeds - (s / seeds) * (s / seeds));
    };
    const double ratio = spread(100) / spread(1600);
    EXPECT_GT(ratio, 2.0);
    EXPECT_LT(ratio, 8.0);
}

TEST(AddedNoise, UnderVacuumFlag) {
    auto m = measurement_for(0.2 * hbar * 2 * pi * 6e9 / kB, 6e9, 90.0);
    m.floor_sigma_db = 0.01;
    const auto r = extract_added_noise(m, {500, 1});
    EXPECT_LT(r.added_quanta, 0.0);
    EXPECT_TRUE(r.under_vacuum);
}

TEST(AddedNoise, BadInputs) {
    auto m = measurement_for(1.0, 6e9, 90.0);
    m.resolution_bw_hz = 0.0;
    EXPECT_THROW(extract_added_noise(m), std::invalid_argument);
    m = measurement_for(1.0, 6e9, 90.0);
    m.tone_freq_hz = 0.0;
    EXPECT_THROW(extract_added_noise(m), std::invalid_argument);
}

TEST(TraceCsv, RoundTripIsExact) {
    const auto t = trace(qubit(2), 0, 0.01, 3);
    const auto path = std::filesystem::temp_directory_path() / "calfit_s21_roundtrip.csv";
    write_s21_csv(t, path);
    const auto r = read_s21_csv(path);
    EXPECT_EQ(r.freqs_hz, t.freqs_hz);
    EXPECT_EQ(r.s21, t.s21);
    SpectrumTrace sa{{1e9, 2e9}, {-101.25, -99.123456789012345}};
    write_spectrum_csv(sa, path);
    EXPECT_EQ(read_spectrum_csv(path).power_dbm, sa.power_dbm);
    std::filesystem::remove(path);
}

namespace {

rfchain::ChainSpec hemt_chain(double t_hemt = 1.9) {
    rfchain::ChainSpec c;
    c.name = "hemt";
    c.band = {4e9, 8.5e9};
    rfchain::ChainComponent lines;
    lines.name = "lines";
    lines.kind = rfchain::ComponentKind::passive;
    lines.gain_db = rfchain::GainCurve(-2.0);
    lines.physical_temp_k = 0.02;
    rfchain::ChainComponent hemt;
    hemt.name = "hemt";
    hemt.kind = rfchain::ComponentKind::amplifier;
    hemt.gain_db = rfchain::GainCurve(40.0);
    hemt.noise_temp_k = t_hemt;
    rfchain::ChainComponent rt = hemt;
    rt.name = "rt";
    rt.gain_db = rfchain::GainCurve(35.0);
    rt.noise_temp_k = 100.0;
    c.components = {lines, hemt, rt};
    return c;
}

std::filesystem::path fresh_dir(const std::string& name) {
    auto d = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(d);
    return d;
}

}  // namespace

TEST(Pipeline, BundleRoundTrip) {
    synth::BundleSpec spec;
    spec.qubits = cqed::reference_device();
    spec.chain = hemt_chain();
    spec.seed = 21;
    const auto dir = fresh_dir("calfit_bundle_rt");
    const auto truth = synth::write_bundle(spec, dir);
    PipelineOptions o;
    o.resamples = 300;
    const auto rep = run_pipeline(load_bundle(dir), o);
    ASSERT_EQ(rep.qubits.size(), 8u);
    EXPECT_TRUE(rep.all_ok());
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const auto& q = rep.qubits[i];
        ASSERT_TRUE(q.ok()) << q.error;
        EXPECT_NEAR(q.noise->added_quanta / truth[i].system.added_quanta, 1.0, 0.05) << q.id;
        EXPECT_NEAR(q.stark->attenuation_db, -110.0, 0.2) << q.id;
        EXPECT_NEAR(q.chi->state0.q_c / spec.qubits[i].q_c, 1.0, 0.01) << q.id;
    }
    std::filesystem::remove_all(dir);
}

TEST(Pipeline, MissingStarkMapIsolated) {
    synth::BundleSpec spec;
    spec.qubits = cqed::reference_device();
    spec.chain = hemt_chain();
    const auto dir = fresh_dir("calfit_bundle_missing");
    synth::write_bundle(spec, dir);
    std::filesystem::remove(dir / "q4" / "stark_map.csv");
    PipelineOptions o;
    o.resamples = 50;
    const auto rep = run_pipeline(load_bundle(dir), o);
    int ok = 0;
    for (const auto& q : rep.qubits) {
        if (q.ok()) {
            ++ok;
        } else {
            EXPECT_EQ(q.id, 4);
            EXPECT_EQ(q.failure, FailureKind::data);
            EXPECT_EQ(q.failed_stage, "stark");
            EXPECT_NE(q.error.find("stark_map.csv"), std::string::npos);
        }
    }
    EXPECT_EQ(ok, 7);
    EXPECT_FALSE(rep.all_ok());
    EXPECT_FALSE(rep.any_fit_failure());
    std::filesystem::remove_all(dir);
}

TEST(Pipeline, CorruptCsvNamesFile) {
    synth::BundleSpec spec;
    spec.qubits = {qubit(1)};
    spec.chain = hemt_chain();
    const auto dir = fresh_dir("calfit_bundle_corrupt");
    synth::write_bundle(spec, dir);
    {
        std::ofstream out(dir / "q1" / "s21_state0.csv", std::ios::app);
        out << "7.2e9,not_a_number,0\n";
    }
    const auto rep = run_pipeline(load_bundle(dir), {});
    ASSERT_EQ(rep.qubits.size(), 1u);
    EXPECT_EQ(rep.qubits[0].failure, FailureKind::data);
    EXPECT_NE(rep.qubits[0].error.find("s21_state0.csv"), std::string::npos);
    std::filesystem::remove_all(dir);
}

TEST(Pipeline, ManifestErrors) {
    const auto dir = fresh_dir("calfit_bundle_bad_manifest");
    std::filesystem::create_directories(dir);
    EXPECT_THROW(load_bundle(dir), ConfigError);
    {
        std::ofstream out(dir / "manifest.json");
        out << "{\"name\": \"x\", \"qubits\": [{\"id\": 1}]}";
    }
    EXPECT_THROW(load_bundle(dir), ConfigError);
    std::filesystem::remove_all(dir);
}

TEST(Pipeline, PairedComparison) {
    synth::BundleSpec a;
    a.qubits = {qubit(1), qubit(3)};
    a.chain = hemt_chain(1.9);
    a.name = "a";
    auto b = a;
    b.chain = hemt_chain(0.9);
    b.name = "b";
    b.seed = 2;
    const auto da = fresh_dir("calfit_pair_a"), db = fresh_dir("calfit_pair_b");
    const auto ta = synth::write_bundle(a, da);
    const auto tb = synth::write_bundle(b, db);
    PipelineOptions o;
    o.resamples = 100;
    const auto rows = pair_reports(run_pipeline(load_bundle(da), o), run_pipeline(load_bundle(db), o));
    ASSERT_EQ(rows.size(), 2u);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        EXPECT_NEAR(rows[i].sqrt_noise_temp_ratio, std::sqrt(rows[i].noise_temp_a_k / rows[i].noise_temp_b_k),
                    1e-12);
        const double truth = std::sqrt(ta[i].system.noise_temp_k / tb[i].system.noise_temp_k);
        EXPECT_NEAR(rows[i].sqrt_noise_temp_ratio / truth, 1.0, 0.05);
    }
    std::filesystem::remove_all(da);
    std::filesystem::remove_all(db);
}
