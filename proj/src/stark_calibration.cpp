#include <cmath>
#include <optional>
#include <random>

#include "readout/calfit.hpp"
#include "readout/common.hpp"
#include "readout/rfchain.hpp"

namespace readout::calfit {

namespace {

// Generator power at which the shift curve first reaches `target`. Between
// two positive samples the interpolation is linear in (dBm, dB of shift),
// which is exact for a shift proportional to linear power.
std::optional<double> crossing_power(const std::vector<double>& powers,
                                     const std::vector<double>& shifts, double target) {
    for (std::size_t j = 1; j < shifts.size(); ++j) {
        if (shifts[j] < target) {
            continue;
        }
        if (shifts[j - 1] >= target) {
            return std::nullopt;  // already past the crossing at the previous slice
        }
        const double p0 = powers[j - 1];
        const double p1 = powers[j];
        const double s0 = shifts[j - 1];
        const double s1 = shifts[j];
        if (s0 > 0.0) {
            const double t = std::log(target / s0) / std::log(s1 / s0);
            return p0 + t * (p1 - p0);
        }
        const double w0 = rfchain::dbm_to_watts(p0);
        const double w1 = rfchain::dbm_to_watts(p1);
        const double t = (target - s0) / (s1 - s0);
        return rfchain::watts_to_dbm(w0 + t * (w1 - w0));
    }
    return std::nullopt;
}

double p_cav_n1_dbm(double f_res, double q, double q_c, cqed::PowerModel model) {
    cqed::CavityQubitParams p;
    p.f_res_hz = f_res;
    p.q_c = q_c;
    const double inv_qi = 1.0 / q - 1.0 / q_c;
    p.q_int = inv_qi > 0.0 ? 1.0 / inv_qi : std::numeric_limits<double>::infinity();
    return rfchain::watts_to_dbm(cqed::cavity_power(p, 1.0, model));
}

}  // namespace

cqed::CavityQubitParams params_from_fit(const ResonatorFit& fit, double chi_hz, double f_q_hz) {
    cqed::CavityQubitParams p;
    p.f_res_hz = fit.f_res_hz;
    p.q_c = fit.q_c;
    p.q_int = fit.q_int;
    p.chi_hz = chi_hz;
    p.f_q_hz = f_q_hz;
    p.asymmetry_rad = fit.phi_rad;
    return p;
}

StarkCalibration calibrate_stark(const cqed::StarkMap& map, const ResonatorFit& fit, double chi_hz,
                                 const StarkOptions& options) {
    map.validate();
    if (!(chi_hz > 0.0)) {
        throw FitError("calibrate_stark: crossing not found (no dispersive shift)");
    }
    const double target = 2.0 * chi_hz;

    StarkCalibration cal;
    for (std::size_t i = 0; i < map.readout_powers_dbm.size(); ++i) {
        const auto lf = fit_lorentzian(map.qubit_drive_freqs_hz, map.slice(i));
        if (!lf.ok) {
            continue;
        }
        cal.slice_powers_dbm.push_back(map.readout_powers_dbm[i]);
        cal.slice_shift_hz.push_back(map.params.f_q_hz - lf.center_hz);
        cal.slice_shift_sigma_hz.push_back(lf.sigma_center_hz);
    }
    const auto& shifts = cal.slice_shift_hz;
    const auto& sig = cal.slice_shift_sigma_hz;
    if (shifts.size() < 2) {
        throw FitError("calibrate_stark: crossing not found (fewer than two usable slices)");
    }
    for (std::size_t i = 1; i < shifts.size(); ++i) {
        const double tol = 4.0 * std::hypot(sig[i], sig[i - 1]) + 1e-9 * target;
        if (shifts[i] < shifts[i - 1] - tol) {
            throw FitError("calibrate_stark: non-monotone shift curve");
        }
    }
    const auto p_gen = crossing_power(cal.slice_powers_dbm, shifts, target);
    if (!p_gen) {
        throw FitError("calibrate_stark: crossing not found within the scanned power range");
    }

    cal.p_gen_at_n1_dbm = *p_gen;
    cal.p_cav_at_n1_dbm = p_cav_n1_dbm(fit.f_res_hz, fit.q, fit.q_c, options.power_model);
    cal.attenuation_db = cal.p_cav_at_n1_dbm - cal.p_gen_at_n1_dbm;

    // Parametric bootstrap over slice centers, (f_res, Q, Q_c) and chi.
    Eigen::Matrix3d cov;
    for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
            cov(a, b) = fit.covariance(a, b);
        }
    }
    Eigen::Matrix3d chol = Eigen::Matrix3d::Zero();
    Eigen::LLT<Eigen::Matrix3d> llt(cov);
    if (llt.info() == Eigen::Success) {
        chol = llt.matrixL();
    } else {
        for (int a = 0; a < 3; ++a) chol(a, a) = std::sqrt(std::max(cov(a, a), 0.0));
    }

    std::mt19937_64 rng(options.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    double sum = 0.0;
    double sum2 = 0.0;
    int count = 0;
    std::vector<double> trial(shifts.size());
    for (int r = 0; r < options.resamples; ++r) {
        for (std::size_t i = 0; i < shifts.size(); ++i) {
            trial[i] = shifts[i] + sig[i] * normal(rng);
        }
        const Eigen::Vector3d zv(normal(rng), normal(rng), normal(rng));
        const Eigen::Vector3d d = chol * zv;
        const double chi_r = chi_hz + options.chi_sigma_hz * normal(rng);
        if (!(chi_r > 0.0)) continue;
        const auto pg = crossing_power(cal.slice_powers_dbm, trial, 2.0 * chi_r);
        const double q_r = fit.q + d(1);
        const double qc_r = fit.q_c + d(2);
        if (!pg || !(q_r > 0.0) || !(qc_r > 0.0)) continue;
        const double att = p_cav_n1_dbm(fit.f_res_hz + d(0), q_r, qc_r, options.power_model) - *pg;
        sum += att;
        sum2 += att * att;
        ++count;
    }
    if (count > 1) {
        const double mean = sum / count;
        cal.uncertainty_db = std::sqrt(std::max(sum2 / count - mean * mean, 0.0) * count / (count - 1));
    }
    return cal;
}

}  // namespace readout::calfit
