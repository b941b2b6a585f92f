#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "least_squares.hpp"
#include "readout/calfit.hpp"
#include "readout/common.hpp"
#include "readout/csv.hpp"

namespace readout::calfit {

namespace {

using cd = std::complex<double>;

cd hanger(double f, double f0, double q, double q_c, double phi, cd amplitude) {
    return amplitude * (1.0 - (q / q_c) * std::polar(1.0, phi) / cd(1.0, 2.0 * q * (f - f0) / f0));
}

double median(std::vector<double> v) {
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    return *mid;
}

// Kasa algebraic circle fit; returns {center, radius}.
std::pair<cd, double> circle_fit(const std::vector<cd>& z) {
    Eigen::MatrixXd a(static_cast<Eigen::Index>(z.size()), 3);
    Eigen::VectorXd b(static_cast<Eigen::Index>(z.size()));
    for (std::size_t i = 0; i < z.size(); ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        a(k, 0) = z[i].real();
        a(k, 1) = z[i].imag();
        a(k, 2) = 1.0;
        b(k) = -std::norm(z[i]);
    }
    const Eigen::Vector3d s = a.colPivHouseholderQr().solve(b);
    const cd center(-s(0) / 2.0, -s(1) / 2.0);
    const double r2 = std::norm(center) - s(2);
    return {center, r2 > 0.0 ? std::sqrt(r2) : 0.0};
}

}  // namespace

std::complex<double> ResonatorFit::model(double freq_hz) const {
    return hanger(freq_hz, f_res_hz, q, q_c, phi_rad, amplitude);
}

ComplexTrace read_s21_csv(const std::filesystem::path& path) {
    const auto table = csv::read(path);
    const auto fc = table.column("frequency_Hz");
    const auto rc = table.column("re");
    const auto ic = table.column("im");
    ComplexTrace t;
    for (const auto& r : table.rows) {
        t.freqs_hz.push_back(r[fc]);
        t.s21.emplace_back(r[rc], r[ic]);
    }
    for (std::size_t i = 1; i < t.freqs_hz.size(); ++i) {
        if (!(t.freqs_hz[i] > t.freqs_hz[i - 1])) {
            throw DataError(path.string() + ": frequencies must be strictly increasing");
        }
    }
    return t;
}

void write_s21_csv(const ComplexTrace& trace, const std::filesystem::path& path) {
    csv::Writer w({"frequency_Hz", "re", "im"});
    for (std::size_t i = 0; i < trace.freqs_hz.size(); ++i) {
        w.row({trace.freqs_hz[i], trace.s21[i].real(), trace.s21[i].imag()});
    }
    w.save(path);
}

ResonatorFit fit_resonator(const ComplexTrace& trace) {
    const auto& f = trace.freqs_hz;
    const auto& z = trace.s21;
    const std::size_t n = f.size();
    if (z.size() != n) {
        throw std::invalid_argument("fit_resonator: frequency and S21 lengths differ");
    }
    if (n < 50) {
        throw std::invalid_argument("fit_resonator: need at least 50 points");
    }

    // Off-resonance baseline from both ends of the sweep.
    const std::size_t k = std::max<std::size_t>(3, n / 20);
    cd baseline(0.0, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        baseline += z[i] + z[n - 1 - i];
    }
    baseline /= static_cast<double>(2 * k);

    std::vector<double> steps;
    steps.reserve(n - 1);
    for (std::size_t i = 1; i < n; ++i) {
        steps.push_back(std::abs(z[i] - z[i - 1]));
    }
    const double noise = median(steps) / (std::sqrt(2.0) * 1.17741);

    std::vector<double> dev(n);
    for (std::size_t i = 0; i < n; ++i) {
        dev[i] = std::abs(z[i] - baseline);
    }
    const auto i_res = static_cast<std::size_t>(std::max_element(dev.begin(), dev.end()) - dev.begin());
    const double depth = dev[i_res];
    if (!(depth > 8.0 * noise) || !(depth > 1e-9 * std::abs(baseline))) {
        throw FitError("fit_resonator: no dip found");
    }

    const double half = depth / std::sqrt(2.0);
    std::size_t lo = i_res;
    while (lo > 0 && dev[lo - 1] >= half) --lo;
    std::size_t hi = i_res;
    while (hi + 1 < n && dev[hi + 1] >= half) ++hi;
    const double spacing = (f.back() - f.front()) / static_cast<double>(n - 1);
    const double fwhm0 = std::max(f[hi] - f[lo] + spacing, spacing);
    const double f0 = f[i_res];
    const double q0 = f0 / fwhm0;
    if (f.back() - f.front() < 5.0 * fwhm0) {
        throw std::invalid_argument("fit_resonator: trace spans fewer than 5 linewidths");
    }

    const auto [center, radius] = circle_fit(z);
    double diameter = 2.0 * radius;
    if (!(diameter > 0.0) || diameter > 4.0 * depth) {
        diameter = depth;
    }
    const double ratio = std::clamp(diameter / std::abs(baseline), 1e-6, 1.0);
    const double qc0 = q0 / ratio;
    const double phi0 = std::arg((baseline - z[i_res]) / baseline);

    Eigen::VectorXd theta0(6);
    theta0 << f0, q0, qc0, phi0, baseline.real(), baseline.imag();
    Eigen::VectorXd scales(6);
    const double amp_scale = 0.01 * std::abs(baseline);
    scales << 0.1 * fwhm0, 0.1 * q0, 0.1 * qc0, 0.1, amp_scale, amp_scale;

    const int m = static_cast<int>(2 * n);
    auto residual = [&](const Eigen::VectorXd& t, Eigen::VectorXd& r) {
        const cd amp(t[4], t[5]);
        for (std::size_t i = 0; i < n; ++i) {
            const cd d = hanger(f[i], t[0], t[1], t[2], t[3], amp) - z[i];
            r[static_cast<Eigen::Index>(2 * i)] = d.real();
            r[static_cast<Eigen::Index>(2 * i + 1)] = d.imag();
        }
    };
    const auto ls = detail::fit_least_squares(residual, m, theta0, scales);
    if (!ls.converged) {
        throw FitError("fit_resonator: fit not converged within iteration cap");
    }

    ResonatorFit out;
    out.f_res_hz = ls.theta[0];
    out.q = std::abs(ls.theta[1]);
    out.q_c = std::abs(ls.theta[2]);
    out.phi_rad = std::remainder(ls.theta[3], two_pi);
    out.amplitude = cd(ls.theta[4], ls.theta[5]);
    out.covariance = ls.covariance;
    out.residual_rms = std::sqrt(ls.ssr / m);
    out.n_points = static_cast<int>(n);
    if (!(out.f_res_hz >= f.front() && out.f_res_hz <= f.back()) || !(out.q > 0.0) ||
        !(out.q_c > 0.0) || !std::isfinite(out.q) || !std::isfinite(out.q_c)) {
        throw FitError("fit_resonator: fit converged outside the physical region");
    }
    const double inv_qi = 1.0 / out.q - std::cos(out.phi_rad) / out.q_c;
    out.q_int = inv_qi > 0.0 ? 1.0 / inv_qi : std::numeric_limits<double>::infinity();
    return out;
}

ChiEstimate extract_chi(const ComplexTrace& trace0, const ComplexTrace& trace1) {
    ChiEstimate e;
    e.state0 = fit_resonator(trace0);
    e.state1 = fit_resonator(trace1);
    e.chi_hz = 0.5 * (e.state0.f_res_hz - e.state1.f_res_hz);
    e.sigma_hz = 0.5 * std::hypot(e.state0.sigma_f_res(), e.state1.sigma_f_res());
    return e;
}

LorentzianFit fit_lorentzian(std::span<const double> freqs_hz, std::span<const double> response) {
    LorentzianFit out;
    const std::size_t n = freqs_hz.size();
    if (n != response.size() || n < 8) {
        return out;
    }
    std::vector<double> v(response.begin(), response.end());
    const double offset0 = median(v);
    const auto i_max = static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
    const double amp0 = v[i_max] - offset0;

    std::vector<double> steps;
    for (std::size_t i = 1; i < n; ++i) {
        steps.push_back(std::abs(v[i] - v[i - 1]));
    }
    const double noise = median(steps) / (std::sqrt(2.0) * 0.6745);
    if (!(amp0 > 5.0 * noise) || !(amp0 > 0.0)) {
        return out;
    }

    const double half = offset0 + 0.5 * amp0;
    std::size_t lo = i_max;
    while (lo > 0 && v[lo - 1] >= half) --lo;
    std::size_t hi = i_max;
    while (hi + 1 < n && v[hi + 1] >= half) ++hi;
    const double spacing = (freqs_hz.back() - freqs_hz.front()) / static_cast<double>(n - 1);
    const double w0 = std::max(freqs_hz[hi] - freqs_hz[lo] + spacing, 2.0 * spacing);

    Eigen::VectorXd theta0(4);
    theta0 << freqs_hz[i_max], w0, amp0, offset0;
    Eigen::VectorXd scales(4);
    scales << 0.1 * w0, 0.1 * w0, 0.1 * amp0, 0.1 * amp0;
    auto residual = [&](const Eigen::VectorXd& t, Eigen::VectorXd& r) {
        for (std::size_t i = 0; i < n; ++i) {
            const double u = 2.0 * (freqs_hz[i] - t[0]) / t[1];
            r[static_cast<Eigen::Index>(i)] = t[2] / (1.0 + u * u) + t[3] - v[i];
        }
    };
    const auto ls = detail::fit_least_squares(residual, static_cast<int>(n), theta0, scales);
    out.center_hz = ls.theta[0];
    out.fwhm_hz = std::abs(ls.theta[1]);
    out.amplitude = ls.theta[2];
    out.offset = ls.theta[3];
    out.sigma_center_hz = std::sqrt(std::max(ls.covariance(0, 0), 0.0));
    out.ok = ls.converged && out.amplitude > 0.0 && out.center_hz >= freqs_hz.front() &&
             out.center_hz <= freqs_hz.back() && std::isfinite(out.sigma_center_hz);
    return out;
}

}  // namespace readout::calfit
