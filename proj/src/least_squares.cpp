#include "least_squares.hpp"

#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

namespace readout::detail {

namespace {

struct ScaledFunctor {
    using Scalar = double;
    enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
    using InputType = Eigen::VectorXd;
    using ValueType = Eigen::VectorXd;
    using JacobianType = Eigen::MatrixXd;

    const ResidualFn* fn = nullptr;
    const Eigen::VectorXd* theta0 = nullptr;
    const Eigen::VectorXd* scales = nullptr;
    int n_values = 0;

    int inputs() const { return static_cast<int>(theta0->size()); }
    int values() const { return n_values; }

    int operator()(const Eigen::VectorXd& u, Eigen::VectorXd& r) const {
        const Eigen::VectorXd theta = *theta0 + scales->cwiseProduct(u);
        r.resize(n_values);
        (*fn)(theta, r);
        for (int i = 0; i < n_values; ++i) {
            if (!std::isfinite(r[i])) {
                r[i] = 1e150;
            }
        }
        return 0;
    }
};

}  // namespace

LeastSquaresResult fit_least_squares(const ResidualFn& residual, int n_residuals,
                                     const Eigen::VectorXd& theta0, const Eigen::VectorXd& scales,
                                     int max_evaluations) {
    const int n = static_cast<int>(theta0.size());
    ScaledFunctor functor{&residual, &theta0, &scales, n_residuals};
    Eigen::NumericalDiff<ScaledFunctor, Eigen::Central> diff(functor, 1e-7);
    Eigen::LevenbergMarquardt<Eigen::NumericalDiff<ScaledFunctor, Eigen::Central>> lm(diff);
    lm.parameters.maxfev = max_evaluations;
    lm.parameters.xtol = 1e-12;
    lm.parameters.ftol = 1e-14;

    Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
    const auto status = lm.minimize(u);

    LeastSquaresResult out;
    out.theta = theta0 + scales.cwiseProduct(u);
    out.evaluations = static_cast<int>(lm.nfev);
    using namespace Eigen::LevenbergMarquardtSpace;
    out.converged = status == RelativeReductionTooSmall || status == RelativeErrorTooSmall ||
                    status == RelativeErrorAndReductionTooSmall || status == CosinusTooSmall ||
                    status == FtolTooSmall || status == XtolTooSmall || status == GtolTooSmall;

    Eigen::VectorXd r(n_residuals);
    functor(u, r);
    out.ssr = r.squaredNorm();
    out.dof = std::max(1, n_residuals - n);

    Eigen::MatrixXd jac(n_residuals, n);
    Eigen::VectorXd rp(n_residuals);
    Eigen::VectorXd rm(n_residuals);
    for (int j = 0; j < n; ++j) {
        constexpr double h = 1e-6;
        Eigen::VectorXd up = u;
        Eigen::VectorXd dn = u;
        up[j] += h;
        dn[j] -= h;
        functor(up, rp);
        functor(dn, rm);
        jac.col(j) = (rp - rm) / (2.0 * h);
    }
    const double s2 = out.ssr / out.dof;
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::MatrixXd cov_u = s2 * jtj.completeOrthogonalDecomposition().pseudoInverse();
    out.covariance = scales.asDiagonal() * cov_u * scales.asDiagonal();
    return out;
}

}  // namespace readout::detail
