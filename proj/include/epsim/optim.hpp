// Small dense optimizers used by the fitters: L-BFGS with analytic
// gradients for the tomography likelihood, Levenberg-Marquardt with a
// forward-difference Jacobian for the CAR curve fit, and an enumerated
// nonnegative least-squares solver for the singles curve.

#pragma once

#include <Eigen/Dense>

#include <functional>

namespace epsim {

struct ObjectiveValue {
    double value = 0.0;
    Eigen::VectorXd gradient;
};

using Objective = std::function<ObjectiveValue(const Eigen::VectorXd&)>;

struct LbfgsOptions {
    int max_iterations = 10000;
    double gradient_tolerance = 1e-8;
    int history = 10;
};

struct LbfgsResult {
    Eigen::VectorXd x;
    double value = 0.0;
    double gradient_norm = 0.0;
    int iterations = 0;
    bool converged = false;
};

LbfgsResult minimize_lbfgs(const Objective& f, Eigen::VectorXd x0,
                           const LbfgsOptions& opt = {});

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct LmOptions {
    int max_iterations = 400;
    double step_tolerance = 1e-12;
    double chi2_tolerance = 1e-14;
};

struct LmResult {
    Eigen::VectorXd x;
    double chi2 = 0.0;
    int iterations = 0;
    bool converged = false;
};

LmResult fit_levenberg_marquardt(const ResidualFn& residuals, Eigen::VectorXd x0,
                                 const LmOptions& opt = {});

/// Weighted least squares on y ~ X c subject to c >= 0, solved exactly by
/// enumerating active sets (intended for a handful of columns).
Eigen::VectorXd nonnegative_least_squares(const Eigen::MatrixXd& X,
                                          const Eigen::VectorXd& y,
                                          const Eigen::VectorXd& weights);

}  // namespace epsim
