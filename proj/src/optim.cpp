#include "epsim/optim.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

namespace epsim {

LbfgsResult minimize_lbfgs(const Objective& f, Eigen::VectorXd x0, const LbfgsOptions& opt) {
    const auto n = x0.size();
    LbfgsResult res;
    res.x = std::move(x0);

    ObjectiveValue cur = f(res.x);
    std::deque<Eigen::VectorXd> s_hist, y_hist;
    std::deque<double> rho_hist;

    for (res.iterations = 0; res.iterations < opt.max_iterations; ++res.iterations) {
        res.gradient_norm = cur.gradient.norm();
        if (res.gradient_norm < opt.gradient_tolerance) {
            res.converged = true;
            break;
        }

        // Two-loop recursion.
        Eigen::VectorXd q = cur.gradient;
        std::vector<double> alpha(s_hist.size());
        for (std::size_t i = s_hist.size(); i-- > 0;) {
            alpha[i] = rho_hist[i] * s_hist[i].dot(q);
            q -= alpha[i] * y_hist[i];
        }
        if (!s_hist.empty()) {
            const auto& s = s_hist.back();
            const auto& y = y_hist.back();
            q *= s.dot(y) / y.dot(y);
        }
        for (std::size_t i = 0; i < s_hist.size(); ++i) {
            const double beta = rho_hist[i] * y_hist[i].dot(q);
            q += (alpha[i] - beta) * s_hist[i];
        }
        Eigen::VectorXd dir = -q;
        double slope = cur.gradient.dot(dir);
        if (!(slope < 0.0)) {  // fall back to steepest descent
            dir = -cur.gradient;
            slope = -cur.gradient.squaredNorm();
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
        }

        // Backtracking Armijo line search.
        double step = 1.0;
        ObjectiveValue next;
        Eigen::VectorXd x_next(n);
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            x_next = res.x + step * dir;
            next = f(x_next);
            if (std::isfinite(next.value) && next.value <= cur.value + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;  // stuck at numerical resolution

        const Eigen::VectorXd s = x_next - res.x;
        const Eigen::VectorXd y = next.gradient - cur.gradient;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            s_hist.push_back(s);
            y_hist.push_back(y);
            rho_hist.push_back(1.0 / sy);
            if (static_cast<int>(s_hist.size()) > opt.history) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
        }
        res.x = std::move(x_next);
        cur = std::move(next);
    }
    res.value = cur.value;
    res.gradient_norm = cur.gradient.norm();
    if (res.gradient_norm < opt.gradient_tolerance) res.converged = true;
    return res;
}

LmResult fit_levenberg_marquardt(const ResidualFn& residuals, Eigen::VectorXd x0,
                                 const LmOptions& opt) {
    LmResult res;
    res.x = std::move(x0);
    const auto n = res.x.size();

    Eigen::VectorXd r = residuals(res.x);
    double chi2 = r.squaredNorm();
    double lambda = 1e-3;

    const auto jacobian = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& r0) {
        Eigen::MatrixXd J(r0.size(), n);
        for (Eigen::Index k = 0; k < n; ++k) {
            const double h = 1e-7 * std::max(1.0, std::abs(x(k)));
            Eigen::VectorXd xp = x;
            xp(k) += h;
            J.col(k) = (residuals(xp) - r0) / h;
        }
        return J;
    };

    for (res.iterations = 0; res.iterations < opt.max_iterations; ++res.iterations) {
        const Eigen::MatrixXd J = jacobian(res.x, r);
        const Eigen::MatrixXd JtJ = J.transpose() * J;
        const Eigen::VectorXd g = J.transpose() * r;

        bool improved = false;
        for (int tries = 0; tries < 30; ++tries) {
            Eigen::MatrixXd A = JtJ;
            A.diagonal() += lambda * JtJ.diagonal().cwiseMax(1e-12);
            const Eigen::VectorXd step = A.ldlt().solve(-g);
            const Eigen::VectorXd x_new = res.x + step;
            const Eigen::VectorXd r_new = residuals(x_new);
            const double chi2_new = r_new.squaredNorm();
            if (std::isfinite(chi2_new) && chi2_new < chi2) {
                const double dchi = chi2 - chi2_new;
                const double dstep = step.norm();
                res.x = x_new;
                r = r_new;
                chi2 = chi2_new;
                lambda = std::max(lambda * 0.3, 1e-12);
                improved = true;
                if (dstep < opt.step_tolerance * (res.x.norm() + opt.step_tolerance) ||
                    dchi < opt.chi2_tolerance * std::max(chi2, 1.0)) {
                    res.converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if (!improved) {
            res.converged = true;  // no further progress possible
            break;
        }
        if (res.converged) break;
    }
    res.chi2 = chi2;
    return res;
}

Eigen::VectorXd nonnegative_least_squares(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                          const Eigen::VectorXd& weights) {
    const auto n = X.cols();
    if (n > 20) throw std::invalid_argument("nonnegative_least_squares: too many columns");
    const Eigen::VectorXd w = weights.cwiseSqrt();
    const Eigen::MatrixXd Xw = w.asDiagonal() * X;
    const Eigen::VectorXd yw = w.asDiagonal() * y;

    double best_chi2 = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best = Eigen::VectorXd::Zero(n);
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
        std::vector<Eigen::Index> active;
        for (Eigen::Index k = 0; k < n; ++k)
            if (mask & (1u << k)) active.push_back(k);
        Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
        if (!active.empty()) {
            Eigen::MatrixXd Xa(Xw.rows(), static_cast<Eigen::Index>(active.size()));
            for (std::size_t k = 0; k < active.size(); ++k)
                Xa.col(static_cast<Eigen::Index>(k)) = Xw.col(active[k]);
            const Eigen::VectorXd ca =
                (Xa.transpose() * Xa).ldlt().solve(Xa.transpose() * yw);
            bool feasible = true;
            for (Eigen::Index k = 0; k < ca.size(); ++k)
                if (ca(k) < 0.0) feasible = false;
            if (!feasible) continue;
            for (std::size_t k = 0; k < active.size(); ++k) c(active[k]) = ca(static_cast<Eigen::Index>(k));
        }
        const double chi2 = (yw - Xw * c).squaredNorm();
        if (chi2 < best_chi2 - 1e-12) {
            best_chi2 = chi2;
            best = c;
        }
    }
    return best;
}

}  // namespace epsim
