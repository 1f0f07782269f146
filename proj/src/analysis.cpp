#include "epsim/analysis.hpp"

#include "epsim/optim.hpp"
#include "epsim/photonics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace epsim {

CarEstimate estimate_car(const CoincidenceHistogram& h) {
    CarEstimate e;
    e.window_counts = h.window_total;
    e.accidental_counts = h.accidental_total;
    if (h.accidental_total == 0) {
        e.value = static_cast<double>(h.window_total);
        e.sigma = e.value > 0.0 ? e.value / std::sqrt(static_cast<double>(h.window_total)) : 0.0;
        e.lower_bound = true;
        return e;
    }
    const double w = static_cast<double>(h.window_total);
    const double a = static_cast<double>(h.accidental_total);
    e.value = w / a;
    e.sigma = w > 0.0 ? e.value * std::sqrt(1.0 / w + 1.0 / a) : 0.0;
    return e;
}

FringeFit fit_fringe(const std::vector<FringePoint>& points, double accidental_level,
                     double accidental_sigma) {
    if (points.size() < 5)
        throw std::invalid_argument("fit_fringe: need at least 5 points");
    double span_min = points.front().phase_rad, span_max = points.front().phase_rad;
    for (const auto& p : points) {
        span_min = std::min(span_min, p.phase_rad);
        span_max = std::max(span_max, p.phase_rad);
    }
    if (span_max - span_min < M_PI)
        throw std::invalid_argument("fit_fringe: points must span more than half a period");

    const auto n = static_cast<Eigen::Index>(points.size());
    Eigen::MatrixXd X(n, 3);
    Eigen::VectorXd y(n), w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        X(i, 0) = 1.0;
        X(i, 1) = std::cos(points[static_cast<std::size_t>(i)].phase_rad);
        X(i, 2) = std::sin(points[static_cast<std::size_t>(i)].phase_rad);
        y(i) = points[static_cast<std::size_t>(i)].counts;
        w(i) = 1.0 / std::max(y(i), 1.0);  // Poisson weights
    }
    const Eigen::MatrixXd Xw = w.asDiagonal() * X;
    const Eigen::Matrix3d M = X.transpose() * Xw;
    if (std::abs(M.determinant()) < 1e-12)
        throw std::runtime_error("fit_fringe: singular design matrix");
    const Eigen::Matrix3d cov = M.inverse();
    const Eigen::Vector3d c = cov * (Xw.transpose() * y);

    FringeFit f;
    const double c0 = c(0), c1 = c(1), c2 = c(2);
    const double amp = std::hypot(c1, c2);
    f.amplitude = c0;
    f.amplitude_sigma = std::sqrt(std::max(cov(0, 0), 0.0));
    f.phase_offset = std::atan2(c2, c1);
    f.chi2 = (w.array() * (y - X * c).array().square()).sum();

    const auto propagate = [&](const Eigen::Vector3d& g) {
        return std::sqrt(std::max((g.transpose() * cov * g)(0, 0), 0.0));
    };

    if (c0 <= 0.0) throw std::runtime_error("fit_fringe: nonpositive fitted mean level");
    f.visibility_raw = amp / c0;
    {
        Eigen::Vector3d g(-amp / (c0 * c0), c1 / (amp * c0), c2 / (amp * c0));
        if (amp == 0.0) g << 0, 0, 0;
        f.visibility_raw_sigma = propagate(g);
    }
    const double net_base = c0 - accidental_level;
    if (net_base > 0.0) {
        f.visibility_net = amp / net_base;
        Eigen::Vector3d g(-amp / (net_base * net_base), c1 / (amp * net_base),
                          c2 / (amp * net_base));
        if (amp == 0.0) g << 0, 0, 0;
        const double from_fit = (g.transpose() * cov * g)(0, 0);
        const double from_acc =
            std::pow(amp / (net_base * net_base) * accidental_sigma, 2);
        f.visibility_net_sigma = std::sqrt(std::max(from_fit + from_acc, 0.0));
    } else {
        f.visibility_net = f.visibility_raw;
        f.visibility_net_sigma = f.visibility_raw_sigma;
    }
    {
        const double a2 = amp * amp;
        Eigen::Vector3d g(0.0, -c2 / a2, c1 / a2);
        if (amp == 0.0) g << 0, 0, 0;
        f.phase_offset_sigma = propagate(g);
    }
    return f;
}

FrequencyFit fit_fringe_frequency(const std::vector<FringePoint>& points, double omega_min,
                                  double omega_max) {
    if (points.size() < 6)
        throw std::invalid_argument("fit_fringe_frequency: need at least 6 points");
    const auto n = static_cast<Eigen::Index>(points.size());
    Eigen::VectorXd y(n), phase(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        y(i) = points[static_cast<std::size_t>(i)].counts;
        phase(i) = points[static_cast<std::size_t>(i)].phase_rad;
    }

    const auto sse_at = [&](double omega, double* vis) {
        Eigen::MatrixXd X(n, 3);
        for (Eigen::Index i = 0; i < n; ++i) {
            X(i, 0) = 1.0;
            X(i, 1) = std::cos(omega * phase(i));
            X(i, 2) = std::sin(omega * phase(i));
        }
        const Eigen::Vector3d c =
            (X.transpose() * X).ldlt().solve(X.transpose() * y);
        if (vis) *vis = c(0) > 0.0 ? std::hypot(c(1), c(2)) / c(0) : 0.0;
        return (y - X * c).squaredNorm();
    };

    const double step = 0.005;
    double best_omega = omega_min, best_sse = std::numeric_limits<double>::infinity();
    for (double omega = omega_min; omega <= omega_max + 1e-12; omega += step) {
        const double sse = sse_at(omega, nullptr);
        if (sse < best_sse) {
            best_sse = sse;
            best_omega = omega;
        }
    }
    // Parabolic refinement on the grid minimum.
    double refined = best_omega;
    if (best_omega > omega_min + step / 2 && best_omega < omega_max - step / 2) {
        const double sm = sse_at(best_omega - step, nullptr);
        const double sp = sse_at(best_omega + step, nullptr);
        const double denom = sm - 2.0 * best_sse + sp;
        if (denom > 1e-30) refined = best_omega + 0.5 * step * (sm - sp) / denom;
    }
    FrequencyFit f;
    f.omega = refined;
    f.sse = sse_at(refined, &f.visibility);
    return f;
}

// ---------------------------------------------------------------------------

ChshAngles reference_chsh_angles() {
    const double d = M_PI / 180.0;
    return ChshAngles{{-22.5 * d, 22.5 * d}, {-45.0 * d, 0.0}};
}

std::string ChshSignAssignment::describe() const {
    std::string out;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            out += (s[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] > 0 ? '+' : '-');
            out += "E" + std::to_string(i + 1) + std::to_string(j + 1);
            if (!(i == 1 && j == 1)) out += ' ';
        }
    return out;
}

namespace {

double analytic_e(const DensityMatrix& rho, double a, double b) {
    const auto proj = [&](double ta, double tb) {
        return born_probability(rho, Projector::product(qubit::linear(ta), qubit::linear(tb)));
    };
    const double o = M_PI / 2.0;
    return proj(a, b) + proj(a + o, b + o) - proj(a, b + o) - proj(a + o, b);
}

}  // namespace

ChshSignAssignment fix_signs_for_target(const DensityMatrix& target, const ChshAngles& angles) {
    double e[2][2];
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            e[i][j] = analytic_e(target, angles.a_rad[static_cast<std::size_t>(i)],
                                 angles.b_rad[static_cast<std::size_t>(j)]);
    ChshSignAssignment best;
    double best_abs = -1.0;
    for (int neg = 0; neg < 4; ++neg) {
        double s = 0.0;
        ChshSignAssignment cand;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                const int sign = (2 * i + j == neg) ? -1 : 1;
                cand.s[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = sign;
                s += sign * e[i][j];
            }
        if (std::abs(s) > best_abs) {
            best_abs = std::abs(s);
            best = cand;
            if (s < 0.0)
                for (auto& row : best.s)
                    for (auto& v : row) v = -v;
        }
    }
    return best;
}

ChshResult chsh_from_counts(const ChshCountMatrix& n, const ChshSignAssignment& signs) {
    ChshResult r;
    r.signs = signs;
    double s = 0.0, var = 0.0;
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t j = 0; j < 2; ++j) {
            const double n_pp = static_cast<double>(n[2 * i][2 * j]);
            const double n_mm = static_cast<double>(n[2 * i + 1][2 * j + 1]);
            const double n_pm = static_cast<double>(n[2 * i][2 * j + 1]);
            const double n_mp = static_cast<double>(n[2 * i + 1][2 * j]);
            const double plus = n_pp + n_mm;
            const double minus = n_pm + n_mp;
            const double total = plus + minus;
            if (total <= 0.0) throw std::invalid_argument("chsh_from_counts: empty setting block");
            r.e[i][j] = (plus - minus) / total;
            r.e_sigma[i][j] = std::sqrt(4.0 * plus * minus / (total * total * total));
            s += signs.s[i][j] * r.e[i][j];
            var += r.e_sigma[i][j] * r.e_sigma[i][j];
        }
    }
    r.s = s;
    r.s_sigma = std::sqrt(var);
    return r;
}

ChshResult chsh_from_state(const DensityMatrix& rho, const ChshAngles& angles,
                           const ChshSignAssignment& signs) {
    ChshResult r;
    r.signs = signs;
    double s = 0.0;
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) {
            r.e[i][j] = analytic_e(rho, angles.a_rad[i], angles.b_rad[j]);
            s += signs.s[i][j] * r.e[i][j];
        }
    r.s = s;
    return r;
}

std::vector<std::pair<std::string, std::array<double, 2>>> chsh_setting_list(const ChshAngles& a) {
    std::vector<std::pair<std::string, std::array<double, 2>>> out;
    const double o = M_PI / 2.0;
    const std::array<double, 4> sa{a.a_rad[0], a.a_rad[0] + o, a.a_rad[1], a.a_rad[1] + o};
    const std::array<double, 4> sb{a.b_rad[0], a.b_rad[0] + o, a.b_rad[1], a.b_rad[1] + o};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            char label[64];
            std::snprintf(label, sizeof label, "ts=%.1fdeg,ti=%.1fdeg",
                          sa[static_cast<std::size_t>(i)] * 180.0 / M_PI,
                          sb[static_cast<std::size_t>(j)] * 180.0 / M_PI);
            out.push_back({label, {sa[static_cast<std::size_t>(i)], sb[static_cast<std::size_t>(j)]}});
        }
    return out;
}

ChshCountMatrix chsh_counts_from_record(const CountsRecord& rec) {
    if (rec.rows.size() != 16)
        throw std::invalid_argument("chsh_counts_from_record: need 16 rows");
    ChshCountMatrix m{};
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) m[i][j] = rec.rows[4 * i + j].coincidences;
    return m;
}

// ---------------------------------------------------------------------------

double CarCurveFit::car_at(double pump_mW, const CarFitContext& ctx) const {
    SourceParams sp;
    sp.xi = xi;
    sp.raman_s = raman;
    sp.raman_i = raman;
    DetectorParams ds = ctx.det_s, di = ctx.det_i;
    ds.dark_rate = dark;
    di.dark_rate = dark;
    return predicted_car(sp, ds, di, ctx.t_s, ctx.t_i, pump_mW, ctx.window_s, ctx.channel_k);
}

CarCurveFit fit_car_curve(const std::vector<CarCurvePoint>& points, const CarFitContext& ctx) {
    if (points.size() < 5)
        throw std::invalid_argument("fit_car_curve: need at least 5 points");

    CarCurveFit fit;
    // Degenerate when the maximum CAR sits at either end of the power range.
    std::size_t argmax = 0;
    for (std::size_t i = 1; i < points.size(); ++i)
        if (points[i].car > points[argmax].car) argmax = i;
    fit.degenerate_data = (argmax == 0 || argmax + 1 == points.size());

    const auto residuals_for = [&](const Eigen::VectorXd& logp) {
        CarCurveFit trial;
        trial.xi = std::exp(logp(0));
        trial.raman = std::exp(logp(1));
        trial.dark = std::exp(logp(2));
        Eigen::VectorXd r(static_cast<Eigen::Index>(points.size()));
        for (std::size_t i = 0; i < points.size(); ++i) {
            const double model = trial.car_at(points[i].pump_mW, ctx);
            r(static_cast<Eigen::Index>(i)) =
                (model - points[i].car) / std::max(points[i].sigma, 1e-9);
        }
        return r;
    };

    // Multistart over coefficient decades; the model is cheap to evaluate.
    double best_chi2 = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best = Eigen::VectorXd::Zero(3);
    bool best_converged = false;
    for (const double lx : {4.0, 5.0, 6.0, 7.0})
        for (const double lr : {4.0, 5.0, 6.0, 7.0})
            for (const double ld : {2.0, 3.0, 4.0}) {
                Eigen::VectorXd x0(3);
                x0 << lx * std::numbers::ln10, lr * std::numbers::ln10, ld * std::numbers::ln10;
                const LmResult res = fit_levenberg_marquardt(residuals_for, x0);
                if (res.chi2 < best_chi2) {
                    best_chi2 = res.chi2;
                    best = res.x;
                    best_converged = res.converged;
                }
            }
    fit.xi = std::exp(best(0));
    fit.raman = std::exp(best(1));
    fit.dark = std::exp(best(2));
    fit.chi2 = best_chi2;
    fit.converged = best_converged && !fit.degenerate_data;
    return fit;
}

SinglesCurveFit fit_singles_curve(const std::vector<SinglesCurvePoint>& points) {
    if (points.size() < 4)
        throw std::invalid_argument("fit_singles_curve: need at least 4 points");
    const auto n = static_cast<Eigen::Index>(points.size());
    Eigen::MatrixXd X(n, 3);
    Eigen::VectorXd y(n), w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& p = points[static_cast<std::size_t>(i)];
        X(i, 0) = p.pump_mW * p.pump_mW;
        X(i, 1) = p.pump_mW;
        X(i, 2) = 1.0;
        y(i) = p.rate;
        w(i) = 1.0 / std::max(p.sigma * p.sigma, 1e-12);
    }
    const Eigen::VectorXd c = nonnegative_least_squares(X, y, w);
    SinglesCurveFit f;
    f.quadratic = c(0);
    f.linear = c(1);
    f.constant = c(2);
    f.chi2 = (w.array() * (y - X * c).array().square()).sum();
    // An exactly-zero coefficient marks an active nonnegativity constraint.
    const Eigen::Vector3d unconstrained =
        (X.transpose() * w.asDiagonal() * X).ldlt().solve(X.transpose() * w.asDiagonal() * y);
    f.constraint_active = unconstrained.minCoeff() < 0.0;
    return f;
}

}  // namespace epsim
