// Estimators and fitters that turn counts into reported quantities:
// CAR, raw/net fringe visibility, CHSH S, and the power-dependence fits.

#pragma once

#include "epsim/engine.hpp"
#include "epsim/qstate.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace epsim {

struct CarEstimate {
    double value = 0.0;
    double sigma = 0.0;
    bool lower_bound = false;  // set when the accidental window was empty
    std::uint64_t window_counts = 0;
    std::uint64_t accidental_counts = 0;
};

/// CAR = window total / accidental total with Poisson error propagation.
/// Zero accidentals are reported as a lower bound (window total / 1), flagged.
CarEstimate estimate_car(const CoincidenceHistogram& h);

struct FringePoint {
    double phase_rad = 0.0;
    double counts = 0.0;
};

struct FringeFit {
    double amplitude = 0.0;        // mean level A of A(1 + V cos(phi - phi0))
    double amplitude_sigma = 0.0;
    double visibility_raw = 0.0;
    double visibility_raw_sigma = 0.0;
    double visibility_net = 0.0;
    double visibility_net_sigma = 0.0;
    double phase_offset = 0.0;
    double phase_offset_sigma = 0.0;
    double chi2 = 0.0;
};

/// Poisson-weighted least squares of A (1 + V cos(phi - phi0)), linear in
/// (c0, c1, c2) = (A, A V cos phi0, A V sin phi0). The net visibility
/// subtracts the externally measured accidental level per point.
FringeFit fit_fringe(const std::vector<FringePoint>& points, double accidental_level,
                     double accidental_sigma = 0.0);

struct FrequencyFit {
    double omega = 0.0;  // fitted angular frequency (fringes per 2pi of phase)
    double visibility = 0.0;
    double sse = 0.0;
};

/// Profile least-squares scan over the fringe frequency, for period checks.
FrequencyFit fit_fringe_frequency(const std::vector<FringePoint>& points,
                                  double omega_min = 0.25, double omega_max = 4.0);

// ---------------------------------------------------------------------------
// CHSH

struct ChshAngles {
    // Analyzer angles in radians: a1, a2 for the signal, b1, b2 for the idler.
    std::array<double, 2> a_rad{};
    std::array<double, 2> b_rad{};
};

/// The reference measurement settings: a = {-22.5, 22.5} deg, b = {-45, 0}
/// deg, with the
/// orthogonal complements a+90, b+90 completing the 16 orientation combos.
ChshAngles reference_chsh_angles();

struct ChshSignAssignment {
    // s[i][j] multiplies E(a_i, b_j); fixed a priori from the target state.
    std::array<std::array<int, 2>, 2> s{{{1, 1}, {1, 1}}};
    std::string describe() const;
};

/// Choose the assignment (one negated term, overall sign) that maximizes |S|
/// for the analytic correlations of the target state.
ChshSignAssignment fix_signs_for_target(const DensityMatrix& target, const ChshAngles& angles);

struct ChshResult {
    std::array<std::array<double, 2>, 2> e{};        // E(a_i, b_j)
    std::array<std::array<double, 2>, 2> e_sigma{};
    double s = 0.0;
    double s_sigma = 0.0;
    ChshSignAssignment signs;
    double sigma_violation() const { return s_sigma > 0.0 ? (std::abs(s) - 2.0) / s_sigma : 0.0; }
};

/// Counts for the 16 orientation combos: n[i][j] with the signal setting
/// index i over (a1, a1+90, a2, a2+90) and idler j over (b1, b1+90, b2, b2+90).
using ChshCountMatrix = std::array<std::array<std::uint64_t, 4>, 4>;

ChshResult chsh_from_counts(const ChshCountMatrix& n, const ChshSignAssignment& signs);

/// Analytic CHSH from Born probabilities (no statistics, sigma = 0).
ChshResult chsh_from_state(const DensityMatrix& rho, const ChshAngles& angles,
                           const ChshSignAssignment& signs);

/// The 16 (signal, idler) analyzer pairs for the angle set, row-major, with
/// row labels matching ChshCountMatrix.
std::vector<std::pair<std::string, std::array<double, 2>>> chsh_setting_list(const ChshAngles& a);

/// Assemble the count matrix from a 16-row CountsRecord in the order
/// produced by chsh_setting_list.
ChshCountMatrix chsh_counts_from_record(const CountsRecord& rec);

// ---------------------------------------------------------------------------
// Power-dependence fits

struct CarCurvePoint {
    double pump_mW = 0.0;
    double car = 0.0;
    double sigma = 1.0;
};

struct CarFitContext {
    DetectorParams det_s;
    DetectorParams det_i;
    double t_s = 1.0;  // effective arm transmissions seen by the pairs
    double t_i = 1.0;
    double window_s = 0.8e-9;
    int channel_k = 8;
};

struct CarCurveFit {
    double xi = 0.0;
    double raman = 0.0;        // symmetric per-arm coefficient
    double dark = 0.0;         // effective per-detector dark rate
    double chi2 = 0.0;
    bool converged = false;
    bool degenerate_data = false;  // no interior CAR peak in the input
    double car_at(double pump_mW, const CarFitContext& ctx) const;
};

/// Least-squares fit of the predicted_car model over (P, CAR) points.
CarCurveFit fit_car_curve(const std::vector<CarCurvePoint>& points, const CarFitContext& ctx);

struct SinglesCurveFit {
    double quadratic = 0.0;  // a in a P^2 + b P + d
    double linear = 0.0;     // b
    double constant = 0.0;   // d
    bool constraint_active = false;  // some coefficient pinned at zero
    double chi2 = 0.0;
};

struct SinglesCurvePoint {
    double pump_mW = 0.0;
    double rate = 0.0;   // dead-time corrected counts/s
    double sigma = 1.0;
};

/// Nonnegative least squares on rate = a P^2 + b P + d.
SinglesCurveFit fit_singles_curve(const std::vector<SinglesCurvePoint>& points);

}  // namespace epsim
