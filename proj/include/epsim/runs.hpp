// Canned measurement runs built on counts-mode simulation: parameter scans,
// the 16-combination CHSH run and the 16-setting tomography run.

#pragma once

#include "epsim/analysis.hpp"
#include "epsim/engine.hpp"
#include "epsim/tomography.hpp"

#include <functional>
#include <string>
#include <vector>

namespace epsim {

/// Counts-mode run of `base` at each x, with `apply` mutating the scenario
/// (power, phase, analyzer angle, ...). Seeds stay tied to the base seed.
CountsRecord scan_counts(const Scenario& base, const std::vector<double>& xs,
                         const std::function<void(Scenario&, double)>& apply,
                         const std::string& label_prefix);

/// CAR from one counts row (window / accidental, Poisson errors).
CarEstimate car_from_counts(const SettingCounts& row);

/// Fringe points from a scan: phase values against coincidence counts,
/// plus the mean accidental level and its standard error.
struct FringeScan {
    std::vector<FringePoint> points;
    double accidental_mean = 0.0;
    double accidental_sigma = 0.0;
};
FringeScan fringe_scan(const Scenario& base, const std::vector<double>& phases,
                       const std::function<void(Scenario&, double)>& apply);

/// The 16 CHSH orientation combos for a polarization scenario.
CountsRecord chsh_run(const Scenario& pol_base, const ChshAngles& angles);

/// The 16 tomography settings for a polarization scenario.
CountsRecord tomography_run(const Scenario& pol_base);

/// Fringe fit of a scan (counts vs phase).
FringeFit fit_fringe_scan(const FringeScan& scan);

/// CAR from a time-tag run with central-peak post-selection: when the
/// window is wide enough to reach the UMI side peaks at +-delay, their
/// bins are excised from the window total and the accidental estimate is
/// rescaled to the remaining window width.
CarEstimate car_central_peak(const SimulationResult& run, const Scenario& sc,
                             double window_s);

}  // namespace epsim
