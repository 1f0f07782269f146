// Seeded Monte Carlo generation of detection events from the physics models.
//
// A scenario is decomposed into independent Poisson event categories (pair
// outcomes with fixed path delays, noise photons, dark counts). Per time
// block and category, the event count is drawn from its Poisson law and the
// events are placed uniformly on the pump time grid; gating and dead time
// are applied last. Every stream is keyed by (seed, block, category), so
// disjoint time ranges can be generated concurrently and merged without
// changing the result.

#pragma once

#include "epsim/coincidence.hpp"
#include "epsim/scenario.hpp"

#include <string>
#include <utility>
#include <vector>

namespace epsim {

struct EventCategory {
    enum class Placement { grid, uniform, uniform_gated };
    double rate_hz = 0.0;  // pre-dead-time event rate
    bool hit_s = false;
    bool hit_i = false;
    std::int64_t delay_s_ps = 0;
    std::int64_t delay_i_ps = 0;
    Placement placement = Placement::grid;
    int detector = -1;  // uniform placements: 0 = signal, 1 = idler
};

/// Analytic pre/post-dead-time rates implied by a scenario. This is the
/// shared source of truth for counts-mode sampling, CAR prediction and the
/// engine-vs-analytic consistency tests.
struct RateSummary {
    double singles_true_s = 0.0;  // candidate hit rate before dead time
    double singles_true_i = 0.0;
    double singles_obs_s = 0.0;   // after nonparalyzable dead time
    double singles_obs_i = 0.0;
    double live_s = 1.0;          // observed/true
    double live_i = 1.0;
    double window_true_rate = 0.0;       // correlated pairs inside the window, pre dead time
    double accidental_rate_central = 0.0;  // observed, central window
    double accidental_rate_offset = 0.0;   // observed, offset window
    double window_rate_observed = 0.0;     // truth*live^2 + accidentals

    double expected_car() const {
        return accidental_rate_central > 0.0
                   ? 1.0 + window_true_rate * live_s * live_i / accidental_rate_central
                   : std::numeric_limits<double>::infinity();
    }
};

struct EventModel {
    std::vector<EventCategory> categories;
    std::int64_t grid_ps = 100;      // pump time grid (CW slot or pulse period)
    double dark_rate_s = 0.0;        // effective (post-duty) dark rates
    double dark_rate_i = 0.0;
    RateSummary rates;
};

/// Decompose a scenario into event categories and analytic rates.
EventModel build_event_model(const Scenario& sc);

struct SimulationResult {
    TimeTagStream signal;
    TimeTagStream idler;
    std::uint64_t scenario_hash = 0;
    std::uint64_t seed = 0;
};

/// Time-tag mode. Deterministic for a fixed (scenario, seed).
SimulationResult simulate(const Scenario& sc);

struct SettingCounts {
    std::string label;
    std::uint64_t coincidences = 0;  // central window total
    std::uint64_t accidentals = 0;   // offset window total
    std::uint64_t singles_s = 0;
    std::uint64_t singles_i = 0;
};

struct CountsRecord {
    double integration_s = 0.0;
    std::vector<SettingCounts> rows;
};

/// Counts-mode: per setting, draw the window/accidental/singles totals
/// directly from their Poisson laws. Statistically equivalent to counting
/// a time-tag run, and much faster for many-setting scans.
CountsRecord simulate_counts(const Scenario& base,
                             const std::vector<std::pair<std::string, MeasurementSettings>>& settings);

/// Count coincidences of a simulation with the scenario's attached window.
CoincidenceHistogram count_with_scenario_window(const SimulationResult& run,
                                                const Scenario& sc);

}  // namespace epsim
