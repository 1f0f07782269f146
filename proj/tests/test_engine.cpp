#include "epsim/engine.hpp"

#include "epsim/analysis.hpp"
#include "epsim/presets.hpp"
#include "epsim/rng.hpp"
#include "epsim/runs.hpp"

#include <doctest.h>

#include <cmath>

using namespace epsim;

namespace {

Scenario et_preset() { return load_preset("energy_time_i8_cw").scenario; }

Scenario noise_only_polarization(double rate_s, double rate_i) {
    Scenario sc;
    sc.scheme = Scheme::polarization;
    sc.source.xi = 0.0;
    // Transmission times 1/2 polarizer passage applies; compensate so the
    // requested rates are the detected ones.
    ArmLossBudget arm;
    arm.detector_efficiency = 1.0;
    sc.arm_s.output_coupling_dB = 0.0;
    sc.arm_s.filter_dB = 0.0;
    sc.arm_i.output_coupling_dB = 0.0;
    sc.arm_i.filter_dB = 0.0;
    sc.det_s.efficiency = 1.0;
    sc.det_i.efficiency = 1.0;
    sc.det_s.dead_time = 0.0;
    sc.det_i.dead_time = 0.0;
    sc.source.raman_s = 2.0 * rate_s;
    sc.source.raman_i = 2.0 * rate_i;
    sc.pump.power_mW = 1.0;
    sc.sagnac.power_ratio = 1.0;
    sc.duration_s = 20.0;
    sc.seed = 99;
    return sc;
}

}  // namespace

TEST_CASE("simulate is deterministic for a fixed seed") {
    Scenario sc = et_preset();
    sc.duration_s = 2.0;
    const SimulationResult a = simulate(sc);
    const SimulationResult b = simulate(sc);
    CHECK(a.signal.timestamps_ps == b.signal.timestamps_ps);
    CHECK(a.idler.timestamps_ps == b.idler.timestamps_ps);

    sc.seed = 2;
    const SimulationResult c = simulate(sc);
    CHECK(a.signal.timestamps_ps != c.signal.timestamps_ps);
}

TEST_CASE("zero pump and zero darks produce empty streams") {
    Scenario sc = et_preset();
    sc.pump.power_mW = 0.0;
    sc.det_s.dark_rate = 0.0;
    sc.det_i.dark_rate = 0.0;
    sc.duration_s = 1.0;
    const SimulationResult r = simulate(sc);
    CHECK(r.signal.size() == 0);
    CHECK(r.idler.size() == 0);
}

TEST_CASE("streams satisfy the dead-time invariant") {
    Scenario sc = et_preset();
    sc.duration_s = 3.0;
    SUBCASE("plain") {}
    SUBCASE("with timing jitter") {
        sc.det_s.jitter_rms = 50e-12;
        sc.det_i.jitter_rms = 50e-12;
    }
    const SimulationResult r = simulate(sc);
    CHECK(r.signal.size() > 0);
    CHECK(r.signal.is_sorted_strict());
    CHECK(r.idler.is_sorted_strict());
    CHECK(r.signal.respects_dead_time());
    CHECK(r.idler.respects_dead_time());
}

TEST_CASE("orthogonal polarizers keep coincidences at the accidental level") {
    Scenario sc;
    sc.scheme = Scheme::polarization;
    sc.source.xi = 2e5;
    sc.pump.power_mW = 1.0;
    sc.det_s.efficiency = 0.2;
    sc.det_i.efficiency = 0.2;
    sc.duration_s = 10.0;
    sc.settings.analyzer_s = Analyzer::from_angle_deg(0.0);
    sc.settings.analyzer_i = Analyzer::from_angle_deg(90.0);
    const SimulationResult r = simulate(sc);
    const CoincidenceHistogram h = count_with_scenario_window(r, sc);
    CHECK(h.window_total == 0);  // no noise sources at all in this scenario
}

TEST_CASE("independent streams reproduce the accidental rate law") {
    const double rate_s = 20000.0, rate_i = 15000.0;
    Scenario sc = noise_only_polarization(rate_s, rate_i);
    const SimulationResult r = simulate(sc);

    // Observed rates (no dead time configured here).
    const double r_a = static_cast<double>(r.signal.size()) / sc.duration_s;
    const double r_b = static_cast<double>(r.idler.size()) / sc.duration_s;
    CHECK(r_a == doctest::Approx(rate_s).epsilon(0.05));
    CHECK(r_b == doctest::Approx(rate_i).epsilon(0.05));

    const CoincidenceHistogram h = count_with_scenario_window(r, sc);
    const double expected = r_a * r_b * sc.coincidence_window_s * sc.duration_s;
    const double sigma = std::sqrt(expected);
    CHECK(std::abs(static_cast<double>(h.window_total) - expected) < 3.0 * sigma);
    CHECK(std::abs(static_cast<double>(h.accidental_total) - expected) < 3.0 * sigma);
}

TEST_CASE("energy-time histogram shows 1:2:1 peaks under phase randomization") {
    Scenario sc = et_preset();
    sc.settings.phase_randomized = true;
    sc.source.raman_s = 0.0;
    sc.source.raman_i = 0.0;
    sc.det_s.dark_rate = 0.0;
    sc.det_i.dark_rate = 0.0;
    sc.duration_s = 30.0;
    const SimulationResult r = simulate(sc);
    const CoincidenceHistogram h = count_with_scenario_window(r, sc);

    const auto peak_area = [&](std::int64_t center) {
        std::uint64_t total = 0;
        for (std::size_t i = 0; i < h.bins.size(); ++i) {
            const double c = h.bin_center_ps(i);
            if (std::abs(c - static_cast<double>(center)) <= 200.0) total += h.bins[i];
        }
        return static_cast<double>(total);
    };
    const double left = peak_area(-1600), center = peak_area(0), right = peak_area(1600);
    CHECK(left > 100);
    // side/center ratio 1:2 within 3 sigma of the ratio estimate
    const double ratio_l = left / center;
    const double sigma_l = ratio_l * std::sqrt(1.0 / left + 1.0 / center);
    CHECK(std::abs(ratio_l - 0.5) < 3.0 * sigma_l);
    const double ratio_r = right / center;
    const double sigma_r = ratio_r * std::sqrt(1.0 / right + 1.0 / center);
    CHECK(std::abs(ratio_r - 0.5) < 3.0 * sigma_r);
}

TEST_CASE("fringe extrema land at the analytic phases") {
    Scenario sc = et_preset();
    sc.source.raman_s = 0.0;
    sc.source.raman_i = 0.0;
    sc.det_s.dark_rate = 0.0;
    sc.det_i.dark_rate = 0.0;
    sc.duration_s = 5.0;

    sc.settings.phi_s_rad = 0.0;  // constructive
    const auto h_max = count_with_scenario_window(simulate(sc), sc);
    sc.settings.phi_s_rad = M_PI;  // destructive
    const auto h_min = count_with_scenario_window(simulate(sc), sc);
    CHECK(h_max.window_total > 100);
    CHECK(h_min.window_total < h_max.window_total / 50);
}

TEST_CASE("calibrated energy-time preset lands on the reported operating point") {
    const Scenario sc = et_preset();
    const EventModel model = build_event_model(sc);
    // ~51 detected coincidences per second at 1.37 mW and CAR ~ 80.
    CHECK(model.rates.window_rate_observed == doctest::Approx(51.0).epsilon(0.06));
    CHECK(model.rates.expected_car() == doctest::Approx(80.0).epsilon(0.06));
    // Observed singles in the tens of kcps, as for free-running InGaAs.
    CHECK(model.rates.singles_obs_s > 20e3);
    CHECK(model.rates.singles_obs_s < 40e3);
}

TEST_CASE("analytic rate summary matches predicted_car") {
    Scenario sc = et_preset();
    const EventModel model = build_event_model(sc);

    ArmLossBudget arm = sc.arm_s;
    arm.detector_efficiency = sc.det_s.efficiency;
    const double t_eff = arm.transmission() / 2.0;  // interferometer throughput
    const double car = predicted_car(sc.source, sc.det_s, sc.det_i, t_eff, t_eff,
                                     sc.pump.power_mW, sc.coincidence_window_s, sc.channel_pair);
    CHECK(model.rates.expected_car() == doctest::Approx(car).epsilon(1e-9));
}

TEST_CASE("simulated CAR agrees with the analytic expectation within 3 sigma") {
    Scenario sc = et_preset();
    sc.duration_s = 20.0;
    const EventModel model = build_event_model(sc);
    const SimulationResult r = simulate(sc);
    const CoincidenceHistogram h = count_with_scenario_window(r, sc);
    const CarEstimate est = estimate_car(h);
    CHECK(std::abs(est.value - model.rates.expected_car()) < 3.0 * est.sigma);
}

TEST_CASE("counts-mode and time-tag mode agree within 3 sigma") {
    Scenario sc = et_preset();
    sc.duration_s = 10.0;
    const EventModel model = build_event_model(sc);

    const SimulationResult r = simulate(sc);
    const CoincidenceHistogram h = count_with_scenario_window(r, sc);

    const CountsRecord counts = simulate_counts(sc, {{"default", sc.settings}});
    REQUIRE(counts.rows.size() == 1);

    const double expected_window = model.rates.window_rate_observed * sc.duration_s;
    const double sigma = std::sqrt(expected_window);
    CHECK(std::abs(static_cast<double>(h.window_total) - expected_window) < 3.0 * sigma);
    CHECK(std::abs(static_cast<double>(counts.rows[0].coincidences) - expected_window) <
          3.0 * sigma);

    const double expected_singles = model.rates.singles_obs_s * sc.duration_s;
    CHECK(std::abs(static_cast<double>(r.signal.size()) - expected_singles) <
          3.0 * std::sqrt(expected_singles) + 0.002 * expected_singles);
}

TEST_CASE("counts-mode matches time-tag mode for the gated time-bin scenario") {
    Scenario sc = load_preset("time_bin_i8_pulsed").scenario;
    sc.duration_s = 30.0;
    sc.pump.power_mW = 0.15;  // noticeable accidental level
    const EventModel model = build_event_model(sc);
    const SimulationResult r = simulate(sc);
    const CoincidenceHistogram h = count_with_scenario_window(r, sc);

    const double exp_window = model.rates.window_rate_observed * sc.duration_s;
    const double exp_acc = model.rates.accidental_rate_offset * sc.duration_s;
    CHECK(exp_acc > 30.0);  // the comparison must actually probe accidentals
    CHECK(std::abs(static_cast<double>(h.window_total) - exp_window) <
          3.0 * std::sqrt(exp_window) + 0.01 * exp_window);
    CHECK(std::abs(static_cast<double>(h.accidental_total) - exp_acc) <
          3.0 * std::sqrt(exp_acc) + 0.01 * exp_acc);
}

TEST_CASE("gated detector rejects out-of-gate slots") {
    Scenario sc = load_preset("time_bin_i8_pulsed").scenario;
    sc.duration_s = 5.0;
    const SimulationResult r = simulate(sc);
    // Idler hits must fall inside the 1-ns gate around the central slot.
    const std::int64_t period = 10000, center = 1600, half = 500;
    for (const std::int64_t t : r.idler.timestamps_ps) {
        std::int64_t m = (t - center) % period;
        if (m < 0) m += period;
        const bool in_gate = (m <= half) || (period - m <= half);
        CHECK(in_gate);
    }
    CHECK(r.idler.size() > 0);
}

TEST_CASE("time-bin fringe follows the pump-phase law") {
    Scenario sc = load_preset("time_bin_i8_pulsed").scenario;
    sc.duration_s = 5.0;
    // 2 phi_p - phi_s - phi_i = pi is constructive; 0 is destructive.
    sc.settings.phi_p_rad = M_PI / 2.0;
    const auto h_max = count_with_scenario_window(simulate(sc), sc);
    sc.settings.phi_p_rad = 0.0;
    const auto h_min = count_with_scenario_window(simulate(sc), sc);
    CHECK(h_max.window_total > 20);
    CHECK(static_cast<double>(h_min.window_total) <
          0.3 * static_cast<double>(h_max.window_total));
}

TEST_CASE("window total equals the sum of covered bins when aligned") {
    Scenario sc = et_preset();
    sc.duration_s = 5.0;
    const SimulationResult r = simulate(sc);
    const CoincidenceHistogram h = count_with_scenario_window(r, sc);
    // 0.8 ns window on 100 ps bins, both aligned to the bin grid.
    CHECK(h.window_total == h.sum_bins_in_window());
}

TEST_CASE("singles curve round-trips the scenario coefficients within 5%") {
    Scenario base = et_preset();
    base.duration_s = 400.0;
    base.seed = 31;
    const std::vector<double> powers{0.3, 0.6, 1.0, 1.4, 2.0, 2.8};
    std::vector<SinglesCurvePoint> pts;
    for (std::size_t i = 0; i < powers.size(); ++i) {
        Scenario sc = base;
        sc.pump.power_mW = powers[i];
        sc.seed = stream_key(base.seed, 0x524f554eull, i);
        const CountsRecord rec = simulate_counts(sc, {{"p", sc.settings}});
        const double obs = static_cast<double>(rec.rows[0].singles_s) / sc.duration_s;
        const double corrected = true_rate_from_observed(obs, sc.det_s.dead_time);
        pts.push_back({powers[i], corrected, corrected / std::sqrt(obs * sc.duration_s)});
    }
    const SinglesCurveFit fit = fit_singles_curve(pts);

    // Generating coefficients: the effective arm transmission times the
    // interferometer throughput for the quadratic and linear parts.
    ArmLossBudget arm = base.arm_s;
    arm.detector_efficiency = base.det_s.efficiency;
    const double t_eff = arm.transmission() / 2.0;
    CHECK(fit.quadratic == doctest::Approx(t_eff * base.source.xi).epsilon(0.05));
    CHECK(fit.linear == doctest::Approx(t_eff * base.source.raman_s).epsilon(0.05));
    CHECK(fit.constant == doctest::Approx(base.det_s.dark_rate).epsilon(0.05));
}

TEST_CASE("fitted visibility tracks R/(R+2) against the measured CAR") {
    Scenario base = et_preset();
    base.duration_s = 300.0;
    base.seed = 32;

    // CAR from the same scenario at the fringe maximum.
    const EventModel model = build_event_model(base);
    const double r = model.rates.expected_car() - 1.0;

    std::vector<double> phases;
    for (int i = 0; i < 25; ++i) phases.push_back(2.0 * M_PI * i / 25.0);
    const FringeScan scan = fringe_scan(
        base, phases, [](Scenario& sc, double phi) { sc.settings.phi_s_rad = phi; });
    const FringeFit fit = fit_fringe_scan(scan);
    CHECK(std::abs(fit.visibility_raw - r / (r + 2.0)) < 0.01);
}

TEST_CASE("central-peak CAR excises side peaks from wide windows") {
    Scenario sc = et_preset();
    sc.duration_s = 300.0;
    sc.seed = 33;
    const SimulationResult run = simulate(sc);

    const CarEstimate narrow = car_central_peak(run, sc, 0.8e-9);
    const CarEstimate wide = car_central_peak(run, sc, 3.2e-9);
    // Pure accidental scaling: (CAR - 1) falls by 4x between the windows.
    CHECK(std::abs((narrow.value - 1.0) / (wide.value - 1.0) - 4.0) <
          4.0 * 3.0 * std::sqrt(std::pow(narrow.sigma / (narrow.value - 1), 2) +
                                std::pow(wide.sigma / (wide.value - 1), 2)));

    // Without the excision the wide window swallows a side peak.
    Scenario local = sc;
    local.coincidence_window_s = 3.2e-9;
    const CarEstimate plain = estimate_car(count_with_scenario_window(run, local));
    CHECK(plain.value > wide.value * 1.1);
}

TEST_CASE("scenario guards") {
    Scenario sc = et_preset();
    sc.duration_s = -1.0;
    CHECK_THROWS(sc.validate());

    Scenario tb = load_preset("time_bin_i8_pulsed").scenario;
    tb.pump.pulsed = false;
    CHECK_THROWS((void)build_event_model(tb));
}
