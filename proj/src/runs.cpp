#include "epsim/runs.hpp"

#include "epsim/rng.hpp"

#include <cmath>
#include <future>

namespace epsim {

CountsRecord scan_counts(const Scenario& base, const std::vector<double>& xs,
                         const std::function<void(Scenario&, double)>& apply,
                         const std::string& label_prefix) {
    CountsRecord out;
    out.integration_s = base.duration_s;
    // Each point carries its own counter-derived sub-seed, so the points
    // are independent and can run concurrently without changing results.
    std::vector<std::future<SettingCounts>> rows;
    rows.reserve(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        rows.push_back(std::async(std::launch::async, [&, i] {
            Scenario sc = base;
            sc.seed = stream_key(base.seed, 0x5343414eull, i);
            apply(sc, xs[i]);
            char label[64];
            std::snprintf(label, sizeof label, "%s%.6g", label_prefix.c_str(), xs[i]);
            return simulate_counts(sc, {{label, sc.settings}}).rows.front();
        }));
    }
    for (auto& row : rows) out.rows.push_back(row.get());
    return out;
}

CarEstimate car_from_counts(const SettingCounts& row) {
    CoincidenceHistogram h;
    h.window_total = row.coincidences;
    h.accidental_total = row.accidentals;
    return estimate_car(h);
}

FringeScan fringe_scan(const Scenario& base, const std::vector<double>& phases,
                       const std::function<void(Scenario&, double)>& apply) {
    const CountsRecord rec = scan_counts(base, phases, apply, "phase=");
    FringeScan scan;
    double acc_sum = 0.0;
    for (std::size_t i = 0; i < rec.rows.size(); ++i) {
        scan.points.push_back({phases[i], static_cast<double>(rec.rows[i].coincidences)});
        acc_sum += static_cast<double>(rec.rows[i].accidentals);
    }
    const double n = static_cast<double>(rec.rows.size());
    scan.accidental_mean = acc_sum / n;
    scan.accidental_sigma = std::sqrt(std::max(acc_sum, 1.0)) / n;
    return scan;
}

CountsRecord chsh_run(const Scenario& pol_base, const ChshAngles& angles) {
    std::vector<std::pair<std::string, MeasurementSettings>> settings;
    for (const auto& [label, ab] : chsh_setting_list(angles)) {
        MeasurementSettings m = pol_base.settings;
        m.analyzer_s = Analyzer::from_angle_rad(ab[0]);
        m.analyzer_i = Analyzer::from_angle_rad(ab[1]);
        settings.push_back({label, m});
    }
    return simulate_counts(pol_base, settings);
}

CountsRecord tomography_run(const Scenario& pol_base) {
    std::vector<std::pair<std::string, MeasurementSettings>> settings;
    const auto labels = tomography_labels();
    const auto& tomo = tomography_settings();
    for (std::size_t v = 0; v < tomo.size(); ++v) {
        MeasurementSettings m = pol_base.settings;
        m.analyzer_s = tomo[v].first;
        m.analyzer_i = tomo[v].second;
        settings.push_back({labels[v], m});
    }
    return simulate_counts(pol_base, settings);
}

FringeFit fit_fringe_scan(const FringeScan& scan) {
    return fit_fringe(scan.points, scan.accidental_mean, scan.accidental_sigma);
}

CarEstimate car_central_peak(const SimulationResult& run, const Scenario& sc,
                             double window_s) {
    Scenario local = sc;
    local.coincidence_window_s = window_s;
    const CoincidenceHistogram h = count_with_scenario_window(run, local);

    const std::int64_t w = h.window_ps;
    const std::int64_t delay = static_cast<std::int64_t>(std::llround(sc.umi.delay_s * 1e12));
    std::uint64_t window = h.window_total;
    std::int64_t effective_w = w;
    if (delay > 0) {
        for (const std::int64_t peak : {-delay, delay}) {
            if (peak < -w / 2 || peak >= w - w / 2) continue;
            const std::int64_t idx = (peak - h.delay_min_ps) / h.bin_width_ps;
            if (idx >= 0 && idx < static_cast<std::int64_t>(h.bins.size())) {
                window -= std::min<std::uint64_t>(window, h.bins[static_cast<std::size_t>(idx)]);
                effective_w -= h.bin_width_ps;
            }
        }
    }
    CoincidenceHistogram adjusted = h;
    adjusted.window_total = window;
    adjusted.accidental_total = static_cast<std::uint64_t>(std::llround(
        static_cast<double>(h.accidental_total) * static_cast<double>(effective_w) /
        static_cast<double>(w)));
    return estimate_car(adjusted);
}

}  // namespace epsim
