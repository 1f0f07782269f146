#include "epsim/engine.hpp"

#include "epsim/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace epsim {

namespace {

// Stream salts: every random draw in a run is keyed by
// (seed, salt, block-or-setting, category-or-quantity).
constexpr std::uint64_t kSaltEvents = 0x45564e54ull;  // time-tag event placement
constexpr std::uint64_t kSaltCounts = 0x434e5453ull;  // counts-mode draws

std::int64_t to_ps(double seconds) { return std::llround(seconds * 1e12); }

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

/// Number of lattice offsets k with k*grid + delta in [lo, hi).
std::int64_t lattice_hits(std::int64_t grid, std::int64_t delta, std::int64_t lo, std::int64_t hi) {
    if (grid <= 0 || hi <= lo) return 0;
    const std::int64_t k_max = floor_div(hi - 1 - delta, grid);
    const std::int64_t k_min = -floor_div(-(lo - delta), grid);  // ceil((lo - delta) / grid)
    return std::max<std::int64_t>(0, k_max - k_min + 1);
}

// One detector's hit-time structure within the pump period: Dirac slots
// (pair/noise photons on the pump grid), repeating boxes (gated dark counts
// spread over the gate window) and a truly uniform part (free-running darks).
struct SlotComp {
    std::int64_t delay_ps;
    double rate_hz;
};
struct BoxComp {
    std::int64_t lo_ps;  // box covers [lo, lo + width) relative to the pulse
    std::int64_t width_ps;
    double rate_hz;
};
struct DetectorProfile {
    std::vector<SlotComp> slots;
    std::vector<BoxComp> boxes;
    double uniform_rate = 0.0;

    double total() const {
        double t = uniform_rate;
        for (const auto& s : slots) t += s.rate_hz;
        for (const auto& b : boxes) t += b.rate_hz;
        return t;
    }
    void scale(double f) {
        for (auto& s : slots) s.rate_hz *= f;
        for (auto& b : boxes) b.rate_hz *= f;
        uniform_rate *= f;
    }
};

/// Total intersection length of the repeating windows [pos + lo + k*grid,
/// pos + hi + k*grid) with one box [0, width), in ps.
std::int64_t box_window_overlap(std::int64_t grid, std::int64_t pos, std::int64_t lo,
                                std::int64_t hi, std::int64_t width) {
    std::int64_t total = 0;
    const std::int64_t k_min = floor_div(-(pos + hi), grid);
    const std::int64_t k_max = floor_div(width - (pos + lo), grid) + 1;
    for (std::int64_t k = k_min; k <= k_max; ++k) {
        const std::int64_t a = pos + lo + k * grid;
        const std::int64_t b = pos + hi + k * grid;
        total += std::max<std::int64_t>(0, std::min(b, width) - std::max<std::int64_t>(a, 0));
    }
    return total;
}

/// Accidental coincidence rate between independent detector profiles on a
/// shared time lattice, for the half-open delay window [lo, hi).
double accidental_rate(const DetectorProfile& s, const DetectorProfile& i,
                       std::int64_t grid_ps, std::int64_t lo, std::int64_t hi) {
    const double grid_s = static_cast<double>(grid_ps) * 1e-12;
    const double width_s = static_cast<double>(hi - lo) * 1e-12;
    double a = 0.0;
    // slot x slot
    for (const auto& xs : s.slots)
        for (const auto& xi : i.slots)
            a += xs.rate_hz * xi.rate_hz * grid_s *
                 static_cast<double>(lattice_hits(grid_ps, xi.delay_ps - xs.delay_ps, lo, hi));
    // slot x box and box x slot: the partner must fall into the window
    // around the slot, restricted to the box support.
    for (const auto& xs : s.slots)
        for (const auto& bi : i.boxes)
            a += xs.rate_hz * bi.rate_hz * grid_s *
                 static_cast<double>(box_window_overlap(grid_ps, xs.delay_ps - bi.lo_ps, lo, hi,
                                                        bi.width_ps)) /
                 static_cast<double>(bi.width_ps);
    for (const auto& xi : i.slots)
        for (const auto& bs : s.boxes)
            a += xi.rate_hz * bs.rate_hz * grid_s *
                 static_cast<double>(box_window_overlap(grid_ps, xi.delay_ps - bs.lo_ps, -hi + 1,
                                                        -lo + 1, bs.width_ps)) /
                 static_cast<double>(bs.width_ps);
    // box x box: integrate the window overlap across the first box.
    for (const auto& bs : s.boxes)
        for (const auto& bi : i.boxes) {
            std::int64_t area = 0;
            for (std::int64_t u = 0; u < bs.width_ps; ++u)
                area += box_window_overlap(grid_ps, bs.lo_ps + u - bi.lo_ps, lo, hi, bi.width_ps);
            a += bs.rate_hz * bi.rate_hz * grid_s * static_cast<double>(area) /
                 (static_cast<double>(bs.width_ps) * static_cast<double>(bi.width_ps));
        }
    // uniform pairings depend only on the window width.
    double slot_box_s = 0.0, slot_box_i = 0.0;
    for (const auto& xs : s.slots) slot_box_s += xs.rate_hz;
    for (const auto& bs : s.boxes) slot_box_s += bs.rate_hz;
    for (const auto& xi : i.slots) slot_box_i += xi.rate_hz;
    for (const auto& bi : i.boxes) slot_box_i += bi.rate_hz;
    a += slot_box_s * i.uniform_rate * width_s;
    a += s.uniform_rate * slot_box_i * width_s;
    a += s.uniform_rate * i.uniform_rate * width_s;
    return a;
}

struct GateGeometry {
    bool active = false;
    std::int64_t period_ps = 0;
    std::int64_t center_ps = 0;
    std::int64_t half_width_ps = 0;

    bool accepts(std::int64_t delay_ps) const {
        if (!active) return true;
        std::int64_t m = (delay_ps - center_ps) % period_ps;
        if (m < 0) m += period_ps;
        return m <= half_width_ps || (period_ps - m) <= half_width_ps;
    }
};

GateGeometry gate_for(const DetectorParams& d, const Scenario& sc) {
    GateGeometry g;
    if (!d.gated) return g;
    if (!sc.pump.pulsed)
        throw std::invalid_argument("gated detector requires a pulsed pump");
    g.active = true;
    g.period_ps = to_ps(1.0 / d.gate_rate);
    g.center_ps = to_ps(sc.gate_center_offset_s);
    g.half_width_ps = to_ps(d.gate_width / 2.0);
    return g;
}

void add_category(EventModel& m, double rate, bool hit_s, bool hit_i,
                  std::int64_t ds, std::int64_t di) {
    if (rate <= 0.0 || (!hit_s && !hit_i)) return;
    EventCategory c;
    c.rate_hz = rate;
    c.hit_s = hit_s;
    c.hit_i = hit_i;
    c.delay_s_ps = ds;
    c.delay_i_ps = di;
    c.placement = EventCategory::Placement::grid;
    m.categories.push_back(c);
}

}  // namespace

EventModel build_event_model(const Scenario& sc) {
    sc.validate();
    EventModel m;

    const double period_s = sc.pump.pulsed ? 1.0 / sc.pump.rep_rate_hz : 0.0;
    m.grid_ps = sc.pump.pulsed ? to_ps(period_s)
                               : static_cast<std::int64_t>(std::llround(sc.timing_resolution_ps));
    if (m.grid_ps <= 0) throw std::invalid_argument("event grid must be positive");

    ArmLossBudget arm_s = sc.arm_s;
    ArmLossBudget arm_i = sc.arm_i;
    arm_s.detector_efficiency = sc.det_s.efficiency;
    arm_i.detector_efficiency = sc.det_i.efficiency;
    const double t_s = arm_s.transmission();
    const double t_i = arm_i.transmission();

    const double p_mw = sc.pump.power_mW;
    const double pair_rate = sc.source.xi * p_mw * p_mw;
    const double noise_s = sc.source.raman_s * sc.source.noise_multiplier(sc.channel_pair) * p_mw;
    const double noise_i = sc.source.raman_i * sc.source.noise_multiplier(sc.channel_pair) * p_mw;

    const std::int64_t dly = to_ps(sc.umi.delay_s);

    switch (sc.scheme) {
        case Scheme::energy_time: {
            const double c = sc.settings.phase_randomized
                                 ? 0.0
                                 : sc.visibility *
                                       std::cos(sc.settings.phi_s_rad + sc.settings.phi_i_rad);
            const double tt = t_s * t_i;
            // Joint path outcomes of one pair through the common UMI. The
            // central peak carries the SS+LL interference; side peaks do not.
            add_category(m, pair_rate * tt * (1.0 + c) / 16.0, true, true, 0, 0);
            add_category(m, pair_rate * tt * (1.0 + c) / 16.0, true, true, dly, dly);
            add_category(m, pair_rate * tt / 16.0, true, true, 0, dly);
            add_category(m, pair_rate * tt / 16.0, true, true, dly, 0);
            const double q_s = t_s / 2.0 - tt * (2.0 + c) / 8.0;
            const double q_i = t_i / 2.0 - tt * (2.0 + c) / 8.0;
            add_category(m, pair_rate * q_s / 2.0, true, false, 0, 0);
            add_category(m, pair_rate * q_s / 2.0, true, false, dly, 0);
            add_category(m, pair_rate * q_i / 2.0, false, true, 0, 0);
            add_category(m, pair_rate * q_i / 2.0, false, true, 0, dly);
            // Noise photons traverse the UMI independently.
            add_category(m, noise_s * t_s / 4.0, true, false, 0, 0);
            add_category(m, noise_s * t_s / 4.0, true, false, dly, 0);
            add_category(m, noise_i * t_i / 4.0, false, true, 0, 0);
            add_category(m, noise_i * t_i / 4.0, false, true, 0, dly);
            break;
        }
        case Scheme::time_bin: {
            if (!sc.pump.pulsed)
                throw std::invalid_argument("time_bin scheme requires a pulsed pump");
            const double c = sc.settings.phase_randomized
                                 ? 0.0
                                 : sc.visibility * std::cos(2.0 * sc.settings.phi_p_rad -
                                                            sc.settings.phi_s_rad -
                                                            sc.settings.phi_i_rad);
            const double tt = t_s * t_i;
            // Arrival slots are (pump bin + analysis path) * delay; only the
            // central slot pair (1,1) interferes.
            add_category(m, pair_rate * tt * (1.0 - c) / 16.0, true, true, dly, dly);
            for (const auto& [ss, si] : {std::pair<int, int>{0, 0}, {2, 2}, {0, 1}, {1, 0}, {1, 2}, {2, 1}})
                add_category(m, pair_rate * tt / 32.0, true, true, ss * dly, si * dly);
            // Partner-undetected remainders per arrival slot: the slot
            // marginal {1/8, 1/4, 1/8} minus the joint outcomes that share
            // the slot (the interference term sits in the central slot).
            const double joint_side = tt / 16.0;
            const double joint_center = tt * (2.0 - c) / 16.0;
            for (const auto& [slot, marginal, joint] :
                 {std::tuple<int, double, double>{0, 0.125, joint_side},
                  {1, 0.25, joint_center},
                  {2, 0.125, joint_side}}) {
                add_category(m, pair_rate * (t_s * marginal - joint), true, false, slot * dly, 0);
                add_category(m, pair_rate * (t_i * marginal - joint), false, true, 0, slot * dly);
                const double frac = 2.0 * marginal;
                add_category(m, noise_s * t_s / 2.0 * frac, true, false, slot * dly, 0);
                add_category(m, noise_i * t_i / 2.0 * frac, false, true, 0, slot * dly);
            }
            break;
        }
        case Scheme::polarization: {
            DensityMatrix pure = sagnac_output_state(sc.sagnac);
            const Matrix4c mixed = sc.visibility * pure.entries() +
                                   (1.0 - sc.visibility) * 0.25 * Matrix4c::Identity();
            DensityMatrix rho(mixed);
            const Projector pa = Projector::product(sc.settings.analyzer_s.ket(),
                                                    sc.settings.analyzer_i.ket());
            const Projector ps1 = Projector::first_qubit(sc.settings.analyzer_s.ket());
            const Projector pi1 = Projector::second_qubit(sc.settings.analyzer_i.ket());
            const double p2 = born_probability(rho, pa);
            const double p_s = born_probability(rho, ps1);
            const double p_i = born_probability(rho, pi1);
            add_category(m, pair_rate * t_s * t_i * p2, true, true, 0, 0);
            add_category(m, pair_rate * (t_s * p_s - t_s * t_i * p2), true, false, 0, 0);
            add_category(m, pair_rate * (t_i * p_i - t_s * t_i * p2), false, true, 0, 0);
            // Noise photons are unpolarized: half pass the analyzer.
            add_category(m, noise_s * t_s / 2.0, true, false, 0, 0);
            add_category(m, noise_i * t_i / 2.0, false, true, 0, 0);
            break;
        }
    }

    // Gating removes grid hits deterministically (slots either fall inside
    // the gate or not) and throttles darks to the gate duty cycle.
    const GateGeometry gate_s = gate_for(sc.det_s, sc);
    const GateGeometry gate_i = gate_for(sc.det_i, sc);
    for (auto& cat : m.categories) {
        if (cat.hit_s && !gate_s.accepts(cat.delay_s_ps)) cat.hit_s = false;
        if (cat.hit_i && !gate_i.accepts(cat.delay_i_ps)) cat.hit_i = false;
    }
    std::erase_if(m.categories, [](const EventCategory& c) { return !c.hit_s && !c.hit_i; });

    m.dark_rate_s = sc.det_s.dark_rate * sc.det_s.duty_cycle();
    m.dark_rate_i = sc.det_i.dark_rate * sc.det_i.duty_cycle();
    {
        EventCategory dark;
        dark.placement = sc.det_s.gated ? EventCategory::Placement::uniform_gated
                                        : EventCategory::Placement::uniform;
        dark.rate_hz = m.dark_rate_s;
        dark.hit_s = true;
        dark.detector = 0;
        if (dark.rate_hz > 0.0) m.categories.push_back(dark);
        dark = EventCategory{};
        dark.placement = sc.det_i.gated ? EventCategory::Placement::uniform_gated
                                        : EventCategory::Placement::uniform;
        dark.rate_hz = m.dark_rate_i;
        dark.hit_i = true;
        dark.detector = 1;
        if (dark.rate_hz > 0.0) m.categories.push_back(dark);
    }

    // Analytic rate summary.
    RateSummary& r = m.rates;
    DetectorProfile prof_s, prof_i;
    for (const auto& cat : m.categories) {
        switch (cat.placement) {
            case EventCategory::Placement::grid:
                if (cat.hit_s) prof_s.slots.push_back({cat.delay_s_ps, cat.rate_hz});
                if (cat.hit_i) prof_i.slots.push_back({cat.delay_i_ps, cat.rate_hz});
                break;
            case EventCategory::Placement::uniform:
                if (cat.hit_s) prof_s.uniform_rate += cat.rate_hz;
                if (cat.hit_i) prof_i.uniform_rate += cat.rate_hz;
                break;
            case EventCategory::Placement::uniform_gated: {
                const GateGeometry& g = cat.detector == 0 ? gate_s : gate_i;
                const std::int64_t width = std::max<std::int64_t>(2 * g.half_width_ps, 1);
                BoxComp box{g.center_ps - g.half_width_ps, width, cat.rate_hz};
                if (cat.hit_s) prof_s.boxes.push_back(box);
                if (cat.hit_i) prof_i.boxes.push_back(box);
                break;
            }
        }
    }
    r.singles_true_s = prof_s.total();
    r.singles_true_i = prof_i.total();
    r.singles_obs_s = observed_rate(r.singles_true_s, sc.det_s.dead_time);
    r.singles_obs_i = observed_rate(r.singles_true_i, sc.det_i.dead_time);
    r.live_s = r.singles_true_s > 0.0 ? r.singles_obs_s / r.singles_true_s : 1.0;
    r.live_i = r.singles_true_i > 0.0 ? r.singles_obs_i / r.singles_true_i : 1.0;

    const std::int64_t w = to_ps(sc.coincidence_window_s);
    const std::int64_t lo = -w / 2, hi = w - w / 2;  // [lo, hi), width w
    for (const auto& cat : m.categories) {
        if (!(cat.hit_s && cat.hit_i)) continue;
        const std::int64_t d = cat.delay_i_ps - cat.delay_s_ps;
        if (d >= lo && d < hi) r.window_true_rate += cat.rate_hz;
    }

    // Observed-rate profiles for the accidental estimates.
    prof_s.scale(r.live_s);
    prof_i.scale(r.live_i);
    r.accidental_rate_central = accidental_rate(prof_s, prof_i, m.grid_ps, lo, hi);
    const std::int64_t off = to_ps(sc.accidental_offset_s);
    r.accidental_rate_offset = accidental_rate(prof_s, prof_i, m.grid_ps, off + lo, off + hi);
    r.window_rate_observed =
        r.window_true_rate * r.live_s * r.live_i + r.accidental_rate_central;
    return m;
}

namespace {

struct RawHit {
    std::int64_t t_ps;
    std::uint64_t seq;
};

void apply_dead_time(std::vector<RawHit>& hits, std::int64_t dead_ps,
                     std::vector<std::int64_t>& out) {
    std::sort(hits.begin(), hits.end(), [](const RawHit& a, const RawHit& b) {
        return a.t_ps != b.t_ps ? a.t_ps < b.t_ps : a.seq < b.seq;
    });
    const std::int64_t gap = std::max<std::int64_t>(dead_ps, 1);
    out.clear();
    out.reserve(hits.size());
    std::int64_t last = std::numeric_limits<std::int64_t>::min() / 2;
    for (const auto& h : hits) {
        if (h.t_ps - last >= gap) {
            out.push_back(h.t_ps);
            last = h.t_ps;
        }
    }
}

}  // namespace

SimulationResult simulate(const Scenario& sc) {
    const EventModel model = build_event_model(sc);

    const double expected_hits =
        (model.rates.singles_true_s + model.rates.singles_true_i) * sc.duration_s;
    if (expected_hits > 5e8)
        throw std::runtime_error("simulate: scenario would generate more than 5e8 hits");

    const std::int64_t grid = model.grid_ps;
    const std::int64_t total_slots =
        std::max<std::int64_t>(1, std::llround(sc.duration_s * 1e12 / static_cast<double>(grid)));
    const std::int64_t slots_per_block =
        std::max<std::int64_t>(1, std::llround(1e12 / static_cast<double>(grid)));
    const std::int64_t n_blocks = (total_slots + slots_per_block - 1) / slots_per_block;

    const GateGeometry gate_s = gate_for(sc.det_s, sc);
    const GateGeometry gate_i = gate_for(sc.det_i, sc);
    const double jitter_s_ps = sc.det_s.jitter_rms * 1e12;
    const double jitter_i_ps = sc.det_i.jitter_rms * 1e12;

    std::vector<RawHit> raw_s, raw_i;
    raw_s.reserve(static_cast<std::size_t>(model.rates.singles_true_s * sc.duration_s * 1.1) + 64);
    raw_i.reserve(static_cast<std::size_t>(model.rates.singles_true_i * sc.duration_s * 1.1) + 64);
    std::uint64_t seq_s = 0, seq_i = 0;

    for (std::int64_t block = 0; block < n_blocks; ++block) {
        const std::int64_t slot0 = block * slots_per_block;
        const std::int64_t n_slots = std::min(slots_per_block, total_slots - slot0);
        const double block_seconds = static_cast<double>(n_slots) * static_cast<double>(grid) * 1e-12;
        const std::int64_t block_start_ps = slot0 * grid;
        const std::int64_t block_len_ps = n_slots * grid;

        for (std::size_t ci = 0; ci < model.categories.size(); ++ci) {
            const EventCategory& cat = model.categories[ci];
            Rng rng(stream_key(sc.seed, kSaltEvents, static_cast<std::uint64_t>(block), ci));
            const std::uint64_t n = rng.poisson(cat.rate_hz * block_seconds);
            for (std::uint64_t e = 0; e < n; ++e) {
                std::int64_t base;
                switch (cat.placement) {
                    case EventCategory::Placement::grid:
                        base = block_start_ps +
                               static_cast<std::int64_t>(rng.uniform_below(
                                   static_cast<std::uint64_t>(n_slots))) * grid;
                        break;
                    case EventCategory::Placement::uniform:
                        base = block_start_ps + static_cast<std::int64_t>(rng.uniform_below(
                                                    static_cast<std::uint64_t>(block_len_ps)));
                        break;
                    case EventCategory::Placement::uniform_gated: {
                        const GateGeometry& g = cat.detector == 0 ? gate_s : gate_i;
                        const std::int64_t pulse = block_start_ps +
                            static_cast<std::int64_t>(rng.uniform_below(
                                static_cast<std::uint64_t>(n_slots))) * grid;
                        const std::int64_t span = std::max<std::int64_t>(2 * g.half_width_ps, 1);
                        base = pulse + g.center_ps - g.half_width_ps +
                               static_cast<std::int64_t>(rng.uniform_below(
                                   static_cast<std::uint64_t>(span)));
                        break;
                    }
                    default:
                        base = block_start_ps;
                }
                if (cat.hit_s) {
                    std::int64_t t = base + cat.delay_s_ps;
                    if (jitter_s_ps > 0.0) t += std::llround(rng.gauss() * jitter_s_ps);
                    raw_s.push_back({t, seq_s++});
                }
                if (cat.hit_i) {
                    std::int64_t t = base + cat.delay_i_ps;
                    if (jitter_i_ps > 0.0) t += std::llround(rng.gauss() * jitter_i_ps);
                    raw_i.push_back({t, seq_i++});
                }
            }
        }
    }

    SimulationResult res;
    res.scenario_hash = sc.physics_hash();
    res.seed = sc.seed;
    res.signal.detector_id = 0;
    res.idler.detector_id = 1;
    res.signal.dead_time_ps = to_ps(sc.det_s.dead_time);
    res.idler.dead_time_ps = to_ps(sc.det_i.dead_time);
    apply_dead_time(raw_s, res.signal.dead_time_ps, res.signal.timestamps_ps);
    apply_dead_time(raw_i, res.idler.dead_time_ps, res.idler.timestamps_ps);
    return res;
}

CountsRecord simulate_counts(const Scenario& base,
                             const std::vector<std::pair<std::string, MeasurementSettings>>& settings) {
    CountsRecord rec;
    rec.integration_s = base.duration_s;
    rec.rows.reserve(settings.size());
    for (std::size_t k = 0; k < settings.size(); ++k) {
        Scenario sc = base;
        sc.settings = settings[k].second;
        const EventModel model = build_event_model(sc);
        const RateSummary& r = model.rates;
        const double T = sc.duration_s;

        SettingCounts row;
        row.label = settings[k].first;
        Rng rng(stream_key(sc.seed, kSaltCounts, k, 0));
        row.coincidences = rng.poisson(r.window_rate_observed * T);
        Rng rng_acc(stream_key(sc.seed, kSaltCounts, k, 1));
        row.accidentals = rng_acc.poisson(r.accidental_rate_offset * T);
        Rng rng_s(stream_key(sc.seed, kSaltCounts, k, 2));
        row.singles_s = rng_s.poisson(r.singles_obs_s * T);
        Rng rng_i(stream_key(sc.seed, kSaltCounts, k, 3));
        row.singles_i = rng_i.poisson(r.singles_obs_i * T);
        rec.rows.push_back(std::move(row));
    }
    return rec;
}

CoincidenceHistogram count_with_scenario_window(const SimulationResult& run, const Scenario& sc) {
    CoincidenceWindowSpec spec;
    spec.window_ps = to_ps(sc.coincidence_window_s);
    spec.offset_ps = 0;
    spec.accidental_offset_ps = to_ps(sc.accidental_offset_s);
    const std::int64_t dly = to_ps(sc.umi.delay_s);
    spec.histogram_range_ps =
        std::max<std::int64_t>({5000, 3 * spec.window_ps, 2 * dly + 2 * spec.window_ps});
    spec.bin_width_ps = static_cast<std::int64_t>(std::llround(sc.timing_resolution_ps));
    return count_coincidences(run.signal, run.idler, spec, sc.duration_s);
}

}  // namespace epsim
