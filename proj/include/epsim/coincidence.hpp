// Time-tag streams, windowed coincidence counting and delay histograms.

#pragma once

#include <cstdint>
#include <vector>

namespace epsim {

/// Sorted detection events of one detector. Timestamps are integer
/// picoseconds, strictly increasing, with consecutive gaps >= the dead
/// time the stream was produced with.
struct TimeTagStream {
    std::uint32_t detector_id = 0;
    std::int64_t dead_time_ps = 0;
    std::vector<std::int64_t> timestamps_ps;

    std::size_t size() const { return timestamps_ps.size(); }
    bool is_sorted_strict() const;
    /// True when every consecutive gap is >= max(dead_time_ps, 1).
    bool respects_dead_time() const;
};

struct CoincidenceWindowSpec {
    std::int64_t window_ps = 800;             // full window width
    std::int64_t offset_ps = 0;               // center of the signal window
    std::int64_t accidental_offset_ps = 50000;  // center of the accidental window
    std::int64_t histogram_range_ps = 5000;   // histogram covers offset +- range
    std::int64_t bin_width_ps = 100;
};

struct CoincidenceHistogram {
    std::int64_t bin_width_ps = 0;
    std::int64_t delay_min_ps = 0;  // left edge of bins[0]
    std::vector<std::uint64_t> bins;

    std::int64_t window_ps = 0;
    std::int64_t offset_ps = 0;
    std::uint64_t window_total = 0;

    std::int64_t accidental_offset_ps = 0;
    std::uint64_t accidental_total = 0;

    double duration_s = 0.0;

    /// Sum of the bins fully covered by [offset - w/2, offset + w/2].
    std::uint64_t sum_bins_in_window() const;
    /// Center delay of bin i.
    double bin_center_ps(std::size_t i) const {
        return static_cast<double>(delay_min_ps) +
               (static_cast<double>(i) + 0.5) * static_cast<double>(bin_width_ps);
    }
};

/// Count pairs (t_a, t_b) with |t_b - t_a - offset| <= window/2 and build a
/// delay histogram around the offset. Streams must be sorted (throws
/// otherwise). Two-pointer sweep, O(n_a + n_b + matches).
CoincidenceHistogram count_coincidences(const TimeTagStream& a, const TimeTagStream& b,
                                        const CoincidenceWindowSpec& spec,
                                        double duration_s);

}  // namespace epsim
