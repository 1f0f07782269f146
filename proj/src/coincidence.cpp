#include "epsim/coincidence.hpp"

#include <algorithm>
#include <stdexcept>

namespace epsim {

bool TimeTagStream::is_sorted_strict() const {
    for (std::size_t i = 1; i < timestamps_ps.size(); ++i)
        if (timestamps_ps[i] <= timestamps_ps[i - 1]) return false;
    return true;
}

bool TimeTagStream::respects_dead_time() const {
    const std::int64_t gap = std::max<std::int64_t>(dead_time_ps, 1);
    for (std::size_t i = 1; i < timestamps_ps.size(); ++i)
        if (timestamps_ps[i] - timestamps_ps[i - 1] < gap) return false;
    return true;
}

std::uint64_t CoincidenceHistogram::sum_bins_in_window() const {
    std::uint64_t total = 0;
    const std::int64_t lo = offset_ps - window_ps / 2;
    const std::int64_t hi = offset_ps + window_ps / 2;  // window is [lo, hi)
    for (std::size_t i = 0; i < bins.size(); ++i) {
        const std::int64_t left = delay_min_ps + static_cast<std::int64_t>(i) * bin_width_ps;
        const std::int64_t right = left + bin_width_ps;
        if (left >= lo && right <= hi) total += bins[i];
    }
    return total;
}

namespace {

/// Count pairs with t_b - t_a in the half-open range [lo, hi), plus an
/// optional callback per delay. Half-open windows keep slot-quantized
/// accidental rates exactly proportional to the window width.
template <typename F>
std::uint64_t sweep(const std::vector<std::int64_t>& a, const std::vector<std::int64_t>& b,
                    std::int64_t lo, std::int64_t hi, F&& per_delay) {
    std::uint64_t count = 0;
    std::size_t lo_idx = 0;
    for (const std::int64_t ta : a) {
        while (lo_idx < b.size() && b[lo_idx] < ta + lo) ++lo_idx;
        for (std::size_t j = lo_idx; j < b.size() && b[j] < ta + hi; ++j) {
            ++count;
            per_delay(b[j] - ta);
        }
    }
    return count;
}

}  // namespace

CoincidenceHistogram count_coincidences(const TimeTagStream& a, const TimeTagStream& b,
                                        const CoincidenceWindowSpec& spec,
                                        double duration_s) {
    if (!a.is_sorted_strict() || !b.is_sorted_strict())
        throw std::invalid_argument("count_coincidences: streams must be sorted");
    if (spec.window_ps <= 0 || spec.bin_width_ps <= 0)
        throw std::invalid_argument("count_coincidences: window and bin width must be > 0");

    CoincidenceHistogram h;
    h.bin_width_ps = spec.bin_width_ps;
    h.window_ps = spec.window_ps;
    h.offset_ps = spec.offset_ps;
    h.accidental_offset_ps = spec.accidental_offset_ps;
    h.duration_s = duration_s;

    const std::int64_t half = spec.window_ps / 2;
    h.window_total = sweep(a.timestamps_ps, b.timestamps_ps, spec.offset_ps - half,
                           spec.offset_ps + half, [](std::int64_t) {});
    h.accidental_total =
        sweep(a.timestamps_ps, b.timestamps_ps, spec.accidental_offset_ps - half,
              spec.accidental_offset_ps + half, [](std::int64_t) {});

    // Histogram around the signal window.
    const std::int64_t range = spec.histogram_range_ps;
    h.delay_min_ps = spec.offset_ps - range;
    const std::size_t nbins =
        static_cast<std::size_t>((2 * range) / spec.bin_width_ps);
    h.bins.assign(nbins, 0);
    sweep(a.timestamps_ps, b.timestamps_ps, h.delay_min_ps,
          h.delay_min_ps + static_cast<std::int64_t>(nbins) * spec.bin_width_ps,
          [&](std::int64_t d) {
              const auto idx = static_cast<std::size_t>((d - h.delay_min_ps) / spec.bin_width_ps);
              if (idx < nbins) ++h.bins[idx];
          });
    return h;
}

}  // namespace epsim
