// The 100-GHz ITU DWDM grid, the pump channel and the 14 energy-conserving
// correlated signal/idler channel pairs.
//
// Channels are held as integer grid indices (ITU C-band channel number n,
// center frequency 190.0 THz + n * 100 GHz), so energy conservation
// nu_s + nu_i = 2 nu_p is an exact integer identity, never a float check.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace epsim {

constexpr double kSpeedOfLight = 299792458.0;  // m/s

struct ItuChannel {
    int index;  // C-band channel number, e.g. 34 for C34

    // Center frequency in integer multiples of 100 GHz (exact).
    std::int64_t frequency_grid_units() const { return 1900 + index; }
    double frequency_hz() const { return 1e11 * static_cast<double>(frequency_grid_units()); }
    double wavelength_nm() const { return 1e9 * kSpeedOfLight / frequency_hz(); }
    std::string name() const { return "C" + std::to_string(index); }
};

struct ChannelPair {
    int k;  // pair index, 1..14
    ItuChannel signal;
    ItuChannel idler;
    double signal_wavelength_nm() const { return signal.wavelength_nm(); }
    double idler_wavelength_nm() const { return idler.wavelength_nm(); }
};

/// The grid used throughout: pump at C34, pairs k=1..14 at C(33-k)/C(35+k).
class ChannelGrid {
  public:
    static constexpr int kPumpChannel = 34;
    static constexpr int kPairCount = 14;

    ItuChannel pump() const { return {kPumpChannel}; }

    /// Table A1 pair k: signal C(33-k), idler C(35+k). Throws on k out of 1..14.
    ChannelPair channel_pair(int k) const;

    /// Frequency offset of pair k from the pump: (k+1) * 100 GHz, in Hz.
    double detuning_hz(int k) const;

    /// All 14 pairs in Table A1 order (k = 14 down to 1, pump last row).
    std::vector<ChannelPair> all_pairs() const;

    /// Default passband used for brightness normalization (100-GHz grid).
    double passband_nm() const { return passband_nm_; }
    void set_passband_nm(double nm) { passband_nm_ = nm; }

  private:
    double passband_nm_ = 0.8;
};

}  // namespace epsim
