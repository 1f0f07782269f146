// Analytic physics models: pair/singles/noise rates, CAR prediction,
// interferometer phase and fringe laws, detector parameters and spectral
// brightness. The Monte Carlo engine samples from these laws and the
// fitters in the analysis module fit back to them.

#pragma once

#include "epsim/qstate.hpp"

#include <array>
#include <cmath>

namespace epsim {

/// Pair-generation and noise coefficients for one channel pair.
/// xi is in pairs / (s mW^2); raman_* in counts / (s mW) per arm.
struct SourceParams {
    double xi = 0.0;
    double raman_s = 0.0;
    double raman_i = 0.0;
    // Multiplicative noise profile vs channel-pair index k (1..14). Slot 0
    // is unused. Models the decrease of filter/Raman noise with detuning.
    std::array<double, 15> detuning_noise_profile = [] {
        std::array<double, 15> a{};
        a.fill(1.0);
        return a;
    }();

    double noise_multiplier(int k) const {
        return (k >= 1 && k <= 14) ? detuning_noise_profile[static_cast<std::size_t>(k)] : 1.0;
    }
    void validate() const;
};

/// Linear noise profile: multiplier = intercept + slope * k, clamped to >= 0.
std::array<double, 15> linear_noise_profile(double intercept, double slope);

struct DetectorParams {
    double efficiency = 1.0;   // [0,1]
    double dark_rate = 0.0;    // counts/s (free-running equivalent)
    double dead_time = 0.0;    // s, nonparalyzable
    double jitter_rms = 0.0;   // s, Gaussian timing jitter (0 = off)
    bool gated = false;
    double gate_rate = 0.0;    // Hz
    double gate_width = 0.0;   // s

    /// Fraction of time the detector is armed (1 for free-running).
    double duty_cycle() const {
        if (!gated) return 1.0;
        return std::min(1.0, gate_rate * gate_width);
    }
    void validate() const;
};

/// Unbalanced Michelson interferometer constants (Appendix-C style).
struct UMIParams {
    double delay_s = 0.0;              // arm time difference
    double length_diff_m = 0.0;        // fiber length difference L_d
    double group_index = 1.468;
    double dn_dT = 0.811e-5;           // 1/degC thermo-optic coefficient
    double wavelength_m = 1550e-9;
    bool double_pass = true;           // Faraday-mirror Michelson

    void validate() const;  // checks L_d = c dt / (2 n) within 0.1% when both set
};

/// L_d = c dt / (2 n) for a double-pass (Faraday mirror) interferometer.
double umi_length_from_delay(double delay_s, double group_index);

/// Temperature swing for one 2 pi phase period.
double umi_temperature_period(const UMIParams& u);

/// Phase shift produced by a temperature offset delta_T.
double umi_phase(const UMIParams& u, double delta_T);

/// Sagnac loop parameters for the polarization source.
struct SagnacParams {
    double pump_phase = 0.0;      // rad
    double birefringence = 0.0;   // rad/m, Delta k_p
    double loop_length = 0.0;     // m
    double power_ratio = 1.0;     // eta >= 0

    double delta() const { return 2.0 * (pump_phase + birefringence * loop_length); }
    void validate() const;
};

/// |HH> + eta e^{i delta} |VV> with delta = 2 (phi_p + Dk_p L).
DensityMatrix sagnac_output_state(const SagnacParams& s);

/// Per-arm loss budget outside the chip.
struct ArmLossBudget {
    double output_coupling_dB = 5.5;
    double filter_dB = 4.0;
    double detector_efficiency = 0.2;

    double transmission() const {
        return std::pow(10.0, -(output_coupling_dB + filter_dB) / 10.0) * detector_efficiency;
    }
    void validate() const;
};

// Nonparalyzable dead-time conversions.
double observed_rate(double true_rate, double dead_time_s);
double true_rate_from_observed(double observed, double dead_time_s);

enum class Arm { signal, idler };

struct SinglesRate {
    double true_rate = 0.0;      // before dead time
    double observed_rate = 0.0;  // after dead time
};

/// Singles at one detector: arm_transmission*(xi P^2 + raman P) + dark,
/// then the nonparalyzable dead-time correction.
SinglesRate singles_rate(const SourceParams& p, const DetectorParams& d, Arm arm,
                         double arm_transmission, double pump_mW, int channel_k = 8);

/// CAR = 1 + C_true/C_acc with C_true = xi P^2 T_s T_i and
/// C_acc = S_s S_i tau. Dead-time live fractions cancel in the ratio, so
/// pre-dead-time rates are used on both sides.
double predicted_car(const SourceParams& p, const DetectorParams& det_s,
                     const DetectorParams& det_i, double t_s, double t_i,
                     double pump_mW, double window_s, int channel_k = 8);

/// predicted_car as a function of the coincidence window.
double car_vs_window(const SourceParams& p, const DetectorParams& det_s,
                     const DetectorParams& det_i, double t_s, double t_i,
                     double pump_mW, double window_s, int channel_k = 8);

/// Central-peak coincidence weight (1/4)(1 + V cos(phi_s + phi_i)).
/// The 1/4 is the central-peak post-selection fraction.
double energy_time_fringe(double total_phase, double visibility);

/// Time-bin coincidence weight (1/4)(1 - V cos(2 phi_p - phi_s - phi_i)).
double time_bin_fringe(double phi_p, double phi_s, double phi_i, double visibility);

/// B = C / (T_s T_i dLambda P) in pairs / (s nm mW).
double spectral_brightness(double coincidence_rate, const ArmLossBudget& arm_s,
                           const ArmLossBudget& arm_i, double pump_mW,
                           double bandwidth_nm);

}  // namespace epsim
