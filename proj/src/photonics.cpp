#include "epsim/photonics.hpp"

#include "epsim/channels.hpp"

#include <limits>
#include <stdexcept>

namespace epsim {

void SourceParams::validate() const {
    if (xi < 0 || raman_s < 0 || raman_i < 0)
        throw std::invalid_argument("SourceParams: coefficients must be >= 0");
    for (double m : detuning_noise_profile)
        if (m < 0) throw std::invalid_argument("SourceParams: noise multiplier < 0");
}

std::array<double, 15> linear_noise_profile(double intercept, double slope) {
    std::array<double, 15> a{};
    for (int k = 0; k < 15; ++k) a[static_cast<std::size_t>(k)] = std::max(0.0, intercept + slope * k);
    return a;
}

void DetectorParams::validate() const {
    if (efficiency < 0.0 || efficiency > 1.0)
        throw std::invalid_argument("DetectorParams: efficiency outside [0,1]");
    if (dead_time < 0.0) throw std::invalid_argument("DetectorParams: dead_time < 0");
    if (gated && (gate_rate <= 0.0 || gate_width <= 0.0))
        throw std::invalid_argument("DetectorParams: gated detector needs gate_rate and gate_width");
}

void UMIParams::validate() const {
    if (delay_s > 0.0 && length_diff_m > 0.0) {
        const double expected = umi_length_from_delay(delay_s, group_index);
        if (std::abs(expected - length_diff_m) > 1e-3 * length_diff_m)
            throw std::invalid_argument("UMIParams: L_d inconsistent with c dt / (2n)");
    }
}

double umi_length_from_delay(double delay_s, double group_index) {
    return kSpeedOfLight * delay_s / (2.0 * group_index);
}

double umi_temperature_period(const UMIParams& u) {
    if (u.length_diff_m == 0.0)
        throw std::invalid_argument("umi_temperature_period: L_d is zero");
    const double passes = u.double_pass ? 2.0 : 1.0;
    return u.wavelength_m / (passes * u.length_diff_m * u.dn_dT);
}

double umi_phase(const UMIParams& u, double delta_T) {
    return 2.0 * M_PI * delta_T / umi_temperature_period(u);
}

void SagnacParams::validate() const {
    if (power_ratio < 0.0) throw std::invalid_argument("SagnacParams: eta < 0");
}

DensityMatrix sagnac_output_state(const SagnacParams& s) {
    s.validate();
    return general_pair_state(s.power_ratio, s.delta());
}

void ArmLossBudget::validate() const {
    if (output_coupling_dB < 0.0 || filter_dB < 0.0)
        throw std::invalid_argument("ArmLossBudget: dB losses must be >= 0");
    if (detector_efficiency < 0.0 || detector_efficiency > 1.0)
        throw std::invalid_argument("ArmLossBudget: detector efficiency outside [0,1]");
}

double observed_rate(double true_rate, double dead_time_s) {
    if (true_rate <= 0.0) return std::max(true_rate, 0.0);
    return true_rate / (1.0 + true_rate * dead_time_s);
}

double true_rate_from_observed(double observed, double dead_time_s) {
    const double occupancy = observed * dead_time_s;
    if (occupancy >= 1.0)
        throw std::invalid_argument("true_rate_from_observed: rate at or above saturation");
    return observed / (1.0 - occupancy);
}

SinglesRate singles_rate(const SourceParams& p, const DetectorParams& d, Arm arm,
                         double arm_transmission, double pump_mW, int channel_k) {
    if (pump_mW < 0.0) throw std::invalid_argument("singles_rate: pump power < 0");
    const double raman = (arm == Arm::signal ? p.raman_s : p.raman_i) * p.noise_multiplier(channel_k);
    SinglesRate r;
    r.true_rate = arm_transmission * (p.xi * pump_mW * pump_mW + raman * pump_mW) + d.dark_rate;
    r.observed_rate = observed_rate(r.true_rate, d.dead_time);
    return r;
}

double predicted_car(const SourceParams& p, const DetectorParams& det_s,
                     const DetectorParams& det_i, double t_s, double t_i,
                     double pump_mW, double window_s, int channel_k) {
    if (window_s <= 0.0) throw std::invalid_argument("predicted_car: window must be > 0");
    const double s_s = singles_rate(p, det_s, Arm::signal, t_s, pump_mW, channel_k).true_rate;
    const double s_i = singles_rate(p, det_i, Arm::idler, t_i, pump_mW, channel_k).true_rate;
    const double c_true = p.xi * pump_mW * pump_mW * t_s * t_i;
    const double c_acc = s_s * s_i * window_s;
    if (c_acc <= 0.0) return std::numeric_limits<double>::infinity();
    return 1.0 + c_true / c_acc;
}

double car_vs_window(const SourceParams& p, const DetectorParams& det_s,
                     const DetectorParams& det_i, double t_s, double t_i,
                     double pump_mW, double window_s, int channel_k) {
    return predicted_car(p, det_s, det_i, t_s, t_i, pump_mW, window_s, channel_k);
}

double energy_time_fringe(double total_phase, double visibility) {
    if (visibility < 0.0 || visibility > 1.0)
        throw std::invalid_argument("energy_time_fringe: V outside [0,1]");
    return 0.25 * (1.0 + visibility * std::cos(total_phase));
}

double time_bin_fringe(double phi_p, double phi_s, double phi_i, double visibility) {
    if (visibility < 0.0 || visibility > 1.0)
        throw std::invalid_argument("time_bin_fringe: V outside [0,1]");
    return 0.25 * (1.0 - visibility * std::cos(2.0 * phi_p - phi_s - phi_i));
}

double spectral_brightness(double coincidence_rate, const ArmLossBudget& arm_s,
                           const ArmLossBudget& arm_i, double pump_mW,
                           double bandwidth_nm) {
    if (coincidence_rate <= 0.0 || pump_mW <= 0.0 || bandwidth_nm <= 0.0)
        throw std::invalid_argument("spectral_brightness: inputs must be positive");
    const double t_s = arm_s.transmission();
    const double t_i = arm_i.transmission();
    if (t_s <= 0.0 || t_i <= 0.0)
        throw std::invalid_argument("spectral_brightness: zero arm transmission");
    return coincidence_rate / (t_s * t_i * bandwidth_nm * pump_mW);
}

}  // namespace epsim
