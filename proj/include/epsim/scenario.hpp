// Scenario: the full configuration of one simulated measurement run.
// Assembles source, detectors, losses, interferometer / Sagnac blocks,
// pump settings and measurement settings for one of the three schemes.

#pragma once

#include "epsim/photonics.hpp"

#include <cstdint>
#include <string>

namespace epsim {

enum class Scheme { energy_time, time_bin, polarization };

std::string to_string(Scheme s);
Scheme scheme_from_string(const std::string& s);

struct PumpConfig {
    bool pulsed = false;
    double power_mW = 1.37;         // CW power, or average power when pulsed
    double rep_rate_hz = 100e6;     // pulsed only
    double pulse_width_s = 25e-12;  // pulsed only
};

/// Polarization analyzer: either a linear polarizer angle or one of the
/// named tomography states H/V/D/A/R/L.
struct Analyzer {
    enum class Kind { angle, named };
    Kind kind = Kind::angle;
    double angle_rad = 0.0;
    char named = 'H';

    static Analyzer from_angle_rad(double rad) { return {Kind::angle, rad, 'H'}; }
    static Analyzer from_angle_deg(double deg) { return from_angle_rad(deg * M_PI / 180.0); }
    static Analyzer from_named(char c);

    Eigen::Vector2cd ket() const;
    std::string label() const;
};

struct MeasurementSettings {
    // Interferometer phases (energy-time uses phi_s + phi_i; time-bin all three).
    double phi_p_rad = 0.0;
    double phi_s_rad = 0.0;
    double phi_i_rad = 0.0;
    // Polarization analyzers.
    Analyzer analyzer_s = Analyzer::from_angle_rad(0.0);
    Analyzer analyzer_i = Analyzer::from_angle_rad(0.0);
    // Energy-time only: draw a fresh uniform total phase per pair, which
    // washes out the central-peak interference (histogram becomes 1:2:1).
    bool phase_randomized = false;
};

struct Scenario {
    Scheme scheme = Scheme::energy_time;
    SourceParams source;
    DetectorParams det_s;
    DetectorParams det_i;
    ArmLossBudget arm_s;
    ArmLossBudget arm_i;
    UMIParams umi;        // energy-time: common UMI; time-bin: all three UMIs
    SagnacParams sagnac;  // polarization only
    PumpConfig pump;
    int channel_pair = 8;
    MeasurementSettings settings;
    double duration_s = 30.0;
    std::uint64_t seed = 1;

    // Underlying two-photon interference visibility (state quality).
    double visibility = 1.0;

    // Event timing grid for CW operation.
    double timing_resolution_ps = 100.0;

    // Coincidence analysis attached to the scenario (used by counts-mode
    // and as defaults for time-tag analysis).
    double coincidence_window_s = 0.8e-9;
    double accidental_offset_s = 50e-9;

    // Gate placement for gated detectors, relative to the pulse time.
    double gate_center_offset_s = 0.0;

    void validate() const;

    /// FNV-1a hash of the canonical JSON form; covers every physics field.
    std::uint64_t physics_hash() const;

    std::string to_json_string(int indent = 2) const;
    static Scenario from_json_string(const std::string& text);
};

/// FNV-1a 64-bit over bytes. Stable across platforms; not cryptographic.
std::uint64_t fnv1a64(const void* data, std::size_t n);

}  // namespace epsim
