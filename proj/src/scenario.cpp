#include "epsim/scenario.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <stdexcept>

namespace epsim {

using nlohmann::json;

std::string to_string(Scheme s) {
    switch (s) {
        case Scheme::energy_time: return "energy_time";
        case Scheme::time_bin: return "time_bin";
        case Scheme::polarization: return "polarization";
    }
    return "?";
}

Scheme scheme_from_string(const std::string& s) {
    if (s == "energy_time") return Scheme::energy_time;
    if (s == "time_bin") return Scheme::time_bin;
    if (s == "polarization") return Scheme::polarization;
    throw std::invalid_argument("unknown scheme: " + s);
}

Analyzer Analyzer::from_named(char c) {
    switch (c) {
        case 'H': case 'V': case 'D': case 'A': case 'R': case 'L':
            return {Kind::named, 0.0, c};
        default:
            throw std::invalid_argument(std::string("unknown analyzer state: ") + c);
    }
}

Eigen::Vector2cd Analyzer::ket() const {
    if (kind == Kind::angle) return qubit::linear(angle_rad);
    switch (named) {
        case 'H': return qubit::basis0();
        case 'V': return qubit::basis1();
        case 'D': return qubit::diagonal();
        case 'A': return qubit::antidiagonal();
        case 'R': return qubit::right_circular();
        case 'L': return qubit::left_circular();
    }
    throw std::logic_error("Analyzer: bad state");
}

std::string Analyzer::label() const {
    if (kind == Kind::named) return std::string(1, named);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4gdeg", angle_rad * 180.0 / M_PI);
    return buf;
}

void Scenario::validate() const {
    source.validate();
    det_s.validate();
    det_i.validate();
    arm_s.validate();
    arm_i.validate();
    if (duration_s <= 0.0) throw std::invalid_argument("Scenario: duration must be > 0");
    if (channel_pair < 1 || channel_pair > 14)
        throw std::invalid_argument("Scenario: channel_pair outside 1..14");
    if (visibility < 0.0 || visibility > 1.0)
        throw std::invalid_argument("Scenario: visibility outside [0,1]");
    if (timing_resolution_ps <= 0.0)
        throw std::invalid_argument("Scenario: timing resolution must be > 0");
    if (coincidence_window_s <= 0.0)
        throw std::invalid_argument("Scenario: coincidence window must be > 0");
    if (scheme == Scheme::energy_time || scheme == Scheme::time_bin) {
        if (umi.delay_s <= 0.0)
            throw std::invalid_argument("Scenario: interferometer scheme needs UMI delay");
        umi.validate();
    }
    if (scheme == Scheme::polarization) sagnac.validate();
    if (pump.pulsed && pump.rep_rate_hz <= 0.0)
        throw std::invalid_argument("Scenario: pulsed pump needs rep rate");
}

namespace {

json analyzer_to_json(const Analyzer& a) {
    if (a.kind == Analyzer::Kind::named) return json(std::string(1, a.named));
    return json(a.angle_rad * 180.0 / M_PI);
}

Analyzer analyzer_from_json(const json& j) {
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (s.size() != 1) throw std::invalid_argument("analyzer string must be one of HVDARL");
        return Analyzer::from_named(s[0]);
    }
    return Analyzer::from_angle_deg(j.get<double>());
}

json detector_to_json(const DetectorParams& d) {
    json j{{"efficiency", d.efficiency},
           {"dark_rate_cps", d.dark_rate},
           {"dead_time_s", d.dead_time}};
    if (d.jitter_rms > 0.0) j["jitter_rms_s"] = d.jitter_rms;
    if (d.gated) {
        j["gated"] = true;
        j["gate_rate_hz"] = d.gate_rate;
        j["gate_width_s"] = d.gate_width;
    }
    return j;
}

DetectorParams detector_from_json(const json& j) {
    DetectorParams d;
    d.efficiency = j.at("efficiency").get<double>();
    d.dark_rate = j.at("dark_rate_cps").get<double>();
    d.dead_time = j.at("dead_time_s").get<double>();
    d.jitter_rms = j.value("jitter_rms_s", 0.0);
    d.gated = j.value("gated", false);
    d.gate_rate = j.value("gate_rate_hz", 0.0);
    d.gate_width = j.value("gate_width_s", 0.0);
    return d;
}

}  // namespace

std::string Scenario::to_json_string(int indent) const {
    json j;
    j["scheme"] = to_string(scheme);
    j["channel_pair"] = channel_pair;
    j["duration_s"] = duration_s;
    j["seed"] = seed;
    j["visibility"] = visibility;
    j["timing_resolution_ps"] = timing_resolution_ps;
    j["coincidence_window_s"] = coincidence_window_s;
    j["accidental_offset_s"] = accidental_offset_s;
    j["source"] = {{"xi_pairs_per_s_mW2", source.xi},
                   {"raman_s_per_s_mW", source.raman_s},
                   {"raman_i_per_s_mW", source.raman_i},
                   {"noise_profile", source.detuning_noise_profile}};
    j["detector_s"] = detector_to_json(det_s);
    j["detector_i"] = detector_to_json(det_i);
    j["arm_s"] = {{"output_coupling_dB", arm_s.output_coupling_dB}, {"filter_dB", arm_s.filter_dB}};
    j["arm_i"] = {{"output_coupling_dB", arm_i.output_coupling_dB}, {"filter_dB", arm_i.filter_dB}};
    j["pump"] = {{"mode", pump.pulsed ? "pulsed" : "cw"},
                 {"power_mW", pump.power_mW},
                 {"rep_rate_hz", pump.rep_rate_hz},
                 {"pulse_width_s", pump.pulse_width_s}};
    if (scheme != Scheme::polarization) {
        j["umi"] = {{"delay_s", umi.delay_s},
                    {"group_index", umi.group_index},
                    {"dn_dT", umi.dn_dT},
                    {"wavelength_m", umi.wavelength_m},
                    {"double_pass", umi.double_pass}};
        if (umi.length_diff_m > 0.0) j["umi"]["length_diff_m"] = umi.length_diff_m;
    }
    if (scheme == Scheme::polarization) {
        j["sagnac"] = {{"pump_phase_rad", sagnac.pump_phase},
                       {"birefringence_rad_per_m", sagnac.birefringence},
                       {"loop_length_m", sagnac.loop_length},
                       {"power_ratio", sagnac.power_ratio}};
    }
    json js;
    js["phi_p_rad"] = settings.phi_p_rad;
    js["phi_s_rad"] = settings.phi_s_rad;
    js["phi_i_rad"] = settings.phi_i_rad;
    js["analyzer_s"] = analyzer_to_json(settings.analyzer_s);
    js["analyzer_i"] = analyzer_to_json(settings.analyzer_i);
    js["phase_randomized"] = settings.phase_randomized;
    j["settings"] = js;
    if (gate_center_offset_s != 0.0) j["gate_center_offset_s"] = gate_center_offset_s;
    return j.dump(indent);
}

Scenario Scenario::from_json_string(const std::string& text) {
    const json j = json::parse(text);
    Scenario sc;
    sc.scheme = scheme_from_string(j.at("scheme").get<std::string>());
    sc.channel_pair = j.value("channel_pair", 8);
    sc.duration_s = j.value("duration_s", 30.0);
    sc.seed = j.value("seed", std::uint64_t{1});
    sc.visibility = j.value("visibility", 1.0);
    sc.timing_resolution_ps = j.value("timing_resolution_ps", 100.0);
    sc.coincidence_window_s = j.value("coincidence_window_s", 0.8e-9);
    sc.accidental_offset_s = j.value("accidental_offset_s", 50e-9);
    sc.gate_center_offset_s = j.value("gate_center_offset_s", 0.0);
    if (j.contains("source")) {
        const json& s = j["source"];
        sc.source.xi = s.value("xi_pairs_per_s_mW2", 0.0);
        sc.source.raman_s = s.value("raman_s_per_s_mW", 0.0);
        sc.source.raman_i = s.value("raman_i_per_s_mW", 0.0);
        if (s.contains("noise_profile")) {
            if (s["noise_profile"].is_array()) {
                auto arr = s["noise_profile"].get<std::vector<double>>();
                if (arr.size() != 15)
                    throw std::invalid_argument("noise_profile must have 15 entries");
                std::copy(arr.begin(), arr.end(), sc.source.detuning_noise_profile.begin());
            } else {
                sc.source.detuning_noise_profile =
                    linear_noise_profile(s["noise_profile"].at("intercept").get<double>(),
                                         s["noise_profile"].at("slope").get<double>());
            }
        }
    }
    if (j.contains("detector_s")) sc.det_s = detector_from_json(j["detector_s"]);
    if (j.contains("detector_i")) sc.det_i = detector_from_json(j["detector_i"]);
    if (j.contains("arm_s")) {
        sc.arm_s.output_coupling_dB = j["arm_s"].value("output_coupling_dB", 5.5);
        sc.arm_s.filter_dB = j["arm_s"].value("filter_dB", 4.0);
    }
    if (j.contains("arm_i")) {
        sc.arm_i.output_coupling_dB = j["arm_i"].value("output_coupling_dB", 5.5);
        sc.arm_i.filter_dB = j["arm_i"].value("filter_dB", 4.0);
    }
    if (j.contains("pump")) {
        const json& p = j["pump"];
        sc.pump.pulsed = p.value("mode", "cw") == "pulsed";
        sc.pump.power_mW = p.value("power_mW", 1.37);
        sc.pump.rep_rate_hz = p.value("rep_rate_hz", 100e6);
        sc.pump.pulse_width_s = p.value("pulse_width_s", 25e-12);
    }
    if (j.contains("umi")) {
        const json& u = j["umi"];
        sc.umi.delay_s = u.value("delay_s", 1.6e-9);
        sc.umi.group_index = u.value("group_index", 1.468);
        sc.umi.dn_dT = u.value("dn_dT", 0.811e-5);
        sc.umi.wavelength_m = u.value("wavelength_m", 1550e-9);
        sc.umi.double_pass = u.value("double_pass", true);
        sc.umi.length_diff_m = u.value("length_diff_m", 0.0);
    }
    if (j.contains("sagnac")) {
        const json& s = j["sagnac"];
        sc.sagnac.pump_phase = s.value("pump_phase_rad", 0.0);
        sc.sagnac.birefringence = s.value("birefringence_rad_per_m", 0.0);
        sc.sagnac.loop_length = s.value("loop_length_m", 0.0);
        sc.sagnac.power_ratio = s.value("power_ratio", 1.0);
    }
    if (j.contains("settings")) {
        const json& s = j["settings"];
        sc.settings.phi_p_rad = s.value("phi_p_rad", 0.0);
        sc.settings.phi_s_rad = s.value("phi_s_rad", 0.0);
        sc.settings.phi_i_rad = s.value("phi_i_rad", 0.0);
        if (s.contains("analyzer_s")) sc.settings.analyzer_s = analyzer_from_json(s["analyzer_s"]);
        if (s.contains("analyzer_i")) sc.settings.analyzer_i = analyzer_from_json(s["analyzer_i"]);
        sc.settings.phase_randomized = s.value("phase_randomized", false);
    }
    sc.validate();
    return sc;
}

std::uint64_t fnv1a64(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t Scenario::physics_hash() const {
    const std::string s = to_json_string(-1);
    return fnv1a64(s.data(), s.size());
}

}  // namespace epsim
