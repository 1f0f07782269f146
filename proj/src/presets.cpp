#include "epsim/presets.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#ifndef EPSIM_DEFAULT_PRESET_DIR
#define EPSIM_DEFAULT_PRESET_DIR "presets"
#endif

namespace epsim {

namespace fs = std::filesystem;
using nlohmann::json;

std::string preset_directory() {
    if (const char* env = std::getenv("EPSIM_PRESET_DIR"); env && *env) return env;
    return EPSIM_DEFAULT_PRESET_DIR;
}

std::vector<std::string> list_presets() {
    std::vector<std::string> names;
    const fs::path dir(preset_directory());
    if (!fs::is_directory(dir)) return names;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.path().extension() == ".json")
            names.push_back(entry.path().stem().string());
    }
    std::sort(names.begin(), names.end());
    return names;
}

Preset load_preset(const std::string& name_or_path) {
    fs::path path(name_or_path);
    if (!fs::exists(path)) {
        path = fs::path(preset_directory()) / (name_or_path + ".json");
        if (!fs::exists(path))
            throw std::runtime_error("preset not found: " + name_or_path +
                                     " (preset dir: " + preset_directory() + ")");
    }
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open preset: " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();

    const json j = json::parse(buf.str());
    Preset p;
    p.name = j.value("name", path.stem().string());
    p.description = j.value("description", "");
    if (j.contains("provenance")) p.provenance = j["provenance"].dump(2);
    if (!j.contains("scenario"))
        throw std::runtime_error("preset has no scenario block: " + path.string());
    p.scenario = Scenario::from_json_string(j["scenario"].dump());
    return p;
}

}  // namespace epsim
