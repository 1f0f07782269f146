// Named scenario presets stored as JSON files. The preset directory is the
// compiled-in source default unless EPSIM_PRESET_DIR overrides it.

#pragma once

#include "epsim/scenario.hpp"

#include <string>
#include <vector>

namespace epsim {

struct Preset {
    std::string name;
    std::string description;
    std::string provenance;  // free-form notes: reported vs fitted fields
    Scenario scenario;
};

std::string preset_directory();
std::vector<std::string> list_presets();

/// Load by preset name (resolved inside the preset directory) or by path.
Preset load_preset(const std::string& name_or_path);

}  // namespace epsim
