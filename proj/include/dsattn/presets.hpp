#pragma once

#include <string>
#include <vector>

#include "dsattn/costmodel.hpp"

namespace dsattn::presets {

// Cost-model layer shapes. "text" is the 4K-length text-classification
// configuration whose MAC/energy numbers the efficiency study reports;
// "text-2k" is the shorter variant used for baseline comparison and the
// sensitivity sweeps. "desk" is the small shape used by CI-scale runs.
costmodel::LayerShape cost_shape(const std::string& name);
std::vector<std::string> cost_preset_names();

// Full train-command config documents (JSON text) for --preset.
std::string train_config_json(const std::string& name);
std::vector<std::string> train_preset_names();

}  // namespace dsattn::presets
