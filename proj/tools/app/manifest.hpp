#pragma once

#include <string>
#include <vector>

#include "run_config.hpp"

namespace evoem::app {

// git-describe style identifier of the source tree this binary was built from.
std::string build_id();

// manifest.json: command, build id, seed and the full configuration echo, so
// that the run can be reproduced exactly; plus the list of files written.
std::string manifest_json(const std::string& command, const RunConfig& config, const std::vector<std::string>& outputs);
void write_manifest(const std::string& path, const std::string& command, const RunConfig& config,
                    const std::vector<std::string>& outputs);

}  // namespace evoem::app
