#include "manifest.hpp"

#include <fstream>

#include <json.hpp>

#include "evoem/error.hpp"

#ifndef EVOEM_BUILD_ID
#define EVOEM_BUILD_ID "unknown"
#endif

namespace evoem::app {

std::string build_id() { return EVOEM_BUILD_ID; }

std::string manifest_json(const std::string& command, const RunConfig& config,
                          const std::vector<std::string>& outputs) {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["build_id"] = build_id();
  j["seed"] = config.eem.seed;
  auto& echo = j["config"];
  echo = nlohmann::ordered_json::object();
  for (const auto& [key, value] : config_entries(config)) echo[key] = value;
  j["outputs"] = outputs;
  return j.dump(2) + "\n";
}

void write_manifest(const std::string& path, const std::string& command, const RunConfig& config,
                    const std::vector<std::string>& outputs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << manifest_json(command, config, outputs);
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace evoem::app
