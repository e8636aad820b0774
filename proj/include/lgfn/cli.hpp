#pragma once

#include "lgfn/config.hpp"
#include "lgfn/train.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace lgfn {

struct PathsConfig {
    // HR training fields: .lf4 files or directories of view_{u}_{v} images.
    std::vector<std::string> train_hr;
    std::string out_dir = "runs/lgfn";
};

struct CliConfig {
    LgfnConfig model;
    TrainConfig train;
    Index patch = 32;  // LR patch edge
    Index patch_stride = 32;
    PathsConfig paths;
    std::uint64_t seed = 0;
};

// Strict reader: unknown keys and wrong types raise ConfigError naming the
// offending key. Missing keys keep their defaults.
CliConfig parse_cli_config(const nlohmann::json& doc);
CliConfig load_cli_config(const std::filesystem::path& path);
nlohmann::json to_json(const CliConfig& cfg);

// Entry point behind the lgfn executable. args excludes the program name.
// Returns 0 on success, 1 on runtime failure, 2 on usage errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace lgfn
