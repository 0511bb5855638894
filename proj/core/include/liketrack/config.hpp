#pragma once

#include <filesystem>
#include <string>

#include "liketrack/evaluation.hpp"
#include "liketrack/pfilter.hpp"

namespace liketrack {

struct AppConfig {
    TrackerConfig tracker;
    OPEOptions ope;
};

// Flat "section.key = value" text; '#' starts a comment. Unknown keys and bad
// values throw DataError naming the line. Keys left out keep their defaults.
AppConfig parse_config(const std::string& text);
// Throws DataError naming the path when it cannot be read.
AppConfig load_config(const std::filesystem::path& path);
// Every key with its current value; parse_config(format_config(c)) == c.
std::string format_config(const AppConfig& cfg);

}  // namespace liketrack
