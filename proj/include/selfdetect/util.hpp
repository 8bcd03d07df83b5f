#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace selfdetect {

// Current UTC time as "YYYY-MM-DDTHH:MM:SSZ".
std::string now_utc_iso8601();

// Lowercase alphanumeric slug with single dashes, e.g. "Global Warming!"
// -> "global-warming".
std::string slugify(std::string_view text);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

// Creates the directory holding `path` when it does not exist yet.
void ensure_parent_dir(const std::filesystem::path& path);

}  // namespace selfdetect
