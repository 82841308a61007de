#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace plf {

std::string read_file(const std::filesystem::path& path);

// Writes `content` to a temp file next to `path`, then renames it over `path`.
// A failed write never leaves a partial file at `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace plf
