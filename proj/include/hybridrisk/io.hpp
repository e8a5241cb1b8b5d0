#pragma once

#include <filesystem>
#include <string>

namespace hybridrisk {

/// Writes to a temporary sibling, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

/// Whole file as bytes. Throws Io.
std::string read_file(const std::filesystem::path& path);

}  // namespace hybridrisk
