#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace gazepet {

std::string read_file(const std::filesystem::path& path);

// Writes to "<path>.tmp" then renames over the destination. Parent
// directories are created.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

// gzip container (deterministic header: mtime 0).
std::string gzip_compress(std::string_view raw);
std::string gzip_decompress(std::string_view compressed);
bool looks_gzipped(std::string_view bytes);

}  // namespace gazepet
