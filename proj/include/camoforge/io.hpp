#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace camoforge {

// Writes to a sibling temp file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view text);

std::string read_file(const std::filesystem::path& path);

// Appends one line (newline added) to a text file, creating it with
// `header` first when it does not yet exist.
void append_line(const std::filesystem::path& path, const std::string& header,
                 const std::string& line);

// printf("%.*g") helper used by every text serializer.
std::string format_double(double v, int significant = 9);

}  // namespace camoforge
