#pragma once

#include <string>

namespace cliniq {

// Whole-file read; throws Error(errc::io_error) naming the path.
std::string read_file(const std::string& path);

// Write-then-rename so partially written outputs never land under the final
// name. The temp file lives next to the target (same filesystem).
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace cliniq
