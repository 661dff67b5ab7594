// License: Apache 2.0. See LICENSE file in root directory.

#pragma once

#include <filesystem>
#include <string>

namespace depthcal {

/// Whole-file read. Throws IoError with the path in the message.
std::string read_file(const std::filesystem::path& path);

/// Write-temp-then-rename so concurrent readers never see partial files.
void write_file_atomic(const std::filesystem::path& path,
                       const std::string& contents);

}  // namespace depthcal
