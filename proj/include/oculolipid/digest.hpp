#pragma once

#include <string>

namespace oculolipid {

// Hex-encoded SHA-256.
std::string sha256_hex(const std::string& bytes);
std::string sha256_file_hex(const std::string& path);

} // namespace oculolipid
