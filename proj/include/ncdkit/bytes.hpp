#pragma once

#include <cstdint>
#include <string>

namespace ncdkit {

// Byte strings are std::string throughout: contents are arbitrary bytes,
// not necessarily text.
using Bytes = std::string;

// Hex-encoded SHA-256 of a byte string (content addressing for caches and
// distance provenance).
std::string sha256_hex(const Bytes& data);

// Reads a whole file in binary mode. Throws MissingFileError.
Bytes read_file(const std::string& path);

// Writes bytes to a file, truncating. Throws Error on I/O failure.
void write_file(const std::string& path, const Bytes& data);

}  // namespace ncdkit
