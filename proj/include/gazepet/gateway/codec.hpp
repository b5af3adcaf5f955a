#pragma once

#include <string>

#include "gazepet/display.hpp"

namespace gazepet::gateway {

// Lossless 8-bit PNG (gray or RGB by channel count). Output bytes depend only
// on the image.
std::string encode_png(const Image8& image);
// Throws FormatError for anything that is not an 8-bit gray/RGB PNG.
Image8 decode_png(const std::string& bytes);

std::string base64_encode(const std::string& bytes);
// Throws FormatError on invalid input.
std::string base64_decode(const std::string& text);
std::string sha1_digest(const std::string& bytes);  // 20 raw bytes
std::string sha256_hex(const std::string& bytes);

}  // namespace gazepet::gateway
