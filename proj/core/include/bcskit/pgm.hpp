#pragma once

#include <string>

#include "bcskit/image.hpp"

namespace bcskit {

// Binary PGM (P5, maxval 255) only. load throws std::runtime_error on any
// malformed header, wrong magic, maxval other than 255, or truncated payload.
Image load_pgm(const std::string& path);

// Clamps to [0, 255] and rounds half up before writing. Integer-valued images
// in range round-trip byte-identically.
void save_pgm(const Image& img, const std::string& path);

}  // namespace bcskit
