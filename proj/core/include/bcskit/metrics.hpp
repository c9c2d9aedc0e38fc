#pragma once

#include "bcskit/image.hpp"

namespace bcskit {

// Peak signal-to-noise ratio against peak 255, in dB. Identical images give
// +infinity. Throws std::invalid_argument on shape mismatch.
double psnr(const Image& a, const Image& b);

// Mean structural similarity with the standard 11x11 Gaussian window
// (sigma 1.5, K1 = 0.01, K2 = 0.03, dynamic range 255), valid positions only.
// Requires both dimensions >= 11.
double ssim(const Image& a, const Image& b);

// Mean absolute difference across block-boundary neighbor pairs minus the same
// statistic over interior neighbor pairs, both orientations pooled. Zero for
// constant images and, up to float noise, for globally smooth ramps; positive
// when the B-grid shows through. Requires both dimensions >= 2 * block_size.
double blockiness(const Image& img, int block_size);

}  // namespace bcskit
