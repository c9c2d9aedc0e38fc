#pragma once

#include <vector>

#include "bcskit/image.hpp"

namespace fixtures {

// 96x96 image built from four global DCT modes whose frequencies are
// divisible by 3, plus the mean. Restricted to any aligned 32x32 block each
// mode is a pure 32-point DCT mode again, so every block is exactly 5-sparse
// in the block DCT; amplitudes keep those coefficients far above the
// thresholds the engines use. Exact-recovery tests depend on both facts.
bcskit::Image cosine_grid_96();

// Three 256x256 piecewise-smooth images: slanted wave fields cut by step
// edges (a disc, a rectangle, half-plane shifts). The smooth content sits in
// mid-band frequencies, at least roughly one period per 64-pixel block.
// Near-constant modes recover slowly from low sampling rates when every block
// shares one matrix, because their errors alias into the same measurement
// direction in each block, so these fixtures keep such content small.
std::vector<bcskit::Image> piecewise_smooth_256();

// 128x128: gentle gradient background with one bright finely-textured 32x32
// square aligned to the B=32 grid. Saliency concentrates on the square.
bcskit::Image bright_square_128();

// 128x128 plaid with the same statistics everywhere; saliency is close to
// uniform.
bcskit::Image uniform_texture_128();

// Black 128x128 with a bright 8x8 square at rows/cols 60..67.
bcskit::Image saliency_square_128();

// Small smooth 32x32 images for network training (index 0..3) plus a held-out
// one (index 4). Distinct blob positions and gradient orientations per index.
bcskit::Image toy_image(int index);
std::vector<bcskit::Image> toy_training_set();

}  // namespace fixtures
