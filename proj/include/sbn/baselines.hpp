#pragma once

#include <cstddef>
#include <vector>

#include "sbn/frame_stack.hpp"

namespace sbn {

/// Classical 256-bin histogram equalization of a single [0,1]-clamped image.
/// Output is again in [0,1]. A single-level image is returned unchanged.
std::vector<float> histogram_equalize(const std::vector<float>& image, std::size_t height,
                                      std::size_t width);

/// Applies histogram_equalize frame by frame.
FrameStack histogram_equalize_stack(const FrameStack& stack);

/// Background-difference baseline: per pixel, subtracts the temporal median
/// across frames. Requires at least 2 frames.
FrameStack temporal_median_subtract(const FrameStack& stack);

}  // namespace sbn
