#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "sbn/frame_stack.hpp"

namespace sbn {

/// Axis-aligned box in pixel coordinates: x,y is the top-left corner.
struct Box {
    double x = 0, y = 0, w = 0, h = 0;
};

/// Intersection-over-union of two boxes; 0 for disjoint boxes.
double iou(const Box& a, const Box& b);

struct Detection {
    std::size_t frame = 0;
    int id = -1;  ///< -1 until a tracker assigns one
    Box box;
    double score = 0.0;
};

enum class Polarity { kDark, kBright };

struct DetectorConfig {
    double threshold = 0.5;
    std::size_t min_area = 4;
    Polarity polarity = Polarity::kDark;
    /// Replace values by |v| / max|v| over the stack before thresholding
    /// (for signed component stacks; pair with Polarity::kBright).
    bool abs_normalize = false;
};

/// Threshold + 8-connected component detector. One detection per component
/// with area >= min_area; the box is the component's bounding box and the
/// score is the mean contrast of the component against its local surround,
/// clamped to [0,1]. Detections are ordered by (frame, x, y).
std::vector<Detection> detect_shadows(const FrameStack& stack, const DetectorConfig& cfg);

/// CSV round trip, format: frame,id,x,y,w,h,score (header included).
void save_detections_csv(const std::vector<Detection>& dets, const std::filesystem::path& path);
std::vector<Detection> load_detections_csv(const std::filesystem::path& path);

}  // namespace sbn
