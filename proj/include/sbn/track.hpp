#pragma once

#include <vector>

#include "sbn/detect.hpp"

namespace sbn {

struct Track {
    int id = 0;  ///< positive, assigned in creation order
    std::vector<Detection> observations;  ///< strictly increasing frames
};

struct TrackerConfig {
    double iou_threshold = 0.3;
    int max_missed = 3;  ///< tracks unmatched for more than this many frames terminate
};

/// Greedy frame-to-frame association by descending IoU against each track's
/// last observed box. Unmatched detections start new tracks.
std::vector<Track> associate_tracks(const std::vector<Detection>& detections,
                                    const TrackerConfig& cfg = {});

}  // namespace sbn
