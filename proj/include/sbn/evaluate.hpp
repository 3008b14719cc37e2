#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "sbn/detect.hpp"
#include "sbn/track.hpp"

namespace sbn {

/// Ground-truth annotations: per frame, a list of (stable track id, box).
struct GroundTruth {
    struct Object {
        int id = 0;
        Box box;
    };
    std::map<std::size_t, std::vector<Object>> frames;

    std::size_t total_boxes() const;
    std::string to_json() const;
    static GroundTruth from_json(const std::string& text);
    static GroundTruth load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;
};

struct DetectionEval {
    std::size_t tp = 0, fp = 0, fn = 0;
    double precision = 0.0, recall = 0.0, ap = 0.0;
    std::string to_json() const;
};

struct TrackingEval {
    std::size_t fp = 0, fn = 0, idsw = 0;
    double mota = 0.0;
    std::string to_json() const;
};

/// Average precision with all-point interpolation: detections sorted by
/// descending score (ties by frame, then x, then y), matched greedily
/// one-to-one per frame at IoU >= iou_threshold.
DetectionEval average_precision(const std::vector<Detection>& detections, const GroundTruth& gt,
                                double iou_threshold = 0.5);

/// CLEAR-style multiple object tracking accuracy. Per frame, previous
/// gt-track correspondences are kept while still above the IoU threshold,
/// the rest are matched greedily by IoU; identity switches count ground-truth
/// objects whose matched track id changed since their last match.
TrackingEval mota(const std::vector<Track>& tracks, const GroundTruth& gt,
                  double iou_threshold = 0.5);

}  // namespace sbn
