#include "sbn/track.hpp"

#include <algorithm>
#include <map>

namespace sbn {

namespace {

struct ActiveTrack {
    std::size_t track_index = 0;
    Box last_box;
    std::size_t last_frame = 0;
};

}  // namespace

std::vector<Track> associate_tracks(const std::vector<Detection>& detections,
                                    const TrackerConfig& cfg) {
    std::vector<Track> tracks;
    std::vector<ActiveTrack> active;
    int next_id = 1;

    // group detections by frame, preserving input order within a frame
    std::map<std::size_t, std::vector<Detection>> by_frame;
    for (const Detection& d : detections)
        by_frame[d.frame].push_back(d);

    for (const auto& [frame, dets] : by_frame) {
        // retire tracks that have been silent too long
        std::erase_if(active, [&](const ActiveTrack& t) {
            return frame - t.last_frame > static_cast<std::size_t>(cfg.max_missed) + 1;
        });

        // candidate pairs sorted by IoU descending, ties by (det order, track order)
        struct Pair {
            double overlap;
            std::size_t det, act;
        };
        std::vector<Pair> pairs;
        for (std::size_t di = 0; di < dets.size(); ++di)
            for (std::size_t ai = 0; ai < active.size(); ++ai) {
                const double ov = iou(dets[di].box, active[ai].last_box);
                if (ov >= cfg.iou_threshold)
                    pairs.push_back({ov, di, ai});
            }
        std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
            if (a.overlap != b.overlap) return a.overlap > b.overlap;
            if (a.det != b.det) return a.det < b.det;
            return a.act < b.act;
        });

        std::vector<char> det_used(dets.size(), 0), act_used(active.size(), 0);
        for (const Pair& p : pairs) {
            if (det_used[p.det] || act_used[p.act]) continue;
            det_used[p.det] = 1;
            act_used[p.act] = 1;
            ActiveTrack& t = active[p.act];
            Detection obs = dets[p.det];
            obs.id = tracks[t.track_index].id;
            tracks[t.track_index].observations.push_back(obs);
            t.last_box = obs.box;
            t.last_frame = frame;
        }
        for (std::size_t di = 0; di < dets.size(); ++di) {
            if (det_used[di]) continue;
            Track t;
            t.id = next_id++;
            Detection obs = dets[di];
            obs.id = t.id;
            t.observations.push_back(obs);
            tracks.push_back(std::move(t));
            active.push_back({tracks.size() - 1, obs.box, frame});
        }
    }
    return tracks;
}

}  // namespace sbn
