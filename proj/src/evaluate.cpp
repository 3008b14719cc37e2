#include "sbn/evaluate.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace sbn {

using nlohmann::json;

std::size_t GroundTruth::total_boxes() const {
    std::size_t n = 0;
    for (const auto& [frame, objs] : frames) n += objs.size();
    return n;
}

std::string GroundTruth::to_json() const {
    json root;
    root["frames"] = json::array();
    for (const auto& [frame, objs] : frames) {
        json jf;
        jf["frame"] = frame;
        jf["objects"] = json::array();
        for (const Object& o : objs) {
            jf["objects"].push_back(
                {{"id", o.id}, {"x", o.box.x}, {"y", o.box.y}, {"w", o.box.w}, {"h", o.box.h}});
        }
        root["frames"].push_back(std::move(jf));
    }
    return root.dump();
}

GroundTruth GroundTruth::from_json(const std::string& text) {
    GroundTruth gt;
    json root = json::parse(text);
    if (!root.contains("frames") || !root["frames"].is_array())
        throw std::runtime_error("ground truth: missing \"frames\" array");
    for (const json& jf : root["frames"]) {
        const auto frame = jf.at("frame").get<std::size_t>();
        auto& objs = gt.frames[frame];
        for (const json& jo : jf.at("objects")) {
            Object o;
            o.id = jo.at("id").get<int>();
            o.box = {jo.at("x").get<double>(), jo.at("y").get<double>(),
                     jo.at("w").get<double>(), jo.at("h").get<double>()};
            objs.push_back(o);
        }
    }
    return gt;
}

GroundTruth GroundTruth::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error(path.string() + ": cannot open for reading");
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

void GroundTruth::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw std::runtime_error(path.string() + ": cannot open for writing");
    out << to_json() << "\n";
}

std::string DetectionEval::to_json() const {
    json j{{"tp", tp},       {"fp", fp},         {"fn", fn},
           {"precision", precision}, {"recall", recall}, {"ap", ap}};
    return j.dump();
}

std::string TrackingEval::to_json() const {
    json j{{"fp", fp}, {"fn", fn}, {"idsw", idsw}, {"mota", mota}};
    return j.dump();
}

DetectionEval average_precision(const std::vector<Detection>& detections, const GroundTruth& gt,
                                double iou_threshold) {
    const std::size_t total_gt = gt.total_boxes();
    if (total_gt == 0)
        throw std::invalid_argument("average_precision: empty ground truth");

    std::vector<Detection> dets = detections;
    std::sort(dets.begin(), dets.end(), [](const Detection& a, const Detection& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.frame != b.frame) return a.frame < b.frame;
        if (a.box.x != b.box.x) return a.box.x < b.box.x;
        return a.box.y < b.box.y;
    });

    std::map<std::size_t, std::vector<char>> gt_used;
    for (const auto& [frame, objs] : gt.frames)
        gt_used[frame].assign(objs.size(), 0);

    DetectionEval eval;
    std::vector<char> is_tp(dets.size(), 0);
    for (std::size_t i = 0; i < dets.size(); ++i) {
        const Detection& d = dets[i];
        auto it = gt.frames.find(d.frame);
        if (it == gt.frames.end()) continue;
        const std::vector<GroundTruth::Object>& objs = it->second;
        std::vector<char>& used = gt_used[d.frame];
        double best = 0.0;
        std::ptrdiff_t best_j = -1;
        for (std::size_t j = 0; j < objs.size(); ++j) {
            if (used[j]) continue;
            const double ov = iou(d.box, objs[j].box);
            if (ov >= iou_threshold && ov > best) {
                best = ov;
                best_j = static_cast<std::ptrdiff_t>(j);
            }
        }
        if (best_j >= 0) {
            used[static_cast<std::size_t>(best_j)] = 1;
            is_tp[i] = 1;
        }
    }

    // precision-recall curve over the score-ranked list
    std::size_t tp = 0, fp = 0;
    std::vector<double> precision(dets.size()), recall(dets.size());
    for (std::size_t i = 0; i < dets.size(); ++i) {
        if (is_tp[i]) ++tp; else ++fp;
        precision[i] = static_cast<double>(tp) / static_cast<double>(tp + fp);
        recall[i] = static_cast<double>(tp) / static_cast<double>(total_gt);
    }
    eval.tp = tp;
    eval.fp = fp;
    eval.fn = total_gt - tp;
    eval.precision = dets.empty() ? 0.0 : precision.back();
    eval.recall = dets.empty() ? 0.0 : recall.back();

    // all-point interpolation: replace precision by its running max from the
    // right; recall advances by exactly 1/total_gt at each true positive, so
    // the area reduces to the mean interpolated precision over true positives
    double sum_interp = 0.0, run_max = 0.0;
    for (std::size_t i = dets.size(); i-- > 0;) {
        run_max = std::max(run_max, precision[i]);
        if (is_tp[i]) sum_interp += run_max;
    }
    eval.ap = sum_interp / static_cast<double>(total_gt);
    return eval;
}

TrackingEval mota(const std::vector<Track>& tracks, const GroundTruth& gt,
                  double iou_threshold) {
    const std::size_t total_gt = gt.total_boxes();
    if (total_gt == 0)
        throw std::invalid_argument("mota: empty ground truth");

    // track observations grouped per frame
    std::map<std::size_t, std::vector<std::pair<int, Box>>> obs;
    for (const Track& t : tracks)
        for (const Detection& d : t.observations)
            obs[d.frame].push_back({t.id, d.box});

    std::set<std::size_t> frames;
    for (const auto& [f, _] : gt.frames) frames.insert(f);
    for (const auto& [f, _] : obs) frames.insert(f);

    std::map<int, int> last_track_of_gt;           // gt id -> track id at last match
    std::map<int, std::pair<int, Box>> prev_pair;  // gt id -> (track id, gt box) last frame

    TrackingEval eval;
    for (std::size_t frame : frames) {
        const std::vector<GroundTruth::Object>* gt_objs = nullptr;
        if (auto it = gt.frames.find(frame); it != gt.frames.end()) gt_objs = &it->second;
        const std::vector<std::pair<int, Box>>* hyps = nullptr;
        if (auto it = obs.find(frame); it != obs.end()) hyps = &it->second;

        const std::size_t n_gt = gt_objs ? gt_objs->size() : 0;
        const std::size_t n_hyp = hyps ? hyps->size() : 0;

        std::vector<char> gt_matched(n_gt, 0), hyp_matched(n_hyp, 0);
        std::vector<int> match_track(n_gt, -1);

        // keep previous correspondences that still overlap
        for (std::size_t g = 0; g < n_gt; ++g) {
            const auto prev = prev_pair.find((*gt_objs)[g].id);
            if (prev == prev_pair.end()) continue;
            const int want_track = prev->second.first;
            for (std::size_t hidx = 0; hidx < n_hyp; ++hidx) {
                if (hyp_matched[hidx] || (*hyps)[hidx].first != want_track) continue;
                if (iou((*gt_objs)[g].box, (*hyps)[hidx].second) >= iou_threshold) {
                    gt_matched[g] = 1;
                    hyp_matched[hidx] = 1;
                    match_track[g] = want_track;
                    break;
                }
            }
        }

        // greedy IoU matching for the rest
        struct Pair {
            double overlap;
            std::size_t g, hidx;
        };
        std::vector<Pair> pairs;
        for (std::size_t g = 0; g < n_gt; ++g) {
            if (gt_matched[g]) continue;
            for (std::size_t hidx = 0; hidx < n_hyp; ++hidx) {
                if (hyp_matched[hidx]) continue;
                const double ov = iou((*gt_objs)[g].box, (*hyps)[hidx].second);
                if (ov >= iou_threshold) pairs.push_back({ov, g, hidx});
            }
        }
        std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
            if (a.overlap != b.overlap) return a.overlap > b.overlap;
            if (a.g != b.g) return a.g < b.g;
            return a.hidx < b.hidx;
        });
        for (const Pair& p : pairs) {
            if (gt_matched[p.g] || hyp_matched[p.hidx]) continue;
            gt_matched[p.g] = 1;
            hyp_matched[p.hidx] = 1;
            match_track[p.g] = (*hyps)[p.hidx].first;
        }

        prev_pair.clear();
        for (std::size_t g = 0; g < n_gt; ++g) {
            if (!gt_matched[g]) {
                ++eval.fn;
                continue;
            }
            const int gid = (*gt_objs)[g].id;
            const int tid = match_track[g];
            auto last = last_track_of_gt.find(gid);
            if (last != last_track_of_gt.end() && last->second != tid) ++eval.idsw;
            last_track_of_gt[gid] = tid;
            prev_pair[gid] = {tid, (*gt_objs)[g].box};
        }
        for (std::size_t hidx = 0; hidx < n_hyp; ++hidx)
            if (!hyp_matched[hidx]) ++eval.fp;
    }

    eval.mota = 1.0 - static_cast<double>(eval.fn + eval.fp + eval.idsw) /
                          static_cast<double>(total_gt);
    return eval;
}

}  // namespace sbn
