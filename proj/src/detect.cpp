#include "sbn/detect.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace sbn {

double iou(const Box& a, const Box& b) {
    const double ix0 = std::max(a.x, b.x);
    const double iy0 = std::max(a.y, b.y);
    const double ix1 = std::min(a.x + a.w, b.x + b.w);
    const double iy1 = std::min(a.y + a.h, b.y + b.h);
    const double iw = ix1 - ix0, ih = iy1 - iy0;
    if (iw <= 0.0 || ih <= 0.0) return 0.0;
    const double inter = iw * ih;
    const double uni = a.w * a.h + b.w * b.h - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

namespace {

struct Component {
    int min_x = 0, min_y = 0, max_x = 0, max_y = 0;
    std::vector<std::size_t> pixels;
};

// 8-connected flood fill over the binary mask.
std::vector<Component> label_components(const std::vector<char>& mask, int h, int w) {
    std::vector<Component> comps;
    std::vector<char> seen(mask.size(), 0);
    std::vector<std::size_t> stack;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t idx = static_cast<std::size_t>(y) * w + x;
            if (!mask[idx] || seen[idx]) continue;
            Component c;
            c.min_x = c.max_x = x;
            c.min_y = c.max_y = y;
            stack.assign(1, idx);
            seen[idx] = 1;
            while (!stack.empty()) {
                const std::size_t cur = stack.back();
                stack.pop_back();
                c.pixels.push_back(cur);
                const int cy = static_cast<int>(cur) / w;
                const int cx = static_cast<int>(cur) % w;
                c.min_x = std::min(c.min_x, cx);
                c.max_x = std::max(c.max_x, cx);
                c.min_y = std::min(c.min_y, cy);
                c.max_y = std::max(c.max_y, cy);
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        if (!dy && !dx) continue;
                        const int ny = cy + dy, nx = cx + dx;
                        if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
                        const std::size_t nidx = static_cast<std::size_t>(ny) * w + nx;
                        if (mask[nidx] && !seen[nidx]) {
                            seen[nidx] = 1;
                            stack.push_back(nidx);
                        }
                    }
                }
            }
            comps.push_back(std::move(c));
        }
    }
    return comps;
}

double component_score(const Component& c, const std::vector<float>& values, int h, int w,
                       Polarity polarity) {
    double comp_sum = 0.0;
    std::vector<char> inside(static_cast<std::size_t>(h) * w, 0);
    for (std::size_t idx : c.pixels) {
        inside[idx] = 1;
        comp_sum += values[idx];
    }
    const double comp_mean = comp_sum / static_cast<double>(c.pixels.size());

    // surround: bounding box inflated by 2, minus the component itself
    const int y0 = std::max(0, c.min_y - 2), y1 = std::min(h - 1, c.max_y + 2);
    const int x0 = std::max(0, c.min_x - 2), x1 = std::min(w - 1, c.max_x + 2);
    double ring_sum = 0.0;
    std::size_t ring_n = 0;
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            const std::size_t idx = static_cast<std::size_t>(y) * w + x;
            if (inside[idx]) continue;
            ring_sum += values[idx];
            ++ring_n;
        }
    }
    if (ring_n == 0) return 1.0;  // component fills the frame
    const double ring_mean = ring_sum / static_cast<double>(ring_n);
    const double contrast =
        polarity == Polarity::kDark ? ring_mean - comp_mean : comp_mean - ring_mean;
    return std::clamp(contrast, 0.0, 1.0);
}

}  // namespace

std::vector<Detection> detect_shadows(const FrameStack& stack, const DetectorConfig& cfg) {
    const int h = static_cast<int>(stack.height());
    const int w = static_cast<int>(stack.width());
    const std::size_t n = stack.pixels_per_frame();

    float scale = 1.0f;
    if (cfg.abs_normalize) {
        float mx = 0.0f;
        for (float v : stack.data()) mx = std::max(mx, std::abs(v));
        scale = mx > 0.0f ? 1.0f / mx : 1.0f;
    }

    std::vector<Detection> out;
    std::vector<float> values(n);
    std::vector<char> mask(n);
    for (std::size_t f = 0; f < stack.frames(); ++f) {
        const float* src = stack.frame_data(f);
        for (std::size_t i = 0; i < n; ++i) {
            values[i] = cfg.abs_normalize ? std::abs(src[i]) * scale : src[i];
            mask[i] = cfg.polarity == Polarity::kDark ? values[i] < cfg.threshold
                                                      : values[i] > cfg.threshold;
        }
        std::vector<Component> comps = label_components(mask, h, w);
        std::vector<Detection> frame_dets;
        for (const Component& c : comps) {
            if (c.pixels.size() < cfg.min_area) continue;
            Detection d;
            d.frame = f;
            d.box = {static_cast<double>(c.min_x), static_cast<double>(c.min_y),
                     static_cast<double>(c.max_x - c.min_x + 1),
                     static_cast<double>(c.max_y - c.min_y + 1)};
            d.score = component_score(c, values, h, w, cfg.polarity);
            frame_dets.push_back(d);
        }
        std::sort(frame_dets.begin(), frame_dets.end(), [](const Detection& a, const Detection& b) {
            return a.box.x != b.box.x ? a.box.x < b.box.x : a.box.y < b.box.y;
        });
        out.insert(out.end(), frame_dets.begin(), frame_dets.end());
    }
    return out;
}

void save_detections_csv(const std::vector<Detection>& dets, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw std::runtime_error(path.string() + ": cannot open for writing");
    out << "frame,id,x,y,w,h,score\n";
    out.precision(9);
    for (const Detection& d : dets) {
        out << d.frame << "," << d.id << "," << d.box.x << "," << d.box.y << "," << d.box.w << ","
            << d.box.h << "," << d.score << "\n";
    }
    if (!out)
        throw std::runtime_error(path.string() + ": write failed");
}

std::vector<Detection> load_detections_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error(path.string() + ": cannot open for reading");
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error(path.string() + ": empty detections file");
    std::vector<Detection> dets;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string field;
        Detection d;
        auto next = [&]() {
            if (!std::getline(ss, field, ','))
                throw std::runtime_error(path.string() + ": malformed row: " + line);
            return field;
        };
        d.frame = static_cast<std::size_t>(std::stoull(next()));
        d.id = std::stoi(next());
        d.box.x = std::stod(next());
        d.box.y = std::stod(next());
        d.box.w = std::stod(next());
        d.box.h = std::stod(next());
        d.score = std::stod(next());
        dets.push_back(d);
    }
    return dets;
}

}  // namespace sbn
