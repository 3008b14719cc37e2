#include "sbn/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace sbn {

using nlohmann::json;

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace

Rng::Rng(std::uint64_t seed) {
    std::uint64_t s = seed;
    state_ = splitmix64(s);
    if (state_ == 0) state_ = 0x9e3779b97f4a7c15ULL;
}

std::uint64_t Rng::next_u64() {
    state_ ^= state_ >> 12;
    state_ ^= state_ << 25;
    state_ ^= state_ >> 27;
    return state_ * 0x2545f4914f6cdd1dULL;
}

double Rng::next_uniform() {
    // 53 random bits; +1 maps [0, 2^53) to (0, 2^53] so log() is safe
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
}

double Rng::next_gaussian() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    const double u1 = next_uniform();
    const double u2 = next_uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
}

namespace {

double profile_value(BackgroundProfile::Kind kind, double center, double radius, std::size_t i,
                     std::size_t n) {
    switch (kind) {
        case BackgroundProfile::Kind::kFlat:
            return 1.0;
        case BackgroundProfile::Kind::kBump: {
            const double d = static_cast<double>(i) - center;
            if (std::abs(d) > radius) return 0.0;
            const double c = std::cos(std::numbers::pi * d / (2.0 * radius));
            return c * c;
        }
        case BackgroundProfile::Kind::kSine2: {
            if (n < 2) return 0.0;
            const double s =
                std::sin(std::numbers::pi * static_cast<double>(i) / static_cast<double>(n - 1));
            return s * s;
        }
    }
    return 0.0;
}

/// Footprint mask evaluated once per target.
std::vector<char> footprint_mask(const TargetSpec& t) {
    std::vector<char> mask(t.height * t.width, 1);
    if (t.shape == TargetShape::kEllipse) {
        const double ry = (static_cast<double>(t.height) - 1.0) / 2.0;
        const double rx = (static_cast<double>(t.width) - 1.0) / 2.0;
        for (std::size_t y = 0; y < t.height; ++y) {
            for (std::size_t x = 0; x < t.width; ++x) {
                const double dy = (static_cast<double>(y) - ry) / std::max(ry, 1e-9);
                const double dx = (static_cast<double>(x) - rx) / std::max(rx, 1e-9);
                mask[y * t.width + x] = dy * dy + dx * dx <= 1.0 + 1e-9 ? 1 : 0;
            }
        }
    }
    return mask;
}

std::pair<long, long> target_position(const TargetSpec& t, std::size_t frame,
                                      std::size_t frames) {
    const double a =
        frames > 1 ? static_cast<double>(frame) / static_cast<double>(frames - 1) : 0.0;
    double y, x;
    if (t.quadratic) {
        // Bezier-style quadratic through from (a=0), via (a=0.5), to (a=1)
        const double b0 = (1 - a) * (1 - 2 * a);
        const double b1 = 4 * a * (1 - a);
        const double b2 = a * (2 * a - 1);
        y = b0 * t.from_y + b1 * t.via_y + b2 * t.to_y;
        x = b0 * t.from_x + b1 * t.via_x + b2 * t.to_x;
    } else {
        y = t.from_y + a * (t.to_y - t.from_y);
        x = t.from_x + a * (t.to_x - t.from_x);
    }
    return {std::lround(y), std::lround(x)};
}

double noise_mean(const NoiseModel& m) {
    switch (m.kind) {
        case NoiseKind::kGaussian:
        case NoiseKind::kNone:
            return 0.0;
        case NoiseKind::kRayleigh:
            return m.scale * std::sqrt(std::numbers::pi / 2.0);
        case NoiseKind::kExponential:
            return m.scale;
    }
    return 0.0;
}

double draw_noise(const NoiseModel& m, Rng& rng) {
    switch (m.kind) {
        case NoiseKind::kNone:
            return 0.0;
        case NoiseKind::kGaussian:
            return m.scale * rng.next_gaussian();
        case NoiseKind::kRayleigh:
            return m.scale * std::sqrt(-2.0 * std::log(rng.next_uniform()));
        case NoiseKind::kExponential:
            return -m.scale * std::log(rng.next_uniform());
    }
    return 0.0;
}

const char* shape_name(TargetShape s) {
    return s == TargetShape::kRectangle ? "rectangle" : "ellipse";
}

TargetShape shape_from_name(const std::string& s) {
    if (s == "rectangle") return TargetShape::kRectangle;
    if (s == "ellipse") return TargetShape::kEllipse;
    throw std::runtime_error("unknown target shape: " + s);
}

const char* noise_name(NoiseKind k) {
    switch (k) {
        case NoiseKind::kNone: return "none";
        case NoiseKind::kGaussian: return "gaussian";
        case NoiseKind::kRayleigh: return "rayleigh";
        case NoiseKind::kExponential: return "exponential";
    }
    return "none";
}

NoiseKind noise_from_name(const std::string& s) {
    if (s == "none") return NoiseKind::kNone;
    if (s == "gaussian") return NoiseKind::kGaussian;
    if (s == "rayleigh") return NoiseKind::kRayleigh;
    if (s == "exponential") return NoiseKind::kExponential;
    throw std::runtime_error("unknown noise kind: " + s);
}

const char* profile_kind_name(BackgroundProfile::Kind k) {
    switch (k) {
        case BackgroundProfile::Kind::kFlat: return "flat";
        case BackgroundProfile::Kind::kBump: return "bump";
        case BackgroundProfile::Kind::kSine2: return "sine2";
    }
    return "flat";
}

BackgroundProfile::Kind profile_kind_from_name(const std::string& s) {
    if (s == "flat") return BackgroundProfile::Kind::kFlat;
    if (s == "bump") return BackgroundProfile::Kind::kBump;
    if (s == "sine2") return BackgroundProfile::Kind::kSine2;
    throw std::runtime_error("unknown background profile kind: " + s);
}

}  // namespace

void SceneSpec::validate() const {
    if (height < 1 || width < 1 || frames < 1)
        throw std::invalid_argument("SceneSpec: dimensions must be >= 1");
    if (background.empty())
        throw std::invalid_argument("SceneSpec: at least one background profile required");
    for (const TargetSpec& t : targets) {
        if (!(t.depth < 0.0))
            throw std::invalid_argument("SceneSpec: target depth must be negative");
        const std::vector<char> mask = footprint_mask(t);
        if (std::count(mask.begin(), mask.end(), 1) < 4)
            throw std::invalid_argument("SceneSpec: target footprint must cover >= 4 pixels");
        for (std::size_t f = 0; f < frames; ++f) {
            const auto [py, px] = target_position(t, f, frames);
            if (py < 0 || px < 0 || py + static_cast<long>(t.height) > static_cast<long>(height) ||
                px + static_cast<long>(t.width) > static_cast<long>(width))
                throw std::invalid_argument(
                    "SceneSpec: target leaves the frame at frame " + std::to_string(f));
        }
    }
    if (!(noise.scale > 0.0) && noise.kind != NoiseKind::kNone)
        throw std::invalid_argument("SceneSpec: noise scale must be positive");
}

SceneData generate_scene(const SceneSpec& spec, std::uint64_t seed) {
    spec.validate();
    const std::size_t h = spec.height, w = spec.width, f = spec.frames;

    // static background frame
    std::vector<float> bg(h * w, 0.0f);
    for (const BackgroundProfile& p : spec.background) {
        std::vector<double> py(h), px(w);
        for (std::size_t y = 0; y < h; ++y)
            py[y] = profile_value(p.y_kind, p.y_center, p.y_radius, y, h);
        for (std::size_t x = 0; x < w; ++x)
            px[x] = profile_value(p.x_kind, p.x_center, p.x_radius, x, w);
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x)
                bg[y * w + x] += static_cast<float>(p.amplitude * py[y] * px[x]);
    }

    SceneData out{FrameStack(h, w, f), FrameStack(h, w, f), FrameStack(h, w, f),
                  FrameStack(h, w, f), {}};

    std::vector<std::vector<char>> masks;
    masks.reserve(spec.targets.size());
    for (const TargetSpec& t : spec.targets) masks.push_back(footprint_mask(t));

    Rng rng(seed);
    const double center_offset = spec.noise.mean_center ? noise_mean(spec.noise) : 0.0;

    for (std::size_t t = 0; t < f; ++t) {
        float* Sf = out.S.frame_data(t);
        float* Bf = out.B.frame_data(t);
        float* Nf = out.N.frame_data(t);
        float* Df = out.D.frame_data(t);
        std::copy(bg.begin(), bg.end(), Bf);

        auto& gt_objs = out.gt.frames[t];
        for (std::size_t ti = 0; ti < spec.targets.size(); ++ti) {
            const TargetSpec& tgt = spec.targets[ti];
            const auto [py, px] = target_position(tgt, t, f);
            long min_y = static_cast<long>(h), min_x = static_cast<long>(w), max_y = -1, max_x = -1;
            for (std::size_t yy = 0; yy < tgt.height; ++yy) {
                for (std::size_t xx = 0; xx < tgt.width; ++xx) {
                    if (!masks[ti][yy * tgt.width + xx]) continue;
                    const long gy = py + static_cast<long>(yy);
                    const long gx = px + static_cast<long>(xx);
                    Sf[gy * static_cast<long>(w) + gx] += static_cast<float>(tgt.depth);
                    min_y = std::min(min_y, gy);
                    min_x = std::min(min_x, gx);
                    max_y = std::max(max_y, gy);
                    max_x = std::max(max_x, gx);
                }
            }
            GroundTruth::Object obj;
            obj.id = static_cast<int>(ti) + 1;
            obj.box = {static_cast<double>(min_x), static_cast<double>(min_y),
                       static_cast<double>(max_x - min_x + 1),
                       static_cast<double>(max_y - min_y + 1)};
            gt_objs.push_back(obj);
        }

        for (std::size_t i = 0; i < h * w; ++i) {
            Nf[i] = static_cast<float>(draw_noise(spec.noise, rng) - center_offset);
            // float addition so the identity D = S + B + N is exact in storage
            float d = Sf[i] + Bf[i] + Nf[i];
            if (spec.clamp) d = std::clamp(d, 0.0f, 1.0f);
            Df[i] = d;
        }
    }
    return out;
}

SceneSpec canonical_scene() {
    SceneSpec spec;
    spec.height = 64;
    spec.width = 64;
    spec.frames = 100;

    BackgroundProfile base;
    base.amplitude = 0.7;
    spec.background.push_back(base);
    BackgroundProfile valley;
    valley.amplitude = -0.4;
    valley.y_kind = BackgroundProfile::Kind::kBump;
    valley.y_center = 46;
    valley.y_radius = 10;
    valley.x_kind = BackgroundProfile::Kind::kBump;
    valley.x_center = 14;
    valley.x_radius = 10;
    spec.background.push_back(valley);

    TargetSpec t1;
    t1.shape = TargetShape::kEllipse;
    t1.height = 5;
    t1.width = 7;
    t1.depth = -0.2;
    t1.from_y = 15; t1.from_x = 31;
    t1.to_y = 33; t1.to_x = 49;
    spec.targets.push_back(t1);

    TargetSpec t2;
    t2.shape = TargetShape::kEllipse;
    t2.height = 6;
    t2.width = 6;
    t2.depth = -0.2;
    t2.from_y = 41; t2.from_x = 15;
    t2.to_y = 7; t2.to_x = 49;
    spec.targets.push_back(t2);

    spec.noise.kind = NoiseKind::kGaussian;
    spec.noise.scale = 0.02;
    spec.noise.mean_center = true;
    spec.clamp = false;
    return spec;
}

std::string SceneSpec::to_json() const {
    json root;
    root["height"] = height;
    root["width"] = width;
    root["frames"] = frames;
    root["clamp"] = clamp;
    root["background"] = json::array();
    for (const BackgroundProfile& p : background) {
        root["background"].push_back({{"amplitude", p.amplitude},
                                      {"y", {{"kind", profile_kind_name(p.y_kind)},
                                             {"center", p.y_center},
                                             {"radius", p.y_radius}}},
                                      {"x", {{"kind", profile_kind_name(p.x_kind)},
                                             {"center", p.x_center},
                                             {"radius", p.x_radius}}}});
    }
    root["targets"] = json::array();
    for (const TargetSpec& t : targets) {
        json jt{{"shape", shape_name(t.shape)}, {"height", t.height}, {"width", t.width},
                {"depth", t.depth},             {"from", {t.from_y, t.from_x}},
                {"to", {t.to_y, t.to_x}},       {"path", t.quadratic ? "quadratic" : "linear"}};
        if (t.quadratic) jt["via"] = {t.via_y, t.via_x};
        root["targets"].push_back(std::move(jt));
    }
    root["noise"] = {{"kind", noise_name(noise.kind)},
                     {"scale", noise.scale},
                     {"mean_center", noise.mean_center}};
    return root.dump(2);
}

SceneSpec SceneSpec::from_json(const std::string& text) {
    json root = json::parse(text);
    SceneSpec spec;
    spec.height = root.at("height").get<std::size_t>();
    spec.width = root.at("width").get<std::size_t>();
    spec.frames = root.at("frames").get<std::size_t>();
    spec.clamp = root.value("clamp", false);
    spec.background.clear();
    for (const json& jp : root.at("background")) {
        BackgroundProfile p;
        p.amplitude = jp.at("amplitude").get<double>();
        if (jp.contains("y")) {
            p.y_kind = profile_kind_from_name(jp["y"].value("kind", "flat"));
            p.y_center = jp["y"].value("center", 0.0);
            p.y_radius = jp["y"].value("radius", 1.0);
        }
        if (jp.contains("x")) {
            p.x_kind = profile_kind_from_name(jp["x"].value("kind", "flat"));
            p.x_center = jp["x"].value("center", 0.0);
            p.x_radius = jp["x"].value("radius", 1.0);
        }
        spec.background.push_back(p);
    }
    for (const json& jt : root.value("targets", json::array())) {
        TargetSpec t;
        t.shape = shape_from_name(jt.value("shape", "rectangle"));
        t.height = jt.at("height").get<std::size_t>();
        t.width = jt.at("width").get<std::size_t>();
        t.depth = jt.at("depth").get<double>();
        t.quadratic = jt.value("path", "linear") == "quadratic";
        t.from_y = jt.at("from")[0].get<double>();
        t.from_x = jt.at("from")[1].get<double>();
        t.to_y = jt.at("to")[0].get<double>();
        t.to_x = jt.at("to")[1].get<double>();
        if (t.quadratic) {
            t.via_y = jt.at("via")[0].get<double>();
            t.via_x = jt.at("via")[1].get<double>();
        }
        spec.targets.push_back(t);
    }
    if (root.contains("noise")) {
        spec.noise.kind = noise_from_name(root["noise"].value("kind", "gaussian"));
        spec.noise.scale = root["noise"].value("scale", 0.02);
        spec.noise.mean_center = root["noise"].value("mean_center", true);
    }
    return spec;
}

}  // namespace sbn
