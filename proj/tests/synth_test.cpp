#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include <Eigen/SVD>

#include "sbn/frame_stack.hpp"
#include "sbn/synth.hpp"
#include "test_helpers.hpp"

using namespace sbn;

namespace {

SceneSpec tiny_scene() {
    SceneSpec spec;
    spec.height = 32;
    spec.width = 32;
    spec.frames = 50;
    BackgroundProfile base;
    base.amplitude = 0.6;
    spec.background.push_back(base);

    TargetSpec t1;
    t1.height = 4;
    t1.width = 5;
    t1.depth = -0.25;
    t1.from_y = 4; t1.from_x = 4;
    t1.to_y = 20; t1.to_x = 20;
    spec.targets.push_back(t1);

    TargetSpec t2;
    t2.shape = TargetShape::kEllipse;
    t2.height = 5;
    t2.width = 5;
    t2.depth = -0.2;
    t2.from_y = 20; t2.from_x = 6;
    t2.to_y = 6; t2.to_x = 22;
    spec.targets.push_back(t2);

    spec.noise.kind = NoiseKind::kGaussian;
    spec.noise.scale = 0.01;
    return spec;
}

}  // namespace

TEST_CASE("Rng is deterministic and covers (0,1]") {
    Rng a(42), b(42);
    for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
    Rng c(0);  // zero seed must still work
    for (int i = 0; i < 1000; ++i) {
        const double u = c.next_uniform();
        CHECK(u > 0.0);
        CHECK(u <= 1.0);
    }
}

TEST_CASE("generate_scene is bit-deterministic in (spec, seed)") {
    const SceneSpec spec = tiny_scene();
    const SceneData a = generate_scene(spec, 7);
    const SceneData b = generate_scene(spec, 7);
    CHECK(a.D.data() == b.D.data());
    CHECK(a.S.data() == b.S.data());
    CHECK(a.B.data() == b.B.data());
    CHECK(a.N.data() == b.N.data());
    CHECK(a.gt.to_json() == b.gt.to_json());

    const SceneData c = generate_scene(spec, 8);
    CHECK(a.D.data() != c.D.data());
}

TEST_CASE("the decomposition identity D = S + B + N holds exactly with clamp off") {
    const SceneData s = generate_scene(tiny_scene(), 3);
    for (std::size_t i = 0; i < s.D.data().size(); ++i)
        CHECK(s.D.data()[i] == s.S.data()[i] + s.B.data()[i] + s.N.data()[i]);
}

TEST_CASE("clamp restricts D to [0,1]") {
    SceneSpec spec = tiny_scene();
    spec.noise.scale = 0.5;  // drive values far outside the display range
    spec.clamp = true;
    const SceneData s = generate_scene(spec, 5);
    for (float v : s.D.data()) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
    }
}

TEST_CASE("ground truth carries one stable id per target per frame") {
    const SceneData s = generate_scene(tiny_scene(), 9);
    CHECK(s.gt.frames.size() == 50);
    CHECK(s.gt.total_boxes() == 100);
    for (const auto& [frame, objs] : s.gt.frames) {
        REQUIRE(objs.size() == 2);
        CHECK(objs[0].id == 1);
        CHECK(objs[1].id == 2);
    }
}

TEST_CASE("ground-truth boxes exactly bound each target's support") {
    SceneSpec spec = tiny_scene();
    spec.targets.pop_back();  // single target so S's support is unambiguous
    spec.noise.kind = NoiseKind::kNone;
    const SceneData s = generate_scene(spec, 1);
    for (std::size_t f = 0; f < spec.frames; ++f) {
        long min_x = 1000, min_y = 1000, max_x = -1, max_y = -1;
        for (std::size_t y = 0; y < spec.height; ++y)
            for (std::size_t x = 0; x < spec.width; ++x)
                if (s.S.at(f, y, x) != 0.0f) {
                    min_x = std::min(min_x, static_cast<long>(x));
                    max_x = std::max(max_x, static_cast<long>(x));
                    min_y = std::min(min_y, static_cast<long>(y));
                    max_y = std::max(max_y, static_cast<long>(y));
                }
        const GroundTruth::Object& o = s.gt.frames.at(f)[0];
        CHECK(o.box.x == static_cast<double>(min_x));
        CHECK(o.box.y == static_cast<double>(min_y));
        CHECK(o.box.w == static_cast<double>(max_x - min_x + 1));
        CHECK(o.box.h == static_cast<double>(max_y - min_y + 1));
    }
}

TEST_CASE("noise statistics match the requested model") {
    SceneSpec spec = tiny_scene();
    spec.frames = 60;
    spec.targets.clear();
    const double n = static_cast<double>(32 * 32 * 60);

    SUBCASE("gaussian: zero mean, scale-matched standard deviation") {
        spec.noise = {NoiseKind::kGaussian, 0.05, true};
        const SceneData s = generate_scene(spec, 21);
        double sum = 0.0, sum2 = 0.0;
        for (float v : s.N.data()) {
            sum += v;
            sum2 += static_cast<double>(v) * v;
        }
        const double mean = sum / n;
        const double sd = std::sqrt(sum2 / n - mean * mean);
        CHECK(std::abs(mean) <= 3.0 * 0.05 / std::sqrt(n));
        CHECK(std::abs(sd - 0.05) <= 3.0 * 0.05 / std::sqrt(2.0 * n));
    }

    SUBCASE("rayleigh and exponential are mean-centered by default") {
        for (NoiseKind kind : {NoiseKind::kRayleigh, NoiseKind::kExponential}) {
            spec.noise = {kind, 0.04, true};
            const SceneData s = generate_scene(spec, 22);
            double sum = 0.0;
            for (float v : s.N.data()) sum += v;
            CHECK(std::abs(sum / n) <= 4.0 * 0.04 / std::sqrt(n));
        }
    }

    SUBCASE("without centering, exponential noise keeps its positive mean") {
        spec.noise = {NoiseKind::kExponential, 0.04, false};
        const SceneData s = generate_scene(spec, 23);
        double sum = 0.0;
        for (float v : s.N.data()) sum += v;
        CHECK(sum / n == doctest::Approx(0.04).epsilon(0.05));
    }

    SUBCASE("none yields exact zeros") {
        spec.noise.kind = NoiseKind::kNone;
        const SceneData s = generate_scene(spec, 24);
        for (float v : s.N.data()) CHECK(v == 0.0f);
    }
}

TEST_CASE("trajectories leaving the frame are rejected") {
    SceneSpec spec = tiny_scene();
    spec.targets[0].to_x = 30;  // footprint (w=5) would cross the right edge
    CHECK_THROWS_WITH_AS(generate_scene(spec, 1), doctest::Contains("leaves the frame"),
                         std::invalid_argument);

    SceneSpec tiny_target = tiny_scene();
    tiny_target.targets[0].height = 1;
    tiny_target.targets[0].width = 3;
    CHECK_THROWS_AS(generate_scene(tiny_target, 1), std::invalid_argument);

    SceneSpec positive_depth = tiny_scene();
    positive_depth.targets[0].depth = 0.2;
    CHECK_THROWS_AS(generate_scene(positive_depth, 1), std::invalid_argument);
}

TEST_CASE("quadratic paths pass through the midpoint") {
    SceneSpec spec = tiny_scene();
    spec.targets.resize(1);
    spec.targets[0].quadratic = true;
    spec.targets[0].from_y = 4; spec.targets[0].from_x = 4;
    spec.targets[0].via_y = 20; spec.targets[0].via_x = 10;
    spec.targets[0].to_y = 4; spec.targets[0].to_x = 20;
    spec.frames = 51;  // odd count so the midpoint lands on a frame
    const SceneData s = generate_scene(spec, 2);
    const GroundTruth::Object& mid = s.gt.frames.at(25)[0];
    CHECK(mid.box.y == 20);
    CHECK(mid.box.x == 10);
}

TEST_CASE("SceneSpec JSON round trip") {
    const SceneSpec spec = canonical_scene();
    const SceneSpec back = SceneSpec::from_json(spec.to_json());
    CHECK(back.height == spec.height);
    CHECK(back.frames == spec.frames);
    REQUIRE(back.targets.size() == spec.targets.size());
    CHECK(back.targets[0].shape == spec.targets[0].shape);
    CHECK(back.targets[0].depth == spec.targets[0].depth);
    CHECK(back.targets[1].from_y == spec.targets[1].from_y);
    REQUIRE(back.background.size() == spec.background.size());
    CHECK(back.background[1].amplitude == spec.background[1].amplitude);
    CHECK(back.noise.kind == spec.noise.kind);
    CHECK(back.noise.scale == spec.noise.scale);

    // generated output is identical through the round trip
    const SceneData a = generate_scene(spec, 7);
    const SceneData b = generate_scene(back, 7);
    CHECK(a.D.data() == b.D.data());
}

TEST_CASE("canonical scene matches its documented fixture properties") {
    const SceneSpec spec = canonical_scene();
    const SceneData s = generate_scene(spec, 7);

    CHECK(s.D.height() == 64);
    CHECK(s.D.width() == 64);
    CHECK(s.D.frames() == 100);

    // background spans [0.3, 0.7] exactly and is static
    float lo = 1e9f, hi = -1e9f;
    for (float v : s.B.data()) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    CHECK(lo == doctest::Approx(0.3).epsilon(1e-6));
    CHECK(hi == doctest::Approx(0.7).epsilon(1e-6));

    // matricized background has rank exactly 1
    const MatricizedVideo mb = matricize(s.B);
    Eigen::BDCSVD<Eigen::MatrixXd> svd(mb.matrix);
    CHECK(svd.singularValues()(0) > 0.0);
    CHECK(svd.singularValues()(1) == doctest::Approx(0.0).epsilon(1e-10));

    // shadow footprint stays within the sparse regime (<= 1% of pixels)
    std::size_t nonzero = 0;
    for (std::size_t y = 0; y < 64; ++y)
        for (std::size_t x = 0; x < 64; ++x)
            if (s.S.at(0, y, x) != 0.0f) ++nonzero;
    CHECK(nonzero > 0);
    CHECK(static_cast<double>(nonzero) / 4096.0 <= 0.01);

    // two crossing paths that never collide: the summed depth never exceeds
    // a single target's depth
    float deepest = 0.0f;
    for (float v : s.S.data()) deepest = std::min(deepest, v);
    CHECK(deepest == doctest::Approx(-0.2).epsilon(1e-6));

    CHECK(s.gt.total_boxes() == 200);
}
