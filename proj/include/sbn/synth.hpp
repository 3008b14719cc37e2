#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sbn/evaluate.hpp"
#include "sbn/frame_stack.hpp"

namespace sbn {

/// Deterministic xorshift64* generator (seeded through splitmix64 so that
/// any seed, including 0, is usable). Fixtures built on it are reproducible
/// bit for bit within this implementation.
class Rng {
public:
    explicit Rng(std::uint64_t seed);
    std::uint64_t next_u64();
    /// uniform in (0, 1]
    double next_uniform();
    /// standard normal via Box-Muller
    double next_gaussian();

private:
    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

enum class NoiseKind { kNone, kGaussian, kRayleigh, kExponential };

struct NoiseModel {
    NoiseKind kind = NoiseKind::kGaussian;
    double scale = 0.02;
    bool mean_center = true;  ///< subtract the distribution mean so N is zero-mean
};

enum class TargetShape { kRectangle, kEllipse };

/// One moving shadow: a footprint of `height` x `width` pixels stamped with a
/// negative intensity offset along a per-frame path. Positions are top-left
/// corners; linear paths interpolate from `from` to `to`, quadratic paths
/// additionally pass through `via` at the midpoint.
struct TargetSpec {
    TargetShape shape = TargetShape::kRectangle;
    std::size_t height = 4, width = 4;
    double depth = -0.2;  ///< must be negative
    bool quadratic = false;
    double from_y = 0, from_x = 0;
    double to_y = 0, to_x = 0;
    double via_y = 0, via_x = 0;  ///< used only for quadratic paths
};

/// A separable background term amp * p(y) * q(x). Profile kinds:
///   flat            p = 1
///   bump            p = cos^2(pi (i-center) / (2 radius)) inside the radius, else 0
///   sine2           p = sin^2(pi i / (n-1))
struct BackgroundProfile {
    enum class Kind { kFlat, kBump, kSine2 };
    double amplitude = 1.0;
    Kind y_kind = Kind::kFlat;
    double y_center = 0, y_radius = 1;
    Kind x_kind = Kind::kFlat;
    double x_center = 0, x_radius = 1;
};

struct SceneSpec {
    std::size_t height = 64, width = 64, frames = 100;
    std::vector<BackgroundProfile> background;  ///< r >= 1 separable terms, static over time
    std::vector<TargetSpec> targets;
    NoiseModel noise;
    bool clamp = false;  ///< clip D to [0,1]; leave off when exact D = S+B+N is needed

    std::string to_json() const;
    static SceneSpec from_json(const std::string& text);

    /// Throws if any target footprint would leave the frame on some frame.
    void validate() const;
};

struct SceneData {
    FrameStack D, S, B, N;
    GroundTruth gt;
};

/// Deterministic scene synthesis: static background, moving shadow
/// footprints, seeded noise. With clamp off, D = S + B + N holds exactly
/// in the stored float pixels, and ground-truth boxes tightly bound each
/// target's nonzero support per frame.
SceneData generate_scene(const SceneSpec& spec, std::uint64_t seed);

/// The acceptance fixture: 64x64x100, a smooth static background spanning
/// [0.3, 0.7] (rank-1 once matricized), two elliptical shadows (5x7 and 6x6,
/// depth -0.2) on crossing linear paths that pass the intersection at
/// different times, and mean-centered Gaussian noise (sigma = 0.02).
SceneSpec canonical_scene();

}  // namespace sbn
