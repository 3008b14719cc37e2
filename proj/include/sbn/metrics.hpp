#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sbn/frame_stack.hpp"

namespace sbn {

/// A single real-valued image submitted for quality metrics. Metric
/// evaluation quantizes to 256 gray levels by clamping to [0,1] and rounding
/// v*255.
struct GrayImage {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<float> values;

    static GrayImage from_frame(const FrameStack& stack, std::size_t frame);
    /// Crop rectangle (x, y, w, h); used to evaluate shadow-centered chips.
    GrayImage crop(std::size_t x, std::size_t y, std::size_t w, std::size_t h) const;
    std::vector<std::uint8_t> quantize() const;
};

/// Pixel displacement used when collecting gray-difference pairs.
struct PixelOffset {
    int dy = 0;
    int dx = 0;
};

/// Default "adjacent pixel" offsets: one step right and one step down.
std::vector<PixelOffset> default_contrast_offsets();

/// Gray-difference contrast: the distribution p of absolute quantized gray
/// differences over all pixel pairs at the given offsets, reduced to
/// sum delta^2 * p(delta).
double glcm_contrast(const GrayImage& img, const std::vector<PixelOffset>& offsets);
double glcm_contrast(const GrayImage& img);

/// Ratio of summed absolute horizontal+vertical neighbor differences,
/// evaluation image over reference image. 1.0 when eval == ref.
double edge_preservation_index(const GrayImage& eval, const GrayImage& ref);

/// Joint entropy (bits) of (pixel level, rounded mean level of its
/// 8-neighborhood) over interior pixels.
double entropy_2d(const GrayImage& img);

struct PixelStatistics {
    std::array<std::size_t, 256> histogram{};
    std::array<double, 256> cumulative{};  ///< fraction of pixels at or below each level
};

PixelStatistics pixel_statistics(const GrayImage& img);

/// Per-frame metric arrays plus their means. `epi` is present only when a
/// reference stack was supplied.
struct MetricsReport {
    std::vector<double> contrast;
    std::vector<double> entropy;
    std::vector<double> epi;
    double contrast_mean = 0.0;
    double entropy_mean = 0.0;
    double epi_mean = 0.0;
    bool has_epi = false;

    std::string to_json() const;
};

struct MetricsOptions {
    std::vector<PixelOffset> offsets = default_contrast_offsets();
    bool has_crop = false;
    std::size_t crop_x = 0, crop_y = 0, crop_w = 0, crop_h = 0;
};

/// Evaluates the three stack metrics frame by frame; `reference` (for EPI)
/// may be null.
MetricsReport stack_metrics(const FrameStack& stack, const FrameStack* reference,
                            const MetricsOptions& opts = {});

}  // namespace sbn
