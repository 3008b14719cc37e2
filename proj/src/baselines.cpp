#include "sbn/baselines.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace sbn {

std::vector<float> histogram_equalize(const std::vector<float>& image, std::size_t height,
                                      std::size_t width) {
    if (image.size() != height * width)
        throw std::invalid_argument("histogram_equalize: size mismatch");
    for (float v : image)
        if (!std::isfinite(v))
            throw std::invalid_argument("histogram_equalize: non-finite pixel");

    std::array<std::size_t, 256> hist{};
    std::vector<int> levels(image.size());
    for (std::size_t i = 0; i < image.size(); ++i) {
        const float c = std::clamp(image[i], 0.0f, 1.0f);
        const int q = static_cast<int>(std::lround(c * 255.0f));
        levels[i] = q;
        ++hist[static_cast<std::size_t>(q)];
    }

    std::array<std::size_t, 256> cdf{};
    std::size_t running = 0;
    std::size_t cdf_min = 0;
    bool seen = false;
    for (int q = 0; q < 256; ++q) {
        running += hist[static_cast<std::size_t>(q)];
        cdf[static_cast<std::size_t>(q)] = running;
        if (!seen && hist[static_cast<std::size_t>(q)] > 0) {
            cdf_min = running;
            seen = true;
        }
    }

    const std::size_t total = image.size();
    std::vector<float> out(image.size());
    if (total == cdf_min) {
        // single occupied bin: nothing to spread
        for (std::size_t i = 0; i < image.size(); ++i)
            out[i] = static_cast<float>(levels[i]) / 255.0f;
        return out;
    }
    std::array<float, 256> lut{};
    for (int q = 0; q < 256; ++q) {
        const double num = static_cast<double>(cdf[static_cast<std::size_t>(q)]) -
                           static_cast<double>(cdf_min);
        lut[static_cast<std::size_t>(q)] =
            static_cast<float>(std::lround(255.0 * std::max(0.0, num) /
                                           static_cast<double>(total - cdf_min)) /
                               255.0);
    }
    for (std::size_t i = 0; i < image.size(); ++i)
        out[i] = lut[static_cast<std::size_t>(levels[i])];
    return out;
}

FrameStack histogram_equalize_stack(const FrameStack& stack) {
    FrameStack out(stack.height(), stack.width(), stack.frames());
    const std::size_t n = stack.pixels_per_frame();
    for (std::size_t f = 0; f < stack.frames(); ++f) {
        std::vector<float> frame(stack.frame_data(f), stack.frame_data(f) + n);
        std::vector<float> eq = histogram_equalize(frame, stack.height(), stack.width());
        std::copy(eq.begin(), eq.end(), out.frame_data(f));
    }
    return out;
}

FrameStack temporal_median_subtract(const FrameStack& stack) {
    if (stack.frames() < 2)
        throw std::invalid_argument("temporal_median_subtract: needs at least 2 frames");
    const std::size_t n = stack.pixels_per_frame();
    const std::size_t f = stack.frames();
    FrameStack out(stack.height(), stack.width(), f);

    std::vector<float> series(f);
    for (std::size_t px = 0; px < n; ++px) {
        for (std::size_t t = 0; t < f; ++t)
            series[t] = stack.frame_data(t)[px];
        std::vector<float> tmp = series;
        const std::size_t mid = f / 2;
        std::nth_element(tmp.begin(), tmp.begin() + mid, tmp.end());
        float med = tmp[mid];
        if (f % 2 == 0) {
            std::nth_element(tmp.begin(), tmp.begin() + mid - 1, tmp.end());
            med = 0.5f * (med + tmp[mid - 1]);
        }
        for (std::size_t t = 0; t < f; ++t)
            out.frame_data(t)[px] = series[t] - med;
    }
    return out;
}

}  // namespace sbn
