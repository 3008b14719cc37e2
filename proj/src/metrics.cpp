#include "sbn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

namespace sbn {

GrayImage GrayImage::from_frame(const FrameStack& stack, std::size_t frame) {
    if (frame >= stack.frames())
        throw std::invalid_argument("GrayImage::from_frame: frame index out of range");
    const float* src = stack.frame_data(frame);
    return GrayImage{stack.height(), stack.width(),
                     std::vector<float>(src, src + stack.pixels_per_frame())};
}

GrayImage GrayImage::crop(std::size_t x, std::size_t y, std::size_t w, std::size_t h) const {
    if (w < 1 || h < 1 || x + w > width || y + h > height)
        throw std::invalid_argument("GrayImage::crop: rectangle out of bounds");
    GrayImage out{h, w, std::vector<float>(w * h)};
    for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < w; ++c)
            out.values[r * w + c] = values[(y + r) * width + (x + c)];
    return out;
}

std::vector<std::uint8_t> GrayImage::quantize() const {
    std::vector<std::uint8_t> q(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const float v = values[i];
        if (!std::isfinite(v))
            throw std::invalid_argument("GrayImage: non-finite pixel");
        q[i] = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
    }
    return q;
}

std::vector<PixelOffset> default_contrast_offsets() { return {{0, 1}, {1, 0}}; }

double glcm_contrast(const GrayImage& img, const std::vector<PixelOffset>& offsets) {
    if (offsets.empty())
        throw std::invalid_argument("glcm_contrast: offset set must not be empty");
    const std::vector<std::uint8_t> q = img.quantize();
    const int h = static_cast<int>(img.height), w = static_cast<int>(img.width);

    std::array<std::size_t, 256> counts{};
    std::size_t total = 0;
    for (const PixelOffset& off : offsets) {
        const int y0 = std::max(0, -off.dy), y1 = std::min(h, h - off.dy);
        const int x0 = std::max(0, -off.dx), x1 = std::min(w, w - off.dx);
        if (y0 >= y1 || x0 >= x1)
            throw std::invalid_argument("glcm_contrast: offset admits no pixel pairs");
        for (int y = y0; y < y1; ++y) {
            for (int x = x0; x < x1; ++x) {
                const int a = q[static_cast<std::size_t>(y) * w + x];
                const int b = q[static_cast<std::size_t>(y + off.dy) * w + (x + off.dx)];
                ++counts[static_cast<std::size_t>(std::abs(a - b))];
                ++total;
            }
        }
    }
    double contrast = 0.0;
    for (int d = 0; d < 256; ++d)
        contrast += static_cast<double>(d) * d * counts[static_cast<std::size_t>(d)] /
                    static_cast<double>(total);
    return contrast;
}

double glcm_contrast(const GrayImage& img) {
    return glcm_contrast(img, default_contrast_offsets());
}

double edge_preservation_index(const GrayImage& eval, const GrayImage& ref) {
    if (eval.height != ref.height || eval.width != ref.width)
        throw std::invalid_argument("edge_preservation_index: dimension mismatch");
    if (eval.height < 2 || eval.width < 2)
        throw std::invalid_argument("edge_preservation_index: images must be at least 2x2");

    auto gradient_sum = [](const GrayImage& img) {
        const std::vector<std::uint8_t> q = img.quantize();
        const std::size_t h = img.height, w = img.width;
        long long sum = 0;
        for (std::size_t y = 0; y + 1 < h; ++y)
            for (std::size_t x = 0; x < w; ++x)
                sum += std::abs(static_cast<int>(q[y * w + x]) - static_cast<int>(q[(y + 1) * w + x]));
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x + 1 < w; ++x)
                sum += std::abs(static_cast<int>(q[y * w + x]) - static_cast<int>(q[y * w + x + 1]));
        return sum;
    };

    const long long denom = gradient_sum(ref);
    if (denom == 0)
        throw std::invalid_argument("edge_preservation_index: flat reference image");
    return static_cast<double>(gradient_sum(eval)) / static_cast<double>(denom);
}

double entropy_2d(const GrayImage& img) {
    if (img.height < 3 || img.width < 3)
        throw std::invalid_argument("entropy_2d: image must be at least 3x3");
    const std::vector<std::uint8_t> q = img.quantize();
    const std::size_t h = img.height, w = img.width;

    std::map<int, std::size_t> counts;
    std::size_t total = 0;
    for (std::size_t y = 1; y + 1 < h; ++y) {
        for (std::size_t x = 1; x + 1 < w; ++x) {
            int nb = 0;
            nb += q[(y - 1) * w + (x - 1)];
            nb += q[(y - 1) * w + x];
            nb += q[(y - 1) * w + (x + 1)];
            nb += q[y * w + (x - 1)];
            nb += q[y * w + (x + 1)];
            nb += q[(y + 1) * w + (x - 1)];
            nb += q[(y + 1) * w + x];
            nb += q[(y + 1) * w + (x + 1)];
            const int mean = static_cast<int>(std::lround(nb / 8.0));
            const int key = static_cast<int>(q[y * w + x]) * 256 + mean;
            ++counts[key];
            ++total;
        }
    }
    double entropy = 0.0;
    for (const auto& [key, c] : counts) {
        const double p = static_cast<double>(c) / static_cast<double>(total);
        entropy -= p * std::log2(p);
    }
    return entropy;
}

PixelStatistics pixel_statistics(const GrayImage& img) {
    PixelStatistics stats;
    const std::vector<std::uint8_t> q = img.quantize();
    for (std::uint8_t v : q)
        ++stats.histogram[v];
    std::size_t running = 0;
    for (std::size_t i = 0; i < 256; ++i) {
        running += stats.histogram[i];
        stats.cumulative[i] = static_cast<double>(running) / static_cast<double>(q.size());
    }
    return stats;
}

namespace {

void append_array(std::ostringstream& os, const char* key, const std::vector<double>& v,
                  double mean) {
    os << "\"" << key << "\":{\"frames\":[";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) os << ",";
        os << v[i];
    }
    os << "],\"mean\":" << mean << "}";
}

}  // namespace

std::string MetricsReport::to_json() const {
    std::ostringstream os;
    os.precision(12);
    os << "{";
    append_array(os, "contrast", contrast, contrast_mean);
    os << ",";
    append_array(os, "entropy", entropy, entropy_mean);
    if (has_epi) {
        os << ",";
        append_array(os, "epi", epi, epi_mean);
    }
    os << "}";
    return os.str();
}

MetricsReport stack_metrics(const FrameStack& stack, const FrameStack* reference,
                            const MetricsOptions& opts) {
    if (reference &&
        (reference->height() != stack.height() || reference->width() != stack.width() ||
         reference->frames() != stack.frames()))
        throw std::invalid_argument("stack_metrics: reference stack dimensions disagree");

    MetricsReport rep;
    rep.has_epi = reference != nullptr;
    for (std::size_t f = 0; f < stack.frames(); ++f) {
        GrayImage img = GrayImage::from_frame(stack, f);
        if (opts.has_crop)
            img = img.crop(opts.crop_x, opts.crop_y, opts.crop_w, opts.crop_h);
        rep.contrast.push_back(glcm_contrast(img, opts.offsets));
        rep.entropy.push_back(entropy_2d(img));
        if (reference) {
            GrayImage refimg = GrayImage::from_frame(*reference, f);
            if (opts.has_crop)
                refimg = refimg.crop(opts.crop_x, opts.crop_y, opts.crop_w, opts.crop_h);
            rep.epi.push_back(edge_preservation_index(img, refimg));
        }
    }
    auto mean = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return v.empty() ? 0.0 : s / static_cast<double>(v.size());
    };
    rep.contrast_mean = mean(rep.contrast);
    rep.entropy_mean = mean(rep.entropy);
    rep.epi_mean = mean(rep.epi);
    return rep;
}

}  // namespace sbn
