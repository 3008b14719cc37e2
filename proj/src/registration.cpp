#include "sbn/registration.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace sbn {

namespace {

double frame_median(const float* data, std::size_t n) {
    std::vector<float> tmp(data, data + n);
    const std::size_t mid = tmp.size() / 2;
    std::nth_element(tmp.begin(), tmp.begin() + mid, tmp.end());
    double m = tmp[mid];
    if (tmp.size() % 2 == 0) {
        std::nth_element(tmp.begin(), tmp.begin() + mid - 1, tmp.end());
        m = 0.5 * (m + tmp[mid - 1]);
    }
    return m;
}

// NCC between frame(y,x) and ref(y-dy, x-dx) over the overlap region.
double ncc_at_shift(const float* frm, const float* ref, int h, int w, int dy, int dx) {
    const int y0 = std::max(0, dy), y1 = std::min(h, h + dy);
    const int x0 = std::max(0, dx), x1 = std::min(w, w + dx);
    const long n = static_cast<long>(y1 - y0) * (x1 - x0);
    if (n < 2) return 0.0;

    double sa = 0, sb = 0;
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) {
            sa += frm[y * w + x];
            sb += ref[(y - dy) * w + (x - dx)];
        }
    const double ma = sa / n, mb = sb / n;
    double vaa = 0, vbb = 0, vab = 0;
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) {
            const double a = frm[y * w + x] - ma;
            const double b = ref[(y - dy) * w + (x - dx)] - mb;
            vaa += a * a;
            vbb += b * b;
            vab += a * b;
        }
    if (vaa <= 0.0 || vbb <= 0.0) return 0.0;
    return vab / std::sqrt(vaa * vbb);
}

}  // namespace

RegistrationResult register_translation(const FrameStack& stack, std::size_t reference,
                                        int max_shift) {
    if (reference >= stack.frames())
        throw std::invalid_argument("register_translation: reference frame out of range");
    const int h = static_cast<int>(stack.height());
    const int w = static_cast<int>(stack.width());
    if (max_shift < 0) max_shift = std::min(h, w) / 4;

    RegistrationResult result{FrameStack(stack.height(), stack.width(), stack.frames()), {}};
    result.report.reference = reference;
    result.report.shifts.resize(stack.frames());

    const float* ref = stack.frame_data(reference);

    for (std::size_t f = 0; f < stack.frames(); ++f) {
        const float* frm = stack.frame_data(f);
        int best_dy = 0, best_dx = 0;
        double best = -2.0;
        if (f == reference) {
            best = 1.0;
        } else {
            for (int dy = -max_shift; dy <= max_shift; ++dy) {
                for (int dx = -max_shift; dx <= max_shift; ++dx) {
                    const double score = ncc_at_shift(frm, ref, h, w, dy, dx);
                    // prefer the smallest displacement on ties
                    const bool better =
                        score > best + 1e-12 ||
                        (score > best - 1e-12 &&
                         (dy * dy + dx * dx < best_dy * best_dy + best_dx * best_dx));
                    if (better) {
                        best = score;
                        best_dy = dy;
                        best_dx = dx;
                    }
                }
            }
            if (best <= 0.0) {  // flat or hopeless frame
                best_dy = 0;
                best_dx = 0;
                best = std::max(best, 0.0);
            }
        }
        result.report.shifts[f] = {best_dy, best_dx, best};

        // undo the detected displacement; vacated pixels take the frame median
        const float fill = static_cast<float>(frame_median(frm, stack.pixels_per_frame()));
        float* dst = result.stack.frame_data(f);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const int sy = y + best_dy, sx = x + best_dx;
                dst[y * w + x] = (sy >= 0 && sy < h && sx >= 0 && sx < w)
                                     ? frm[sy * w + sx]
                                     : fill;
            }
        }
    }
    return result;
}

}  // namespace sbn
