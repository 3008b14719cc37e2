#include "sbn/frame_stack.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace sbn {

namespace {

void check_dims(std::size_t height, std::size_t width, std::size_t frames) {
    if (height < 1 || width < 1 || frames < 1)
        throw std::invalid_argument("FrameStack: height, width and frame count must all be >= 1");
}

}  // namespace

FrameStack::FrameStack(std::size_t height, std::size_t width, std::size_t frames)
    : height_(height), width_(width), frames_(frames) {
    check_dims(height, width, frames);
    data_.assign(height * width * frames, 0.0f);
}

FrameStack::FrameStack(std::size_t height, std::size_t width, std::size_t frames,
                       std::vector<float> data)
    : height_(height), width_(width), frames_(frames), data_(std::move(data)) {
    check_dims(height, width, frames);
    if (data_.size() != height * width * frames)
        throw std::invalid_argument("FrameStack: data length " + std::to_string(data_.size()) +
                                    " does not match " + std::to_string(height * width * frames));
}

void FrameStack::check_finite() const {
    for (std::size_t i = 0; i < data_.size(); ++i) {
        if (!std::isfinite(data_[i]))
            throw std::invalid_argument("FrameStack: non-finite value at flat index " +
                                        std::to_string(i));
    }
}

MatricizedVideo matricize(const FrameStack& stack) {
    MatricizedVideo out;
    out.pixels_per_frame = static_cast<Eigen::Index>(stack.pixels_per_frame());
    out.frames = static_cast<Eigen::Index>(stack.frames());
    out.matrix.resize(out.pixels_per_frame, out.frames);
    for (Eigen::Index j = 0; j < out.frames; ++j) {
        const float* src = stack.frame_data(static_cast<std::size_t>(j));
        for (Eigen::Index i = 0; i < out.pixels_per_frame; ++i)
            out.matrix(i, j) = static_cast<double>(src[i]);
    }
    return out;
}

FrameStack tensorize(const MatricizedVideo& mat, std::size_t height, std::size_t width) {
    if (static_cast<Eigen::Index>(height * width) != mat.pixels_per_frame)
        throw std::invalid_argument("tensorize: height*width = " + std::to_string(height * width) +
                                    " but matrix has " + std::to_string(mat.pixels_per_frame) +
                                    " pixels per frame");
    if (mat.matrix.rows() != mat.pixels_per_frame || mat.matrix.cols() != mat.frames)
        throw std::invalid_argument("tensorize: matrix shape disagrees with declared dimensions");
    FrameStack out(height, width, static_cast<std::size_t>(mat.frames));
    for (Eigen::Index j = 0; j < mat.frames; ++j) {
        float* dst = out.frame_data(static_cast<std::size_t>(j));
        for (Eigen::Index i = 0; i < mat.pixels_per_frame; ++i)
            dst[i] = static_cast<float>(mat.matrix(i, j));
    }
    return out;
}

FrameStack window(const FrameStack& stack, std::size_t start, std::size_t length) {
    if (length < 1)
        throw std::invalid_argument("window: length must be >= 1");
    if (start + length > stack.frames())
        throw std::invalid_argument("window: [" + std::to_string(start) + ", " +
                                    std::to_string(start + length) + ") exceeds " +
                                    std::to_string(stack.frames()) + " frames");
    FrameStack out(stack.height(), stack.width(), length);
    const std::size_t n = stack.pixels_per_frame();
    for (std::size_t f = 0; f < length; ++f) {
        const float* src = stack.frame_data(start + f);
        std::copy(src, src + n, out.frame_data(f));
    }
    return out;
}

}  // namespace sbn
