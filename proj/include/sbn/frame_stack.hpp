#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace sbn {

/// A grayscale video clip: `frames` images of `height` x `width` real pixels.
/// Pixel values are nominally in [0,1] but may leave that range for signed
/// data such as decomposition components. Frames are stored contiguously,
/// each in row-major order.
class FrameStack {
public:
    FrameStack(std::size_t height, std::size_t width, std::size_t frames);
    FrameStack(std::size_t height, std::size_t width, std::size_t frames,
               std::vector<float> data);

    std::size_t height() const { return height_; }
    std::size_t width() const { return width_; }
    std::size_t frames() const { return frames_; }
    std::size_t pixels_per_frame() const { return height_ * width_; }

    float& at(std::size_t frame, std::size_t y, std::size_t x) {
        return data_[frame * pixels_per_frame() + y * width_ + x];
    }
    float at(std::size_t frame, std::size_t y, std::size_t x) const {
        return data_[frame * pixels_per_frame() + y * width_ + x];
    }

    const float* frame_data(std::size_t frame) const {
        return data_.data() + frame * pixels_per_frame();
    }
    float* frame_data(std::size_t frame) {
        return data_.data() + frame * pixels_per_frame();
    }

    const std::vector<float>& data() const { return data_; }
    std::vector<float>& data() { return data_; }

    /// Throws std::invalid_argument if any stored value is not finite.
    void check_finite() const;

private:
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::size_t frames_ = 0;
    std::vector<float> data_;
};

/// Matrix view of a video: one vectorized frame per column, so the matrix is
/// pixels_per_frame x frames. All solver math runs on this form.
struct MatricizedVideo {
    Eigen::Index pixels_per_frame = 0;
    Eigen::Index frames = 0;
    Eigen::MatrixXd matrix;
};

/// Column j of the result is frame j flattened row-major.
MatricizedVideo matricize(const FrameStack& stack);

/// Inverse of matricize. height*width must equal mat.pixels_per_frame.
FrameStack tensorize(const MatricizedVideo& mat, std::size_t height, std::size_t width);

/// Copies frames [start, start+length) into a new stack.
FrameStack window(const FrameStack& stack, std::size_t start, std::size_t length);

}  // namespace sbn
