#ifndef RADSPLICE_IMAGE_HPP
#define RADSPLICE_IMAGE_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "radsplice/error.hpp"
#include "radsplice/geometry.hpp"

namespace radsplice {

/// Row-major luminance image with samples in [0,1].
class GrayImage {
public:
    static constexpr int kMinSide = 16;

    GrayImage() = default;
    GrayImage(int width, int height, float fill = 0.0f)
        : width_(width), height_(height),
          data_(static_cast<std::size_t>(std::max(width, 0)) * std::max(height, 0), fill) {
        if (width < 0 || height < 0)
            throw Error(ErrorCode::InvalidInput, "negative image size");
    }

    int width() const { return width_; }
    int height() const { return height_; }
    ImageDims dims() const { return {width_, height_}; }
    bool empty() const { return data_.empty(); }

    float& at(int x, int y) { return data_[static_cast<std::size_t>(y) * width_ + x]; }
    float at(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }

    /// Clamp-to-edge access.
    float clamped(int x, int y) const {
        x = x < 0 ? 0 : (x >= width_ ? width_ - 1 : x);
        y = y < 0 ? 0 : (y >= height_ ? height_ - 1 : y);
        return at(x, y);
    }

    /// Bilinear sample at pixel-index coordinates, clamped at the borders.
    double bilinear(double x, double y) const {
        const double fx = std::floor(x), fy = std::floor(y);
        const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
        const double ax = x - fx, ay = y - fy;
        const double top = (1 - ax) * clamped(x0, y0) + ax * clamped(x0 + 1, y0);
        const double bot = (1 - ax) * clamped(x0, y0 + 1) + ax * clamped(x0 + 1, y0 + 1);
        return (1 - ay) * top + ay * bot;
    }

    std::span<float> pixels() { return data_; }
    std::span<const float> pixels() const { return data_; }

    /// Throws unless the image satisfies the detector's input contract.
    void validate() const {
        if (width_ < kMinSide || height_ < kMinSide)
            throw Error(ErrorCode::InvalidInput,
                        "image must be at least 16x16, got " + std::to_string(width_) + "x" +
                            std::to_string(height_));
        for (float v : data_)
            if (!std::isfinite(v) || v < 0.0f || v > 1.0f)
                throw Error(ErrorCode::InvalidInput, "image samples must be finite and in [0,1]");
    }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<float> data_;
};

inline float luminance(float r, float g, float b) { return 0.299f * r + 0.587f * g + 0.114f * b; }

}  // namespace radsplice

#endif
