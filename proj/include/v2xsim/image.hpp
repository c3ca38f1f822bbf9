#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace v2xsim {

/// Row-major HxWxC image of doubles. Channel data is interleaved per pixel.
class Image {
public:
    Image() = default;
    Image(int width, int height, int channels, double fill = 0.0);

    int width() const { return width_; }
    int height() const { return height_; }
    int channels() const { return channels_; }
    bool empty() const { return data_.empty(); }
    std::size_t pixel_count() const { return std::size_t(width_) * std::size_t(height_); }

    double& at(int x, int y, int c = 0) { return data_[index(x, y, c)]; }
    double at(int x, int y, int c = 0) const { return data_[index(x, y, c)]; }
    std::span<double> pixel(int x, int y) { return {data_.data() + index(x, y, 0), std::size_t(channels_)}; }
    std::span<const double> pixel(int x, int y) const {
        return {data_.data() + index(x, y, 0), std::size_t(channels_)};
    }

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }

    bool same_shape(const Image& other) const {
        return width_ == other.width_ && height_ == other.height_ && channels_ == other.channels_;
    }
    bool same_size(const Image& other) const { return width_ == other.width_ && height_ == other.height_; }

    void fill(double v);

private:
    std::size_t index(int x, int y, int c) const {
        return (std::size_t(y) * std::size_t(width_) + std::size_t(x)) * std::size_t(channels_) + std::size_t(c);
    }

    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    std::vector<double> data_;
};

/// Mean absolute difference over all samples.
double mean_abs_diff(const Image& a, const Image& b);

}  // namespace v2xsim
