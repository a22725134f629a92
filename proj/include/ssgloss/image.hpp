#pragma once

#include <algorithm>
#include <compare>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ssgloss/error.hpp"

namespace ssgloss {

// Row-major, channel-interleaved raster. A window row of K pixels is a
// contiguous run of K * channels values, which the patch kernels rely on.
template <typename T>
struct BasicImage {
    using value_type = T;

    int height = 0;
    int width = 0;
    int channels = 1;
    std::vector<T> data;

    BasicImage() = default;
    BasicImage(int h, int w, int c, T fill = T{})
        : height(h), width(w), channels(c),
          data(static_cast<std::size_t>(h) * static_cast<std::size_t>(w) * static_cast<std::size_t>(c), fill) {
        if (h < 0 || w < 0 || c < 1) throw DimensionError("invalid image shape");
    }

    [[nodiscard]] std::size_t index(int r, int c, int ch = 0) const noexcept {
        return (static_cast<std::size_t>(r) * static_cast<std::size_t>(width) + static_cast<std::size_t>(c)) *
                   static_cast<std::size_t>(channels) +
               static_cast<std::size_t>(ch);
    }
    [[nodiscard]] T& operator()(int r, int c, int ch = 0) noexcept { return data[index(r, c, ch)]; }
    [[nodiscard]] const T& operator()(int r, int c, int ch = 0) const noexcept { return data[index(r, c, ch)]; }

    [[nodiscard]] const T* row_ptr(int r, int c = 0) const noexcept { return data.data() + index(r, c); }
    [[nodiscard]] T* row_ptr(int r, int c = 0) noexcept { return data.data() + index(r, c); }

    [[nodiscard]] std::size_t size() const noexcept { return data.size(); }
    [[nodiscard]] bool empty() const noexcept { return data.empty(); }
    [[nodiscard]] bool contains(int r, int c) const noexcept { return r >= 0 && c >= 0 && r < height && c < width; }

    [[nodiscard]] bool same_shape(const auto& other) const noexcept {
        return height == other.height && width == other.width && channels == other.channels;
    }

    bool operator==(const BasicImage&) const = default;
};

struct Pixel {
    int row = 0;
    int col = 0;
    auto operator<=>(const Pixel&) const = default;
};

// Displacement from a center to a sampled search position.
struct Offset {
    int dr = 0;
    int dc = 0;
    auto operator<=>(const Offset&) const = default;
};

using ImageU8 = BasicImage<std::uint8_t>;
// Unit-interval intensities used by all similarity math.
using Image = BasicImage<double>;
// Partial derivatives of the loss with respect to reconstruction pixels.
using GradientField = BasicImage<float>;

inline std::string shape_string(const auto& img) {
    return std::to_string(img.height) + "x" + std::to_string(img.width) + "x" + std::to_string(img.channels);
}

inline Image to_unit(const ImageU8& img) {
    Image out;
    out.height = img.height;
    out.width = img.width;
    out.channels = img.channels;
    out.data.resize(img.data.size());
    std::transform(img.data.begin(), img.data.end(), out.data.begin(),
                   [](std::uint8_t v) { return static_cast<double>(v) / 255.0; });
    return out;
}

// Inverse of to_unit: clamps to [0,1] and rounds to the nearest byte.
inline ImageU8 from_unit(const Image& img) {
    ImageU8 out;
    out.height = img.height;
    out.width = img.width;
    out.channels = img.channels;
    out.data.resize(img.data.size());
    std::transform(img.data.begin(), img.data.end(), out.data.begin(), [](double v) {
        const double scaled = std::clamp(v, 0.0, 1.0) * 255.0;
        return static_cast<std::uint8_t>(std::lround(scaled));
    });
    return out;
}

} // namespace ssgloss
