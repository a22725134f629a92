#pragma once

#include <cstdint>
#include <cstdlib>
#include <vector>

#include "ssgloss/config.hpp"
#include "ssgloss/error.hpp"
#include "ssgloss/image.hpp"

namespace ssgloss {

using ResponseMap = BasicImage<int>;

// Binary edge map of a ground-truth image together with the centers whose
// whole search-plus-window footprint lies inside the image.
struct EdgeMask {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> bits;  // row-major, 0 or 1
    std::vector<Pixel> centers;      // row-major order
    double threshold = 0.0;
    int search_size = 1;
    int window_size = 1;
    double edge_fraction = 0.0;

    [[nodiscard]] bool bit(int r, int c) const noexcept {
        return bits[static_cast<std::size_t>(r) * static_cast<std::size_t>(width) + static_cast<std::size_t>(c)] != 0;
    }
    [[nodiscard]] int footprint_radius() const noexcept { return (search_size - 1) / 2 + (window_size - 1) / 2; }

    // Builds a mask from an explicit bit map; centers and edge_fraction are
    // derived. Also the entry point for masks forced by callers.
    static EdgeMask from_bits(int height, int width, std::vector<std::uint8_t> bits, double threshold, int search_size,
                              int window_size) {
        if (height < 0 || width < 0) throw DimensionError("negative mask dimensions");
        if (bits.size() != static_cast<std::size_t>(height) * static_cast<std::size_t>(width))
            throw DimensionError("mask bit count does not match its dimensions");
        EdgeMask m;
        m.height = height;
        m.width = width;
        m.bits = std::move(bits);
        m.threshold = threshold;
        m.search_size = search_size;
        m.window_size = window_size;
        std::size_t set = 0;
        for (auto& b : m.bits) {
            b = b ? 1 : 0;
            set += b;
        }
        m.edge_fraction = m.bits.empty() ? 0.0 : static_cast<double>(set) / static_cast<double>(m.bits.size());
        const int radius = m.footprint_radius();
        for (int r = radius; r < height - radius; ++r)
            for (int c = radius; c < width - radius; ++c)
                if (m.bit(r, c)) m.centers.push_back({r, c});
        return m;
    }

    static EdgeMask empty_like(int height, int width, const SsgConfig& cfg) {
        return from_bits(height, width, std::vector<std::uint8_t>(static_cast<std::size_t>(height) * width, 0),
                         cfg.threshold, cfg.search_size, cfg.window_size);
    }

    bool operator==(const EdgeMask&) const = default;
};

// BT.601 luma rounded half-up, in exact integer arithmetic.
inline ImageU8 to_luma(const ImageU8& img) {
    if (img.channels == 1) return img;
    if (img.channels != 3) throw DimensionError("luma needs 1 or 3 channels, got " + std::to_string(img.channels));
    ImageU8 out(img.height, img.width, 1);
    for (int r = 0; r < img.height; ++r)
        for (int c = 0; c < img.width; ++c) {
            const int y = 299 * img(r, c, 0) + 587 * img(r, c, 1) + 114 * img(r, c, 2);
            out(r, c) = static_cast<std::uint8_t>((y + 500) / 1000);
        }
    return out;
}

// 4-neighbour Laplacian with clamp-to-edge padding. Responses lie in
// [-1020, 1020].
inline ResponseMap laplacian(const ImageU8& img) {
    if (img.channels != 1 && img.channels != 3)
        throw DimensionError("laplacian needs 1 or 3 channels, got " + std::to_string(img.channels));
    if (img.height < 3 || img.width < 3)
        throw DimensionError("laplacian needs at least 3x3 pixels, got " + shape_string(img));
    const ImageU8 luma = to_luma(img);
    ResponseMap out(img.height, img.width, 1);
    const int h = img.height;
    const int w = img.width;
    for (int r = 0; r < h; ++r) {
        const int up = r > 0 ? r - 1 : 0;
        const int down = r + 1 < h ? r + 1 : h - 1;
        for (int c = 0; c < w; ++c) {
            const int left = c > 0 ? c - 1 : 0;
            const int right = c + 1 < w ? c + 1 : w - 1;
            out(r, c) = luma(up, c) + luma(down, c) + luma(r, left) + luma(r, right) - 4 * luma(r, c);
        }
    }
    return out;
}

// Marks |Laplacian| > t. Centers respect the footprint of cfg's Ks and Kw.
inline EdgeMask compute_edge_mask(const ImageU8& img, const SsgConfig& cfg) {
    const ResponseMap response = laplacian(img);
    std::vector<std::uint8_t> bits(response.data.size());
    for (std::size_t i = 0; i < bits.size(); ++i)
        bits[i] = static_cast<double>(std::abs(response.data[i])) > cfg.threshold ? 1 : 0;
    return EdgeMask::from_bits(img.height, img.width, std::move(bits), cfg.threshold, cfg.search_size,
                               cfg.window_size);
}

} // namespace ssgloss
