#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

#include "ssgloss/image.hpp"

// Deterministic test and demo images.

namespace ssgloss::synthetic {

// Vertical bars: `period / 2` columns at `low`, the rest of each period at `high`.
inline Image stripes(int height, int width, int channels, int period, double low = 0.2, double high = 0.8) {
    Image img(height, width, channels);
    const int half = std::max(1, period / 2);
    for (int r = 0; r < height; ++r)
        for (int c = 0; c < width; ++c)
            for (int ch = 0; ch < channels; ++ch) img(r, c, ch) = (c % period) < half ? low : high;
    return img;
}

inline Image uniform(int height, int width, int channels, std::uint64_t seed, double low = 0.0, double high = 1.0) {
    Image img(height, width, channels);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(low, high);
    for (double& v : img.data) v = dist(rng);
    return img;
}

// Adds U(-amplitude, amplitude) per value and clamps to [0,1].
inline Image add_uniform_noise(const Image& img, double amplitude, std::uint64_t seed) {
    Image out = img;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-amplitude, amplitude);
    for (double& v : out.data) v = std::clamp(v + dist(rng), 0.0, 1.0);
    return out;
}

// Dead-leaves model: occluding disks with radius density ~ 1/r^3, the usual
// stand-in for natural image statistics (scale invariance, sharp edges, flat
// interiors).
inline Image dead_leaves(int height, int width, int channels, std::uint64_t seed, int n_disks = 400,
                         double min_radius = 2.0, double max_radius = 40.0) {
    Image img(height, width, channels, 0.5);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double a = 1.0 / (min_radius * min_radius);
    const double b = 1.0 / (max_radius * max_radius);
    for (int n = 0; n < n_disks; ++n) {
        // Inverse CDF of p(r) ~ r^-3 on [min_radius, max_radius].
        const double radius = 1.0 / std::sqrt(a - unit(rng) * (a - b));
        const double cy = unit(rng) * height;
        const double cx = unit(rng) * width;
        double color[3];
        const double base = unit(rng);
        for (int ch = 0; ch < 3; ++ch) color[ch] = std::clamp(base + 0.2 * (unit(rng) - 0.5), 0.0, 1.0);
        const int r0 = std::max(0, static_cast<int>(cy - radius));
        const int r1 = std::min(height - 1, static_cast<int>(cy + radius));
        const int c0 = std::max(0, static_cast<int>(cx - radius));
        const int c1 = std::min(width - 1, static_cast<int>(cx + radius));
        for (int r = r0; r <= r1; ++r)
            for (int c = c0; c <= c1; ++c) {
                const double dy = r + 0.5 - cy;
                const double dx = c + 0.5 - cx;
                if (dy * dy + dx * dx <= radius * radius)
                    for (int ch = 0; ch < channels; ++ch) img(r, c, ch) = color[ch];
            }
    }
    return img;
}

} // namespace ssgloss::synthetic
