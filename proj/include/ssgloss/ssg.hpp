#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ssgloss/config.hpp"
#include "ssgloss/edge_mask.hpp"
#include "ssgloss/error.hpp"
#include "ssgloss/image.hpp"

namespace ssgloss {

// Self-similarity graph restricted to mask centers. Row i of `weights` is the
// normalized similarity distribution of center i over `offsets`.
struct Ssg {
    int height = 0;
    int width = 0;
    int channels = 1;
    int search_size = 1;
    int window_size = 1;
    double h = 1.0;
    int stride = 1;
    std::vector<Pixel> centers;
    std::vector<Offset> offsets;
    std::vector<double> weights;         // n_centers x n_offsets
    std::vector<double> norm_constants;  // per-center sum before normalization; not serialized

    [[nodiscard]] std::size_t n_centers() const noexcept { return centers.size(); }
    [[nodiscard]] std::size_t n_offsets() const noexcept { return offsets.size(); }
    [[nodiscard]] std::span<const double> row(std::size_t i) const noexcept {
        return {weights.data() + i * offsets.size(), offsets.size()};
    }
    [[nodiscard]] std::span<double> row(std::size_t i) noexcept {
        return {weights.data() + i * offsets.size(), offsets.size()};
    }

    bool operator==(const Ssg&) const = default;
};

// Stride grid over [-R, R]^2 anchored at the origin, row-major.
inline std::vector<Offset> sample_offsets(const SsgConfig& cfg) {
    cfg.validate();
    const int radius = cfg.search_radius();
    const int steps = radius / cfg.stride;
    std::vector<Offset> offsets;
    offsets.reserve(static_cast<std::size_t>(2 * steps + 1) * static_cast<std::size_t>(2 * steps + 1));
    for (int i = -steps; i <= steps; ++i)
        for (int j = -steps; j <= steps; ++j) offsets.push_back({i * cfg.stride, j * cfg.stride});
    return offsets;
}

inline bool window_inside(const Image& img, Pixel p, int window_size) {
    const int f = (window_size - 1) / 2;
    return p.row - f >= 0 && p.col - f >= 0 && p.row + f < img.height && p.col + f < img.width;
}

// Mean squared difference over two Kw x Kw x C windows.
inline double patch_distance(const Image& img, Pixel p, Pixel q, int window_size) {
    if (window_size < 1 || window_size % 2 == 0) throw ConfigError("window size must be a positive odd integer");
    if (!window_inside(img, p, window_size) || !window_inside(img, q, window_size))
        throw BoundsError("patch window leaves the " + shape_string(img) + " image");
    const int f = (window_size - 1) / 2;
    double sum = 0.0;
    for (int dr = -f; dr <= f; ++dr)
        for (int dc = -f; dc <= f; ++dc)
            for (int ch = 0; ch < img.channels; ++ch) {
                const double diff = img(p.row + dr, p.col + dc, ch) - img(q.row + dr, q.col + dc, ch);
                sum += diff * diff;
            }
    return sum / (static_cast<double>(img.channels) * window_size * window_size);
}

inline double similarity(double d2, double h) { return std::exp(-d2 / h); }

// Throws unless every mask center keeps its footprint inside the image for cfg.
inline void check_mask_compatible(const Image& img, const EdgeMask& mask, const SsgConfig& cfg) {
    if (mask.height != img.height || mask.width != img.width)
        throw ConfigMismatch("mask is " + std::to_string(mask.height) + "x" + std::to_string(mask.width) +
                             " but image is " + shape_string(img));
    const int radius = cfg.footprint_radius();
    for (const Pixel& p : mask.centers) {
        if (p.row < radius || p.col < radius || p.row >= img.height - radius || p.col >= img.width - radius)
            throw ConfigMismatch("center (" + std::to_string(p.row) + "," + std::to_string(p.col) +
                                 ") footprint leaves the image for Ks=" + std::to_string(cfg.search_size) +
                                 " Kw=" + std::to_string(cfg.window_size));
    }
}

inline Ssg make_ssg_shell(const Image& img, const EdgeMask& mask, const SsgConfig& cfg) {
    Ssg ssg;
    ssg.height = img.height;
    ssg.width = img.width;
    ssg.channels = img.channels;
    ssg.search_size = cfg.search_size;
    ssg.window_size = cfg.window_size;
    ssg.h = cfg.h;
    ssg.stride = cfg.stride;
    ssg.centers = mask.centers;
    ssg.offsets = sample_offsets(cfg);
    ssg.weights.assign(ssg.centers.size() * ssg.offsets.size(), 0.0);
    ssg.norm_constants.assign(ssg.centers.size(), 0.0);
    return ssg;
}

// Reference graph builder: straight nested loops, single-threaded, fixed
// left-to-right summation. Its output defines the expected bits for the
// fast kernel.
inline Ssg compute_ssg_oracle(const Image& img, const EdgeMask& mask, const SsgConfig& cfg) {
    cfg.validate();
    check_mask_compatible(img, mask, cfg);
    Ssg ssg = make_ssg_shell(img, mask, cfg);
    std::vector<double> sims(ssg.n_offsets());
    for (std::size_t i = 0; i < ssg.n_centers(); ++i) {
        const Pixel p = ssg.centers[i];
        for (std::size_t k = 0; k < ssg.n_offsets(); ++k) {
            const Pixel q{p.row + ssg.offsets[k].dr, p.col + ssg.offsets[k].dc};
            sims[k] = similarity(patch_distance(img, p, q, cfg.window_size), cfg.h);
        }
        double eps = 0.0;
        for (double s : sims) eps += s;
        ssg.norm_constants[i] = eps;
        auto row = ssg.row(i);
        for (std::size_t k = 0; k < sims.size(); ++k) row[k] = sims[k] / eps;
    }
    return ssg;
}

// Multiply-adds spent on window differences: centers x offsets x C x Kw^2.
inline std::uint64_t estimate_cost(const SsgConfig& cfg, const EdgeMask& mask, int channels) {
    const auto offsets = static_cast<std::uint64_t>(sample_offsets(cfg).size());
    const auto window = static_cast<std::uint64_t>(cfg.window_size) * static_cast<std::uint64_t>(cfg.window_size);
    return static_cast<std::uint64_t>(mask.centers.size()) * offsets * static_cast<std::uint64_t>(channels) * window;
}

} // namespace ssgloss
