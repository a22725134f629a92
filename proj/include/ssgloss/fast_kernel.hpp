#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "ssgloss/config.hpp"
#include "ssgloss/edge_mask.hpp"
#include "ssgloss/error.hpp"
#include "ssgloss/image.hpp"
#include "ssgloss/loss.hpp"
#include "ssgloss/parallel.hpp"
#include "ssgloss/simd_kernels.hpp"
#include "ssgloss/ssg.hpp"

namespace ssgloss {

// Work partition for the optimized kernels. Centers are grouped into fixed
// tiles of the image plane; results depend on the tile geometry but never on
// n_workers.
struct KernelPlan {
    int tile_rows = 32;
    int tile_cols = 32;
    int n_workers = 1;
    bool precompute_sq = false;
    bool use_simd = true;  // AVX2/FMA inner loops when the CPU has them

    static KernelPlan with_workers(int n) {
        KernelPlan plan;
        plan.n_workers = n;
        return plan;
    }

    void validate() const {
        if (tile_rows < 1 || tile_cols < 1) throw ConfigError("tile dimensions must be >= 1");
        if (n_workers < 1) throw ConfigError("n_workers must be >= 1");
    }
};

namespace detail {

// Per-pixel sum of squares over the Kw x Kw x C window centered there, read
// from a summed-area table. Only valid where the window fits.
class WindowEnergy {
public:
    WindowEnergy(const Image& img, int window_size) : width_(img.width), f_(window_size / 2) {
        const std::size_t stride = static_cast<std::size_t>(img.width) + 1;
        table_.assign((static_cast<std::size_t>(img.height) + 1) * stride, 0.0);
        for (int r = 0; r < img.height; ++r) {
            double running = 0.0;
            const double* row = img.row_ptr(r);
            for (int c = 0; c < img.width; ++c) {
                for (int ch = 0; ch < img.channels; ++ch) {
                    const double v = row[c * img.channels + ch];
                    running += v * v;
                }
                table_[(r + 1) * stride + c + 1] = table_[r * stride + c + 1] + running;
            }
        }
    }

    [[nodiscard]] double at(int r, int c) const noexcept {
        const std::size_t stride = static_cast<std::size_t>(width_) + 1;
        const std::size_t r0 = r - f_, r1 = r + f_ + 1, c0 = c - f_, c1 = c + f_ + 1;
        return table_[r1 * stride + c1] - table_[r0 * stride + c1] - table_[r1 * stride + c0] +
               table_[r0 * stride + c0];
    }

private:
    int width_;
    int f_;
    std::vector<double> table_;
};

// Geometry shared by every center of one image: flat offsets of the sampled
// windows and of the window rows.
struct PatchGeometry {
    int window_size = 1;
    int f = 0;
    int run = 0;                 // values per window row: Kw * C
    std::ptrdiff_t row_step = 0; // values per image row: W * C
    double norm = 1.0;           // C * Kw^2
    std::vector<std::ptrdiff_t> offset_shift;

    PatchGeometry(const Image& img, const SsgConfig& cfg, const std::vector<Offset>& offsets)
        : window_size(cfg.window_size), f(cfg.window_radius()), run(cfg.window_size * img.channels),
          row_step(static_cast<std::ptrdiff_t>(img.width) * img.channels),
          norm(static_cast<double>(img.channels) * cfg.window_size * cfg.window_size) {
        offset_shift.reserve(offsets.size());
        for (const Offset& o : offsets)
            offset_shift.push_back(static_cast<std::ptrdiff_t>(o.dr) * row_step +
                                   static_cast<std::ptrdiff_t>(o.dc) * img.channels);
    }

    [[nodiscard]] std::ptrdiff_t window_origin(const Image& img, Pixel p) const noexcept {
        return static_cast<std::ptrdiff_t>(img.index(p.row - f, p.col - f));
    }
};

// Normalized similarities of one center into `row`; returns the
// normalization constant.
inline double center_weights(const Image& img, const PatchGeometry& geo, const WindowEnergy* energy, bool use_simd,
                             Pixel p, const std::vector<Offset>& offsets, double h, std::span<double> row) {
    const double* base_p = img.data.data() + geo.window_origin(img, p);
    if (energy) {
        simd::window_cross(use_simd, base_p, geo.offset_shift.data(), row.size(), geo.window_size, geo.row_step,
                           geo.run, row.data());
        const double energy_p = energy->at(p.row, p.col);
        for (std::size_t k = 0; k < row.size(); ++k) {
            const double e_q = energy->at(p.row + offsets[k].dr, p.col + offsets[k].dc);
            row[k] = std::max(0.0, energy_p + e_q - 2.0 * row[k]);
        }
    } else {
        simd::window_sq_distances(use_simd, base_p, geo.offset_shift.data(), row.size(), geo.window_size,
                                  geo.row_step, geo.run, row.data());
    }
    for (double& v : row) v = std::exp(-(v / geo.norm) / h);
    double eps = 0.0;
    for (double s : row) eps += s;
    for (double& s : row) s /= eps;
    return eps;
}

struct Tile {
    int row0 = 0;
    int col0 = 0;
    std::vector<std::size_t> members;  // center indices, row-major
};

inline std::vector<Tile> partition_centers(const std::vector<Pixel>& centers, const KernelPlan& plan) {
    std::map<std::pair<int, int>, Tile> tiles;
    for (std::size_t i = 0; i < centers.size(); ++i) {
        const int tr = centers[i].row / plan.tile_rows;
        const int tc = centers[i].col / plan.tile_cols;
        Tile& tile = tiles[{tr, tc}];
        tile.row0 = tr * plan.tile_rows;
        tile.col0 = tc * plan.tile_cols;
        tile.members.push_back(i);
    }
    std::vector<Tile> out;
    out.reserve(tiles.size());
    for (auto& [key, tile] : tiles) out.push_back(std::move(tile));
    return out;
}

} // namespace detail

// Tiled, multi-threaded graph builder. Agrees with compute_ssg_oracle to
// 1e-6 per weight and is bit-identical for any n_workers.
inline Ssg compute_ssg_fast(const Image& img, const EdgeMask& mask, const SsgConfig& cfg, const KernelPlan& plan) {
    cfg.validate();
    plan.validate();
    check_mask_compatible(img, mask, cfg);
    Ssg ssg = make_ssg_shell(img, mask, cfg);
    if (ssg.centers.empty()) return ssg;

    const detail::PatchGeometry geo(img, cfg, ssg.offsets);
    std::optional<detail::WindowEnergy> energy;
    if (plan.precompute_sq) energy.emplace(img, cfg.window_size);
    const auto tiles = detail::partition_centers(ssg.centers, plan);
    parallel_for(tiles.size(), plan.n_workers, [&](std::size_t t) {
        for (std::size_t i : tiles[t].members)
            ssg.norm_constants[i] = detail::center_weights(img, geo, energy ? &*energy : nullptr, plan.use_simd, ssg.centers[i],
                                                           ssg.offsets, cfg.h, ssg.row(i));
    });
    return ssg;
}

// Tiled backward pass. Each tile scatters into a private buffer covering its
// footprint; buffers are merged in tile order so the field is bit-identical
// for any n_workers.
inline LossAndGradient ssl_backward_fast(const Image& hr, const Image& sr, const EdgeMask& mask, const SsgConfig& cfg,
                                         const KernelPlan& plan) {
    cfg.validate();
    plan.validate();
    detail::check_pair(hr, sr);
    check_mask_compatible(sr, mask, cfg);
    LossAndGradient out{LossReport{}, GradientField(sr.height, sr.width, sr.channels)};
    out.report.alpha = cfg.alpha;
    out.report.ssl = 0.0;
    if (mask.centers.empty()) return out;

    const auto offsets = sample_offsets(cfg);
    const std::size_t n_off = offsets.size();
    const detail::PatchGeometry geo(sr, cfg, offsets);
    std::optional<detail::WindowEnergy> energy_hr, energy_sr;
    if (plan.precompute_sq) {
        energy_hr.emplace(hr, cfg.window_size);
        energy_sr.emplace(sr, cfg.window_size);
    }
    const auto tiles = detail::partition_centers(mask.centers, plan);
    const int reach = cfg.footprint_radius();
    const int channels = sr.channels;

    struct Buffer {
        int row0 = 0, col0 = 0, rows = 0, cols = 0;
        std::vector<double> values;
    };
    std::vector<Buffer> buffers(tiles.size());
    std::vector<CenterLoss> terms(mask.centers.size());
    const double scale = 2.0 / geo.norm;

    parallel_for(tiles.size(), plan.n_workers, [&](std::size_t t) {
        const detail::Tile& tile = tiles[t];
        Buffer& buf = buffers[t];
        buf.row0 = std::max(0, tile.row0 - reach);
        buf.col0 = std::max(0, tile.col0 - reach);
        buf.rows = std::min(sr.height, tile.row0 + plan.tile_rows + reach) - buf.row0;
        buf.cols = std::min(sr.width, tile.col0 + plan.tile_cols + reach) - buf.col0;
        buf.values.assign(static_cast<std::size_t>(buf.rows) * buf.cols * channels, 0.0);
        const std::ptrdiff_t buf_step = static_cast<std::ptrdiff_t>(buf.cols) * channels;

        std::vector<double> p(n_off), q(n_off), dd2(n_off);
        for (std::size_t i : tile.members) {
            const Pixel c = mask.centers[i];
            detail::center_weights(hr, geo, energy_hr ? &*energy_hr : nullptr, plan.use_simd, c, offsets, cfg.h, p);
            detail::center_weights(sr, geo, energy_sr ? &*energy_sr : nullptr, plan.use_simd, c, offsets, cfg.h, q);
            const auto [kl, l1] = detail::center_divergence(p, q, cfg.eps_log);
            terms[i] = {c, kl, l1};
            detail::center_distance_gradient(p, q, cfg.alpha, cfg.h, dd2);

            const double* src_p = sr.data.data() + geo.window_origin(sr, c);
            double* dst_p = buf.values.data() +
                            (static_cast<std::ptrdiff_t>(c.row - geo.f - buf.row0) * buf.cols + (c.col - geo.f - buf.col0)) *
                                channels;
            for (std::size_t k = 0; k < n_off; ++k) {
                if (dd2[k] == 0.0) continue;
                const double coef = dd2[k] * scale;
                const double* src_q = src_p + geo.offset_shift[k];
                double* dst_q = dst_p + (static_cast<std::ptrdiff_t>(offsets[k].dr) * buf.cols + offsets[k].dc) * channels;
                simd::scatter_pair(plan.use_simd, src_p, src_q, geo.row_step, dst_p, dst_q, buf_step, geo.window_size,
                                   geo.run, coef);
            }
        }
    });

    std::vector<double> acc(sr.size(), 0.0);
    for (const Buffer& buf : buffers) {
        const std::size_t run = static_cast<std::size_t>(buf.cols) * channels;
        for (int r = 0; r < buf.rows; ++r) {
            const double* src = buf.values.data() + static_cast<std::size_t>(r) * run;
            double* dst = acc.data() + sr.index(buf.row0 + r, buf.col0);
            for (std::size_t j = 0; j < run; ++j) dst[j] += src[j];
        }
    }
    const double n = static_cast<double>(mask.centers.size());
    for (std::size_t j = 0; j < acc.size(); ++j) out.gradient.data[j] = static_cast<float>(acc[j] / n);
    out.report = detail::finish_report(std::move(terms), cfg.alpha, false);
    return out;
}

} // namespace ssgloss
