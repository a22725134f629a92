#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "ssgloss/config.hpp"
#include "ssgloss/edge_mask.hpp"
#include "ssgloss/fast_kernel.hpp"
#include "ssgloss/image.hpp"
#include "ssgloss/ssg.hpp"
#include "ssgloss/synthetic.hpp"

namespace ssgloss {

struct BenchCase {
    Image hr;
    Image sr;
    EdgeMask mask;
    SsgConfig cfg;
};

struct BenchRow {
    int h = 0;
    int w = 0;
    std::size_t n_centers = 0;
    int ks = 0;
    int kw = 0;
    int stride = 0;
    int workers = 0;
    std::int64_t wall_ns = 0;
    std::uint64_t predicted_madds = 0;
};

inline constexpr const char* bench_csv_header = "h,w,n_centers,Ks,Kw,stride,workers,wall_ns,predicted_madds";

inline std::string to_csv(const BenchRow& row) {
    return std::to_string(row.h) + "," + std::to_string(row.w) + "," + std::to_string(row.n_centers) + "," +
           std::to_string(row.ks) + "," + std::to_string(row.kw) + "," + std::to_string(row.stride) + "," +
           std::to_string(row.workers) + "," + std::to_string(row.wall_ns) + "," + std::to_string(row.predicted_madds);
}

inline void write_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
    out << bench_csv_header << '\n';
    for (const auto& row : rows) out << to_csv(row) << '\n';
}

// Median wall time of `trials` full forward+backward passes per case.
// Cases with no work report zero duration without running.
inline std::vector<BenchRow> bench(const std::vector<BenchCase>& cases, const KernelPlan& plan, int trials = 5) {
    trials = std::max(trials, 1);
    std::vector<BenchRow> rows;
    rows.reserve(cases.size());
    for (const BenchCase& bc : cases) {
        BenchRow row{bc.hr.height, bc.hr.width, bc.mask.centers.size(), bc.cfg.search_size, bc.cfg.window_size,
                     bc.cfg.stride, plan.n_workers, 0, estimate_cost(bc.cfg, bc.mask, bc.hr.channels)};
        if (row.predicted_madds > 0) {
            std::vector<std::int64_t> times;
            times.reserve(static_cast<std::size_t>(trials));
            for (int t = 0; t < trials; ++t) {
                const auto start = std::chrono::steady_clock::now();
                const auto result = ssl_backward_fast(bc.hr, bc.sr, bc.mask, bc.cfg, plan);
                const auto stop = std::chrono::steady_clock::now();
                if (result.report.n_centers != row.n_centers) throw Error("bench: unexpected center count");
                times.push_back(std::chrono::duration_cast<std::chrono::nanoseconds>(stop - start).count());
            }
            std::nth_element(times.begin(), times.begin() + times.size() / 2, times.end());
            row.wall_ns = times[times.size() / 2];
        }
        rows.push_back(row);
    }
    return rows;
}

// Synthetic workload: dead-leaves RGB target, noisy reconstruction, mask
// from the target.
inline BenchCase make_bench_case(int height, int width, const SsgConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    BenchCase bc;
    bc.hr = synthetic::dead_leaves(height, width, 3, seed);
    bc.sr = synthetic::add_uniform_noise(bc.hr, 0.05, seed + 1);
    bc.mask = compute_edge_mask(from_unit(bc.hr), cfg);
    bc.cfg = cfg;
    return bc;
}

inline std::vector<BenchRow> bench(const std::vector<std::pair<int, int>>& sizes, const std::vector<SsgConfig>& cfgs,
                                   const KernelPlan& plan, int trials = 5, std::uint64_t seed = 0) {
    std::vector<BenchRow> rows;
    for (const auto& [h, w] : sizes)
        for (const SsgConfig& cfg : cfgs) {
            const auto part = bench(std::vector<BenchCase>{make_bench_case(h, w, cfg, seed)}, plan, trials);
            rows.insert(rows.end(), part.begin(), part.end());
        }
    return rows;
}

} // namespace ssgloss
