#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "ssgloss/config.hpp"
#include "ssgloss/edge_mask.hpp"
#include "ssgloss/error.hpp"
#include "ssgloss/fast_kernel.hpp"
#include "ssgloss/image.hpp"
#include "ssgloss/loss.hpp"

namespace ssgloss {

struct OptimizeStep {
    double total = 0.0;  // ssl + gamma * pixel_l1
    double ssl = 0.0;
    double pixel_l1 = 0.0;
};

struct OptimizeResult {
    Image image;
    OptimizeStep initial;
    std::vector<OptimizeStep> trace;  // loss after each step
};

// Plain gradient descent on ssl + gamma * pixel_l1 in pixel space, clamping
// to [0,1] after every step. The mask stays fixed (it belongs to the target).
inline OptimizeResult toy_optimize(const Image& sr_init, const Image& hr, const EdgeMask& mask, const SsgConfig& cfg,
                                   int steps, double lr, const KernelPlan& plan = {}) {
    detail::check_pair(hr, sr_init);
    if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
    if (steps < 0) throw ConfigError("steps must be non-negative");

    OptimizeResult result{sr_init, {}, {}};
    result.trace.reserve(static_cast<std::size_t>(steps));
    Image& x = result.image;
    const double n = x.empty() ? 1.0 : static_cast<double>(x.size());

    auto evaluate = [&](LossAndGradient& lg) {
        lg = ssl_backward_fast(hr, x, mask, cfg, plan);
        const double l1 = pixel_l1(x, hr);
        return OptimizeStep{lg.report.ssl + cfg.gamma * l1, lg.report.ssl, l1};
    };

    LossAndGradient lg;
    result.initial = evaluate(lg);
    for (int step = 0; step < steps; ++step) {
        for (std::size_t j = 0; j < x.size(); ++j) {
            const double g = static_cast<double>(lg.gradient.data[j]) + cfg.gamma * detail::sign(x.data[j] - hr.data[j]) / n;
            x.data[j] = std::clamp(x.data[j] - lr * g, 0.0, 1.0);
        }
        result.trace.push_back(evaluate(lg));
    }
    return result;
}

} // namespace ssgloss
