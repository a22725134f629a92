#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ssgloss/config.hpp"
#include "ssgloss/edge_mask.hpp"
#include "ssgloss/error.hpp"
#include "ssgloss/image.hpp"
#include "ssgloss/ssg.hpp"

namespace ssgloss {

struct CenterLoss {
    Pixel center;
    double kl = 0.0;
    double l1 = 0.0;
};

// Self-similarity loss, averaged over mask centers.
struct LossReport {
    double kl = 0.0;
    double l1 = 0.0;
    double ssl = 0.0;
    double alpha = 1.0;
    std::size_t n_centers = 0;
    std::optional<std::vector<CenterLoss>> per_center;

    static constexpr const char* reduction = "mean-over-centers";
};

inline nlohmann::json to_json(const LossReport& report) {
    return nlohmann::json{{"kl", report.kl},
                          {"l1", report.l1},
                          {"ssl", report.ssl},
                          {"n_centers", report.n_centers},
                          {"alpha", report.alpha},
                          {"reduction", LossReport::reduction}};
}

namespace detail {

inline double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

// KL(p || q) with 0 ln 0 = 0, plus sum |q - p|. Both sides of the ratio are
// floored at eps_log, so identical rows contribute exactly zero.
inline std::pair<double, double> center_divergence(std::span<const double> p, std::span<const double> q,
                                                   double eps_log) {
    double kl = 0.0;
    double l1 = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        if (p[k] > 0.0) kl += p[k] * std::log(std::max(p[k], eps_log) / std::max(q[k], eps_log));
        l1 += std::abs(q[k] - p[k]);
    }
    return {kl, l1};
}

// d(kl_i + alpha * l1_i) / d(d2_k) for every sampled offset k of one center,
// written into `out`. With q = softmax(-d2 / h) the KL part collapses to
// (p_k - q_k) / h and the L1 part to -alpha q_k (a_k - sum_j a_j q_j) / h,
// a = sign(q - p). Both vanish exactly when p == q.
inline void center_distance_gradient(std::span<const double> p, std::span<const double> q, double alpha, double h,
                                     std::span<double> out) {
    double centered = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) centered += sign(q[k] - p[k]) * q[k];
    for (std::size_t k = 0; k < p.size(); ++k) {
        const double l1_part = alpha * q[k] * (sign(q[k] - p[k]) - centered);
        out[k] = ((p[k] - q[k]) - l1_part) / h;
    }
}

inline void check_same_graph(const Ssg& a, const Ssg& b) {
    if (a.height != b.height || a.width != b.width)
        throw GraphMismatch("graphs were built on images of different sizes");
    if (a.offsets != b.offsets) throw GraphMismatch("graphs sample different search offsets");
    if (a.centers != b.centers) throw GraphMismatch("graphs have different centers");
}

inline void check_pair(const Image& hr, const Image& sr) {
    if (!hr.same_shape(sr))
        throw ShapeMismatch("HR image is " + shape_string(hr) + " but SR image is " + shape_string(sr));
}

inline LossReport finish_report(std::vector<CenterLoss> terms, double alpha, bool keep_per_center) {
    LossReport report;
    report.alpha = alpha;
    report.n_centers = terms.size();
    if (!terms.empty()) {
        double kl = 0.0;
        double l1 = 0.0;
        for (const auto& t : terms) {
            kl += t.kl;
            l1 += t.l1;
        }
        report.kl = kl / static_cast<double>(terms.size());
        report.l1 = l1 / static_cast<double>(terms.size());
    }
    report.ssl = report.kl + alpha * report.l1;
    if (keep_per_center) report.per_center = std::move(terms);
    return report;
}

} // namespace detail

inline LossReport ssl_forward(const Ssg& ssg_hr, const Ssg& ssg_sr, const SsgConfig& cfg, bool per_center = false) {
    cfg.validate();
    detail::check_same_graph(ssg_hr, ssg_sr);
    std::vector<CenterLoss> terms(ssg_hr.n_centers());
    for (std::size_t i = 0; i < terms.size(); ++i) {
        const auto [kl, l1] = detail::center_divergence(ssg_hr.row(i), ssg_sr.row(i), cfg.eps_log);
        terms[i] = {ssg_hr.centers[i], kl, l1};
    }
    return detail::finish_report(std::move(terms), cfg.alpha, per_center);
}

struct LossAndGradient {
    LossReport report;
    GradientField gradient;
};

// Reference backward pass built on the oracle graphs. Gradients reach only
// the SR image; the HR image is data.
inline LossAndGradient ssl_backward(const Image& hr, const Image& sr, const EdgeMask& mask, const SsgConfig& cfg) {
    detail::check_pair(hr, sr);
    const Ssg ssg_hr = compute_ssg_oracle(hr, mask, cfg);
    const Ssg ssg_sr = compute_ssg_oracle(sr, mask, cfg);
    LossAndGradient out{ssl_forward(ssg_hr, ssg_sr, cfg), GradientField(sr.height, sr.width, sr.channels)};
    if (ssg_sr.n_centers() == 0) return out;

    std::vector<double> acc(sr.size(), 0.0);
    std::vector<double> dd2(ssg_sr.n_offsets());
    const int f = cfg.window_radius();
    const double scale = 2.0 / (static_cast<double>(sr.channels) * cfg.window_size * cfg.window_size);
    for (std::size_t i = 0; i < ssg_sr.n_centers(); ++i) {
        detail::center_distance_gradient(ssg_hr.row(i), ssg_sr.row(i), cfg.alpha, cfg.h, dd2);
        const Pixel p = ssg_sr.centers[i];
        for (std::size_t k = 0; k < dd2.size(); ++k) {
            if (dd2[k] == 0.0) continue;
            const double coef = dd2[k] * scale;
            const Pixel q{p.row + ssg_sr.offsets[k].dr, p.col + ssg_sr.offsets[k].dc};
            for (int dr = -f; dr <= f; ++dr)
                for (int dc = -f; dc <= f; ++dc)
                    for (int ch = 0; ch < sr.channels; ++ch) {
                        const std::size_t ip = sr.index(p.row + dr, p.col + dc, ch);
                        const std::size_t iq = sr.index(q.row + dr, q.col + dc, ch);
                        const double term = coef * (sr.data[ip] - sr.data[iq]);
                        acc[ip] += term;
                        acc[iq] -= term;
                    }
        }
    }
    const double n = static_cast<double>(ssg_sr.n_centers());
    for (std::size_t j = 0; j < acc.size(); ++j) out.gradient.data[j] = static_cast<float>(acc[j] / n);
    return out;
}

// Mean absolute difference over every pixel and channel.
inline double pixel_l1(const Image& a, const Image& b) {
    detail::check_pair(a, b);
    if (a.empty()) return 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += std::abs(a.data[i] - b.data[i]);
    return sum / static_cast<double>(a.size());
}

// GAN: original + beta * ssl.  DM: original + beta * ssl + gamma * pixel_l1.
inline double composite_total(double original_loss, double ssl, double pixel_l1_loss, const CompositeWeights& w) {
    w.validate();
    double total = original_loss + w.beta * ssl;
    if (w.mode == LossMode::dm) total += w.gamma * pixel_l1_loss;
    return total;
}

} // namespace ssgloss
