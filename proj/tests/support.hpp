#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "ssgloss/ssgloss.hpp"

namespace testing_support {

// Scratch directory removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("ssgloss_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    [[nodiscard]] const std::filesystem::path& path() const { return path_; }
    [[nodiscard]] std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline ssgloss::ImageU8 random_u8(int h, int w, int c, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> dist(0, 255);
    ssgloss::ImageU8 img(h, w, c);
    for (auto& v : img.data) v = static_cast<std::uint8_t>(dist(rng));
    return img;
}

// Mask with every admissible pixel set, for forcing centers regardless of
// image content.
inline ssgloss::EdgeMask full_mask(int h, int w, const ssgloss::SsgConfig& cfg) {
    return ssgloss::EdgeMask::from_bits(h, w, std::vector<std::uint8_t>(static_cast<std::size_t>(h) * w, 1),
                                        cfg.threshold, cfg.search_size, cfg.window_size);
}

inline ssgloss::EdgeMask single_center_mask(int h, int w, ssgloss::Pixel p, const ssgloss::SsgConfig& cfg) {
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(h) * w, 0);
    bits[static_cast<std::size_t>(p.row) * w + p.col] = 1;
    return ssgloss::EdgeMask::from_bits(h, w, std::move(bits), cfg.threshold, cfg.search_size, cfg.window_size);
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

inline double max_abs_diff(const ssgloss::GradientField& a, const ssgloss::GradientField& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i)
        m = std::max(m, std::abs(static_cast<double>(a.data[i]) - static_cast<double>(b.data[i])));
    return m;
}

// Straight-line transcription of the graph definition: window distance,
// exponential similarity, normalization over the stride grid. Shares no code
// with the library.
inline std::vector<double> hand_weights(const ssgloss::Image& img, int r, int c, int ks, int kw, double h, int stride) {
    const int half_s = (ks - 1) / 2;
    const int f = (kw - 1) / 2;
    std::vector<double> sims;
    for (int dr = -(half_s / stride) * stride; dr <= half_s; dr += stride)
        for (int dc = -(half_s / stride) * stride; dc <= half_s; dc += stride) {
            double sum = 0.0;
            for (int y = -f; y <= f; ++y)
                for (int x = -f; x <= f; ++x)
                    for (int ch = 0; ch < img.channels; ++ch) {
                        const double a = img.data[((r + y) * img.width + (c + x)) * img.channels + ch];
                        const double b = img.data[((r + dr + y) * img.width + (c + dc + x)) * img.channels + ch];
                        sum += (a - b) * (a - b);
                    }
            sims.push_back(std::exp(-(sum / (img.channels * kw * kw)) / h));
        }
    double total = 0.0;
    for (double s : sims) total += s;
    for (double& s : sims) s /= total;
    return sims;
}

struct FdCheck {
    double worst = 0.0;          // largest relative error over compared entries
    double worst_unfiltered = 0.0;
    std::size_t compared = 0;
    std::size_t straddling = 0;  // stencils crossing an L1 kink, left out of `worst`
};

// Analytic reference gradient against central differences of the forward
// loss with step 1e-4. Denominators are floored at 1e-3 of the largest
// difference quotient so that truncation error on near-zero entries does not
// dominate. A stencil is straddling when some q - p changes sign between its
// two evaluations; the loss has no derivative there to estimate.
inline FdCheck finite_difference_check(const ssgloss::Image& hr, const ssgloss::Image& sr,
                                       const ssgloss::EdgeMask& mask, const ssgloss::SsgConfig& cfg) {
    using namespace ssgloss;
    constexpr double step = 1e-4;
    const GradientField g = ssl_backward(hr, sr, mask, cfg).gradient;
    const Ssg target = compute_ssg_oracle(hr, mask, cfg);
    auto signs = [&](const Ssg& s) {
        std::vector<int> out(s.weights.size());
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = (s.weights[i] > target.weights[i]) - (s.weights[i] < target.weights[i]);
        return out;
    };
    const auto base = signs(compute_ssg_oracle(sr, mask, cfg));

    std::vector<double> fd(sr.size());
    std::vector<bool> straddles(sr.size());
    Image x = sr;
    double scale = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double keep = x.data[j];
        x.data[j] = keep + step;
        const Ssg up = compute_ssg_oracle(x, mask, cfg);
        x.data[j] = keep - step;
        const Ssg down = compute_ssg_oracle(x, mask, cfg);
        x.data[j] = keep;
        fd[j] = (ssl_forward(target, up, cfg).ssl - ssl_forward(target, down, cfg).ssl) / (2 * step);
        straddles[j] = signs(up) != base || signs(down) != base;
        scale = std::max(scale, std::abs(fd[j]));
    }

    FdCheck out;
    const double floor = std::max(1e-3 * scale, 1e-300);
    for (std::size_t j = 0; j < fd.size(); ++j) {
        const double a = g.data[j];
        if (a == 0.0 && fd[j] == 0.0) continue;
        const double rel = std::abs(a - fd[j]) / std::max({std::abs(a), std::abs(fd[j]), floor});
        out.worst_unfiltered = std::max(out.worst_unfiltered, rel);
        if (straddles[j]) {
            ++out.straddling;
            continue;
        }
        ++out.compared;
        out.worst = std::max(out.worst, rel);
    }
    return out;
}

}  // namespace testing_support
