#pragma once

#include <cmath>
#include <string>
#include <string_view>

#include "ssgloss/error.hpp"

namespace ssgloss {

enum class LossMode { gan, dm };

inline std::string_view to_string(LossMode mode) { return mode == LossMode::gan ? "GAN" : "DM"; }

inline LossMode parse_mode(std::string_view text) {
    if (text == "GAN" || text == "gan") return LossMode::gan;
    if (text == "DM" || text == "dm") return LossMode::dm;
    throw ConfigError("unknown mode '" + std::string(text) + "' (expected GAN or DM)");
}

// Every hyperparameter of the mask, graph, and loss in one record.
// Lengths are in pixels; `threshold` is on the 8-bit intensity scale while
// `h` is in unit-intensity squared units.
struct SsgConfig {
    int search_size = 25;  // Ks
    int window_size = 9;   // Kw = 2f + 1
    double h = 0.004;
    int stride = 3;
    double threshold = 20.0;
    double alpha = 1.0;    // L1 weight inside the self-similarity loss
    double beta = 1000.0;  // weight of the self-similarity loss in the composite
    double gamma = 0.1;    // pixel L1 weight (DM composite, toy optimizer)
    double eps_log = 1e-12;

    static SsgConfig gan() { return SsgConfig{}; }
    static SsgConfig dm() {
        SsgConfig cfg;
        cfg.beta = 1.0;
        cfg.gamma = 0.1;
        return cfg;
    }
    static SsgConfig defaults(LossMode mode) { return mode == LossMode::gan ? gan() : dm(); }

    [[nodiscard]] int search_radius() const noexcept { return (search_size - 1) / 2; }
    [[nodiscard]] int window_radius() const noexcept { return (window_size - 1) / 2; }
    // Distance from a center to the farthest pixel any sampled window touches.
    [[nodiscard]] int footprint_radius() const noexcept { return search_radius() + window_radius(); }

    void validate() const {
        auto fail = [](const std::string& what) { throw ConfigError("invalid configuration: " + what); };
        if (search_size < 1 || search_size % 2 == 0) fail("Ks must be a positive odd integer");
        if (window_size < 1 || window_size % 2 == 0) fail("Kw must be a positive odd integer");
        if (window_size > search_size) fail("Kw must not exceed Ks");
        if (stride < 1) fail("stride must be >= 1");
        if (!(h > 0.0) || !std::isfinite(h)) fail("h must be positive and finite");
        if (!(eps_log > 0.0) || !std::isfinite(eps_log)) fail("eps_log must be positive and finite");
        if (!std::isfinite(threshold)) fail("t must be finite");
        if (!(alpha >= 0.0) || !std::isfinite(alpha)) fail("alpha must be non-negative");
        if (!(beta >= 0.0) || !std::isfinite(beta)) fail("beta must be non-negative");
        if (!(gamma >= 0.0) || !std::isfinite(gamma)) fail("gamma must be non-negative");
    }

    bool operator==(const SsgConfig&) const = default;
};

struct CompositeWeights {
    LossMode mode = LossMode::gan;
    double beta = 1000.0;
    double gamma = 0.0;

    static CompositeWeights from(const SsgConfig& cfg, LossMode mode) {
        return {mode, cfg.beta, mode == LossMode::dm ? cfg.gamma : 0.0};
    }

    void validate() const {
        if (!(beta >= 0.0)) throw ConfigError("beta must be non-negative");
        if (mode == LossMode::dm && !(gamma >= 0.0)) throw ConfigError("gamma must be non-negative");
    }
};

} // namespace ssgloss
