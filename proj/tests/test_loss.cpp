#include <gtest/gtest.h>

#include <numeric>

#include "support.hpp"

using namespace ssgloss;
using testing_support::full_mask;

namespace {

Ssg two_atom(double a, double b) {
    Ssg s;
    s.height = 5;
    s.width = 5;
    s.centers = {{2, 2}};
    s.offsets = {{0, 0}, {0, 1}};
    s.weights = {a, b};
    s.norm_constants = {1.0};
    return s;
}

SsgConfig tiny_cfg() {
    SsgConfig cfg;
    cfg.search_size = 5;
    cfg.window_size = 3;
    cfg.stride = 1;
    return cfg;
}

}  // namespace

TEST(SslForward, IdenticalGraphsGiveZero) {
    const SsgConfig cfg;
    const Image img = synthetic::dead_leaves(48, 48, 3, 1);
    const Ssg ssg = compute_ssg_oracle(img, compute_edge_mask(from_unit(img), cfg), cfg);
    ASSERT_GT(ssg.n_centers(), 0u);
    const LossReport r = ssl_forward(ssg, ssg, cfg);
    EXPECT_EQ(r.kl, 0.0);
    EXPECT_EQ(r.l1, 0.0);
    EXPECT_EQ(r.ssl, 0.0);
}

TEST(SslForward, TwoAtomDistribution) {
    const SsgConfig cfg;
    const LossReport r = ssl_forward(two_atom(0.5, 0.5), two_atom(0.8, 0.2), cfg, true);
    const double kl = 0.5 * std::log(0.5 / 0.8) + 0.5 * std::log(0.5 / 0.2);
    EXPECT_NEAR(r.kl, kl, 1e-15);
    EXPECT_NEAR(r.kl, 0.2231435513, 1e-10);
    EXPECT_NEAR(r.l1, 0.6, 1e-15);
    EXPECT_EQ(r.ssl, r.kl + r.l1);
    EXPECT_EQ(r.n_centers, 1u);
    ASSERT_TRUE(r.per_center.has_value());
    EXPECT_EQ(r.per_center->at(0).kl, r.kl);

    const LossReport rev = ssl_forward(two_atom(0.8, 0.2), two_atom(0.5, 0.5), cfg);
    EXPECT_NEAR(rev.kl, 0.8 * std::log(0.8 / 0.5) + 0.2 * std::log(0.2 / 0.5), 1e-15);
    EXPECT_NEAR(rev.kl, 0.1927448, 1e-7);
    EXPECT_GT(std::abs(rev.kl - r.kl), 0.02);
    EXPECT_EQ(rev.l1, r.l1);
}

TEST(SslForward, ZeroTargetAtomsAreSkippedAndFloorApplies) {
    const SsgConfig cfg;
    EXPECT_EQ(ssl_forward(two_atom(1.0, 0.0), two_atom(1.0, 0.0), cfg).kl, 0.0);
    const LossReport r = ssl_forward(two_atom(0.5, 0.5), two_atom(1.0, 0.0), cfg);
    EXPECT_NEAR(r.kl, 0.5 * std::log(0.5) + 0.5 * std::log(0.5 / cfg.eps_log), 1e-12);
}

TEST(SslForward, AlphaWeightsTheL1Term) {
    SsgConfig cfg;
    cfg.alpha = 2.5;
    const LossReport r = ssl_forward(two_atom(0.5, 0.5), two_atom(0.8, 0.2), cfg);
    EXPECT_EQ(r.ssl, r.kl + 2.5 * r.l1);
    const auto j = to_json(r);
    for (const char* key : {"kl", "l1", "ssl", "n_centers", "alpha", "reduction"}) EXPECT_TRUE(j.contains(key)) << key;
    EXPECT_EQ(j["reduction"], "mean-over-centers");
}

TEST(SslForward, DifferentGraphsAreRejected) {
    const SsgConfig cfg;
    Ssg other = two_atom(0.5, 0.5);
    other.centers = {{2, 1}};
    EXPECT_THROW(ssl_forward(two_atom(0.5, 0.5), other, cfg), GraphMismatch);
    Ssg shifted = two_atom(0.5, 0.5);
    shifted.offsets = {{0, 0}, {1, 0}};
    EXPECT_THROW(ssl_forward(two_atom(0.5, 0.5), shifted, cfg), GraphMismatch);
}

TEST(SslForward, PerCenterTermsAverageToTotals) {
    const SsgConfig cfg;
    const Image hr = synthetic::dead_leaves(48, 48, 3, 2);
    const Image sr = synthetic::add_uniform_noise(hr, 0.1, 3);
    const EdgeMask mask = compute_edge_mask(from_unit(hr), cfg);
    const LossReport r = ssl_forward(compute_ssg_oracle(hr, mask, cfg), compute_ssg_oracle(sr, mask, cfg), cfg, true);
    ASSERT_TRUE(r.per_center.has_value());
    ASSERT_EQ(r.per_center->size(), r.n_centers);
    double kl = 0.0;
    double l1 = 0.0;
    for (const auto& t : *r.per_center) {
        kl += t.kl;
        l1 += t.l1;
    }
    EXPECT_NEAR(kl / r.n_centers, r.kl, 1e-9);
    EXPECT_NEAR(l1 / r.n_centers, r.l1, 1e-9);
    EXPECT_GE(r.kl, -1e-9);
    EXPECT_GE(r.l1, 0.0);
}

TEST(SslForward, KlNonNegativeAndL1Symmetric) {
    const SsgConfig cfg = tiny_cfg();
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Image a = synthetic::uniform(12, 12, 3, seed);
        const Image b = synthetic::uniform(12, 12, 3, seed + 100);
        const EdgeMask mask = full_mask(12, 12, cfg);
        const Ssg sa = compute_ssg_oracle(a, mask, cfg);
        const Ssg sb = compute_ssg_oracle(b, mask, cfg);
        const LossReport ab = ssl_forward(sa, sb, cfg);
        const LossReport ba = ssl_forward(sb, sa, cfg);
        EXPECT_GE(ab.kl, -1e-9);
        EXPECT_GE(ba.kl, -1e-9);
        EXPECT_EQ(ab.l1, ba.l1);
    }
}

TEST(SslBackward, IdentityHasZeroLossAndGradient) {
    const SsgConfig cfg;
    const Image img = synthetic::dead_leaves(56, 56, 3, 4);
    const auto out = ssl_backward(img, img, compute_edge_mask(from_unit(img), cfg), cfg);
    ASSERT_GT(out.report.n_centers, 0u);
    EXPECT_LE(std::abs(out.report.ssl), 1e-9);
    EXPECT_TRUE(std::all_of(out.gradient.data.begin(), out.gradient.data.end(), [](float v) { return v == 0.0f; }));
}

TEST(SslBackward, ReportMatchesForward) {
    const SsgConfig cfg;
    const Image hr = synthetic::dead_leaves(48, 48, 3, 5);
    const Image sr = synthetic::add_uniform_noise(hr, 0.05, 6);
    const EdgeMask mask = compute_edge_mask(from_unit(hr), cfg);
    const auto out = ssl_backward(hr, sr, mask, cfg);
    const LossReport fwd = ssl_forward(compute_ssg_oracle(hr, mask, cfg), compute_ssg_oracle(sr, mask, cfg), cfg);
    EXPECT_EQ(out.report.kl, fwd.kl);
    EXPECT_EQ(out.report.l1, fwd.l1);
    EXPECT_EQ(out.report.ssl, fwd.ssl);
    EXPECT_TRUE(out.gradient.same_shape(sr));
}

TEST(SslBackward, MatchesFiniteDifferencesSingleCenter) {
    const SsgConfig cfg = tiny_cfg();
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Image hr = synthetic::uniform(8, 8, 1, seed, 0.4, 0.6);
        const Image sr = synthetic::uniform(8, 8, 1, seed + 1000, 0.4, 0.6);
        const EdgeMask mask = testing_support::single_center_mask(8, 8, {4, 3}, cfg);
        const auto check = testing_support::finite_difference_check(hr, sr, mask, cfg);
        EXPECT_GT(check.compared, 0u);
        EXPECT_LE(check.worst, 1e-4) << seed;
    }
}

TEST(SslBackward, MatchesFiniteDifferencesColor) {
    SsgConfig cfg = tiny_cfg();
    cfg.alpha = 0.7;
    const Image hr = synthetic::uniform(9, 10, 3, 70, 0.4, 0.6);
    const Image sr = synthetic::uniform(9, 10, 3, 71, 0.4, 0.6);
    const auto check = testing_support::finite_difference_check(hr, sr, full_mask(9, 10, cfg), cfg);
    EXPECT_GT(check.compared, 100u);
    EXPECT_LE(check.worst, 1e-4);
}

TEST(SslBackward, PixelsOutsideFootprintAreInert) {
    const SsgConfig cfg = tiny_cfg();
    const Image hr = synthetic::uniform(16, 16, 1, 8, 0.4, 0.6);
    Image sr = synthetic::uniform(16, 16, 1, 9, 0.4, 0.6);
    const EdgeMask mask = testing_support::single_center_mask(16, 16, {4, 4}, cfg);
    const auto base = ssl_backward(hr, sr, mask, cfg);
    // Footprint of (4,4) is rows and cols 1..7.
    for (int r = 0; r < 16; ++r)
        for (int c = 0; c < 16; ++c) {
            const bool inside = r >= 1 && r <= 7 && c >= 1 && c <= 7;
            if (!inside) {
                EXPECT_EQ(base.gradient(r, c), 0.0f) << r << "," << c;
            }
        }
    sr(12, 12) += 0.1;
    sr(0, 0) += 0.1;
    const auto moved = ssl_backward(hr, sr, mask, cfg);
    EXPECT_EQ(moved.report.ssl, base.report.ssl);
    EXPECT_EQ(moved.gradient(12, 12), 0.0f);
}

TEST(SslBackward, EmptyMaskGivesZero) {
    const SsgConfig cfg;
    const Image hr = synthetic::uniform(40, 40, 3, 10);
    const Image sr = synthetic::uniform(40, 40, 3, 11);
    const auto out = ssl_backward(hr, sr, EdgeMask::empty_like(40, 40, cfg), cfg);
    EXPECT_EQ(out.report.ssl, 0.0);
    EXPECT_EQ(out.report.n_centers, 0u);
    EXPECT_TRUE(std::all_of(out.gradient.data.begin(), out.gradient.data.end(), [](float v) { return v == 0.0f; }));
}

TEST(SslBackward, GlobalIntensityShiftLeavesReport) {
    const SsgConfig cfg = tiny_cfg();
    const Image hr = synthetic::uniform(14, 14, 3, 12, 0.2, 0.6);
    const Image sr = synthetic::uniform(14, 14, 3, 13, 0.2, 0.6);
    Image hr2 = hr;
    Image sr2 = sr;
    for (double& v : hr2.data) v += 0.3;
    for (double& v : sr2.data) v += 0.3;
    const EdgeMask mask = full_mask(14, 14, cfg);
    const auto a = ssl_backward(hr, sr, mask, cfg).report;
    const auto b = ssl_backward(hr2, sr2, mask, cfg).report;
    EXPECT_NEAR(a.kl, b.kl, 1e-9);
    EXPECT_NEAR(a.l1, b.l1, 1e-9);
}

TEST(SslBackward, MismatchedShapesAreRejected) {
    const SsgConfig cfg;
    EXPECT_THROW(ssl_backward(Image(40, 40, 3), Image(40, 41, 3), EdgeMask::empty_like(40, 40, cfg), cfg), ShapeMismatch);
}

TEST(Composite, GanAndDmTotals) {
    const SsgConfig gan = SsgConfig::gan();
    const SsgConfig dm = SsgConfig::dm();
    EXPECT_NEAR(composite_total(0.5, 6e-4, 0.0, CompositeWeights::from(gan, LossMode::gan)), 1.1, 1e-12);
    EXPECT_EQ(composite_total(0.0, 0.0, 0.0, CompositeWeights::from(dm, LossMode::dm)), 0.0);
    EXPECT_NEAR(composite_total(0.0, 5e-4, 0.04, CompositeWeights::from(dm, LossMode::dm)), 0.0045, 1e-15);
    // GAN mode ignores the pixel term.
    EXPECT_NEAR(composite_total(0.5, 6e-4, 10.0, CompositeWeights::from(gan, LossMode::gan)), 1.1, 1e-12);
}

TEST(Composite, NegativeWeightsAreRejected) {
    CompositeWeights w{LossMode::dm, -1.0, 0.1};
    EXPECT_THROW(composite_total(0.0, 0.0, 0.0, w), ConfigError);
}

TEST(PixelL1, MeanAbsoluteDifference) {
    Image a(1, 2, 2);
    Image b(1, 2, 2);
    a.data = {0.0, 0.5, 1.0, 0.25};
    b.data = {0.5, 0.5, 0.0, 0.5};
    EXPECT_DOUBLE_EQ(pixel_l1(a, b), (0.5 + 0.0 + 1.0 + 0.25) / 4.0);
}

TEST(ToyOptimize, FixedPointAtTarget) {
    const SsgConfig cfg;
    const Image hr = synthetic::stripes(40, 40, 1, 6);
    const EdgeMask mask = compute_edge_mask(from_unit(hr), cfg);
    ASSERT_GT(mask.centers.size(), 0u);
    const auto res = toy_optimize(hr, hr, mask, cfg, 5, 0.05);
    EXPECT_EQ(res.image, hr);
    ASSERT_EQ(res.trace.size(), 5u);
    for (const auto& s : res.trace) EXPECT_LE(std::abs(s.total), 1e-9);
}

TEST(ToyOptimize, ZeroStepsReturnsStart) {
    const SsgConfig cfg;
    const Image hr = synthetic::stripes(40, 40, 1, 6);
    const Image sr = synthetic::add_uniform_noise(hr, 0.1, 1);
    const auto res = toy_optimize(sr, hr, compute_edge_mask(from_unit(hr), cfg), cfg, 0, 0.05);
    EXPECT_EQ(res.image, sr);
    EXPECT_TRUE(res.trace.empty());
}

TEST(ToyOptimize, FirstStepDescends) {
    const SsgConfig cfg;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const Image hr = synthetic::dead_leaves(40, 40, 3, seed);
        const Image sr = synthetic::add_uniform_noise(hr, 0.1, seed + 10);
        const auto res = toy_optimize(sr, hr, compute_edge_mask(from_unit(hr), cfg), cfg, 1, 1e-3);
        ASSERT_EQ(res.trace.size(), 1u);
        EXPECT_LE(res.trace[0].total, res.initial.total) << seed;
    }
}

TEST(ToyOptimize, RejectsBadArguments) {
    const SsgConfig cfg;
    const Image img(40, 40, 1, 0.5);
    const EdgeMask mask = EdgeMask::empty_like(40, 40, cfg);
    EXPECT_THROW(toy_optimize(img, img, mask, cfg, 1, 0.0), ConfigError);
    EXPECT_THROW(toy_optimize(img, img, mask, cfg, -1, 0.1), ConfigError);
}
