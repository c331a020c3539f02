#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "hover_es/dynamics.hpp"
#include "hover_es/species_io.hpp"

using namespace hover_es;

namespace {

ModelCoefficients hawkmoth() {
    ModelCoefficients k;
    k.kd1 = 0.0354;
    k.kL = 6.216e-4;
    k.kd2 = 0.3492;
    k.kd3 = 17.3331;
    k.inertia_flap = 1.3179e-7;
    k.mass_kg = 1648e-6;
    k.gravity = 9.81;
    return k;
}

double max_rel_diff(const PlantState& a, const PlantState& b) {
    auto rel = [](double x, double y) { return std::abs(x - y) / std::max(std::abs(y), 1.0); };
    return std::max({rel(a.z, b.z), rel(a.phi, b.phi), rel(a.w, b.w), rel(a.phidot, b.phidot)});
}

}  // namespace

TEST(Plant, FreeFallFromRest) {
    const auto d = plant_rhs({0, 0, 0, 0}, 0.0, hawkmoth());
    EXPECT_EQ(d.z, 0.0);
    EXPECT_EQ(d.phi, 0.0);
    EXPECT_DOUBLE_EQ(d.w, 9.81);
    EXPECT_EQ(d.phidot, 0.0);
}

TEST(Plant, LiftBalancesWeight) {
    const auto k = hawkmoth();
    const double pd = std::sqrt(k.gravity / k.kL);
    EXPECT_NEAR(plant_rhs({0, 0, 0, pd}, 0.0, k).w, 0.0, 1e-12);
    EXPECT_NEAR(plant_rhs({0, 0, 0, -pd}, 0.0, k).w, 0.0, 1e-12);
}

TEST(Plant, HawkmothSubstitution) {
    const auto d = plant_rhs({0, 0, 0.2, 100}, 0.0, hawkmoth());
    EXPECT_DOUBLE_EQ(d.z, 0.2);
    EXPECT_DOUBLE_EQ(d.phi, 100.0);
    // 9.81 - 0.708 - 6.216
    EXPECT_NEAR(d.w, 2.886, 1e-12);
    // -3492 - 346.662
    EXPECT_NEAR(d.phidot, -3838.662, 1e-9);
}

TEST(Plant, TorqueEntersThroughInertia) {
    const auto k = hawkmoth();
    const auto a = plant_rhs({0, 0, 0.1, 3}, 0.0, k);
    const auto b = plant_rhs({0, 0, 0.1, 3}, 2e-3, k);
    EXPECT_NEAR(b.phidot - a.phidot, 2e-3 / k.inertia_flap, 1e-6);
    EXPECT_EQ(a.w, b.w);
}

TEST(Plant, ParitySymmetries) {
    const auto k = hawkmoth();
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-200.0, 200.0);
    for (int i = 0; i < 100; ++i) {
        const PlantState x{u(rng) * 1e-3, u(rng) * 1e-2, u(rng) * 1e-2, u(rng)};
        const double tau = u(rng) * 1e-5;
        const PlantState xm{x.z, x.phi, x.w, -x.phidot};
        const auto d = plant_rhs(x, tau, k);
        const auto dm = plant_rhs(xm, -tau, k);
        EXPECT_NEAR(dm.phidot, -d.phidot, 1e-12 * std::abs(d.phidot) + 1e-12);
        EXPECT_NEAR(dm.w, d.w, 1e-12 * std::abs(d.w) + 1e-12);
        // Quadratic drag always opposes the rate.
        EXPECT_LE(x.phidot * (-k.kd2 * std::abs(x.phidot) * x.phidot), 0.0);
    }
}

TEST(AbsSmooth, KnownValues) {
    EXPECT_EQ(abs_smooth(0.0, SmoothingOrder{50}), 0.0);
    EXPECT_NEAR(abs_smooth(1.0, SmoothingOrder{50}), 2.0 / std::numbers::pi * std::atan(50.0), 1e-15);
    EXPECT_NEAR(abs_smooth(1.0, SmoothingOrder{50}), 0.98727, 5e-6);
    EXPECT_EQ(SmoothingOrder{}.value(), 50);
    EXPECT_THROW(SmoothingOrder{0}, DomainError);
}

TEST(AbsSmooth, EvenAndBelowAbs) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-50.0, 50.0);
    for (int n : {1, 50, 5000}) {
        for (int i = 0; i < 200; ++i) {
            const double v = u(rng);
            EXPECT_EQ(abs_smooth(-v, SmoothingOrder{n}), abs_smooth(v, SmoothingOrder{n}));
            EXPECT_LE(abs_smooth(v, SmoothingOrder{n}), std::abs(v));
            EXPECT_GE(abs_smooth(v, SmoothingOrder{n}), 0.0);
        }
    }
}

TEST(PlantSmooth, DampingDeviationBound) {
    const auto k = hawkmoth();
    const SmoothingOrder n{50};
    for (double pd : {1.0, 1.5, 3.0, 10.0, 100.0, -1.0, -7.0}) {
        for (double w : {-0.5, 0.1, 2.0}) {
            const auto e = plant_rhs({0, 0, w, pd}, 0.0, k);
            const auto s = plant_rhs_smooth({0, 0, w, pd}, 0.0, k, n);
            const double damping = k.kd1 * std::abs(pd) * std::abs(w);
            EXPECT_LE(std::abs(e.w - s.w), 0.013 * damping) << pd << " " << w;
        }
    }
}

TEST(PlantSmooth, ExactAtZeroRate) {
    const auto k = hawkmoth();
    const PlantState x{0.3, -0.2, 0.7, 0.0};
    const auto e = plant_rhs(x, 1e-4, k);
    const auto s = plant_rhs_smooth(x, 1e-4, k);
    EXPECT_EQ(e.w, s.w);
    EXPECT_EQ(e.phidot, s.phidot);
}

TEST(PlantSmooth, ConvergesForLargeOrder) {
    const auto k = hawkmoth();
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> mag(0.1, 300.0);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
        const double pd = (u(rng) < 0 ? -1.0 : 1.0) * mag(rng);
        const PlantState x{u(rng), u(rng), u(rng), pd};
        const double tau = 1e-4 * u(rng);
        worst = std::max(worst, max_rel_diff(plant_rhs_smooth(x, tau, k, SmoothingOrder{1000000}), plant_rhs(x, tau, k)));
    }
    EXPECT_LT(worst, 1e-4);
}

TEST(PlantSmooth, ErrorDecreasesWithOrder) {
    const auto k = hawkmoth();
    for (double pd : {0.05, 0.3, 2.0, -40.0}) {
        const PlantState x{0.0, 0.0, 0.25, pd};
        const auto exact = plant_rhs(x, 0.0, k);
        double prev = INFINITY;
        for (int n : {50, 500, 5000}) {
            const auto s = plant_rhs_smooth(x, 0.0, k, SmoothingOrder{n});
            const double err = std::abs(s.w - exact.w) + std::abs(s.phidot - exact.phidot);
            EXPECT_LT(err, prev) << pd << " n=" << n;
            prev = err;
        }
    }
}

TEST(Plant, BundledCoefficientsAreTotal) {
    for (const auto& name : bundled_species()) {
        const auto k = find_species(name).coefficients;
        const auto d = plant_rhs({1e3, -1e3, 50.0, -1e4}, 1.0, k);
        EXPECT_TRUE(std::isfinite(d.w) && std::isfinite(d.phidot)) << name;
    }
}
