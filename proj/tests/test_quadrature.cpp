#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "hover_es/quadrature.hpp"

using hover_es::IntegrationError;
namespace quad = hover_es::quad;

TEST(Quadrature, Polynomial) {
    const double v = quad::integrate([](double x) { return 3.0 * x * x + 1.0; }, 0.0, 2.0);
    EXPECT_NEAR(v, 10.0, 1e-12);
}

TEST(Quadrature, SmoothTranscendental) {
    const double v = quad::integrate([](double x) { return std::sin(x); }, 0.0, std::numbers::pi);
    EXPECT_NEAR(v, 2.0, 1e-9);
}

TEST(Quadrature, IntegrableEndpointSingularities) {
    EXPECT_NEAR(quad::integrate([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0), 2.0, 2e-8);
    EXPECT_NEAR(quad::integrate([](double x) { return std::pow(x, -0.7); }, 0.0, 1.0), 1.0 / 0.3, 1e-7);
    // Near x = 1 doubles are spaced 1.1e-16 apart, so (1 - x)^-0.7 written in x loses
    // the mass below that spacing (about 5e-5). A milder exponent loses about 1e-11.
    EXPECT_NEAR(quad::integrate([](double x) { return std::pow(1.0 - x, -0.3); }, 0.0, 1.0), 1.0 / 0.7, 1e-8);
}

TEST(Quadrature, MatchesBetaFunction) {
    for (auto [p, q] : {std::pair{0.7, 2.3}, std::pair{2.5, 1.4}, std::pair{1.0, 1.0}, std::pair{3.2, 4.1}}) {
        const double v =
            quad::integrate([=](double x) { return std::pow(x, p - 1.0) * std::pow(1.0 - x, q - 1.0); }, 0.0, 1.0);
        EXPECT_NEAR(v / std::beta(p, q), 1.0, 1e-8) << p << ", " << q;
    }
}

TEST(Quadrature, NonIntegrableThrows) {
    EXPECT_THROW(quad::integrate([](double x) { return 1.0 / x; }, 0.0, 1.0), IntegrationError);
}
