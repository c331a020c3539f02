#pragma once

// Published comparison targets for the six bundled species: ES flapping
// amplitudes and averaged-system eigenvalues for both objectives.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string_view>

#include "hover_es/esc.hpp"

namespace hover_es::reference {

struct Amplitude {
    std::string_view species;
    double observed_rad;  // natural observation
    double es_rad;        // ES simulation
};

inline constexpr std::array<Amplitude, 6> kAmplitudes{{
    {"hawkmoth", 1.05, 1.07},
    {"cranefly", 1.07, 1.03},
    {"bumblebee", 1.01, 0.98},
    {"dragonfly", 0.95, 0.91},
    {"hoverfly", 0.78, 0.75},
    {"hummingbird", 1.22, 1.19},
}};

struct Eigenvalues {
    std::string_view species;
    std::array<double, 3> altitude;
    std::array<double, 3> lift_balance;
};

inline constexpr std::array<Eigenvalues, 6> kEigenvalues{{
    {"hawkmoth", {-9.98, -5.54e05, -1.95e04}, {-143.25, -1.86e04, -5.25e05}},
    {"cranefly", {-7.34, -8.91e04, -1.44e06}, {-1.18e03, -1.04e05, -3.24e06}},
    {"bumblebee", {-1.55, -1.05e05, -1.23e07}, {-1.82e03, -1.69e05, -9.78e06}},
    {"dragonfly", {-1.69, -1.38e05, -3.99e06}, {-1.55e03, -9.17e04, -2.12e07}},
    {"hoverfly", {-1.05, -1.21e05, -7.80e06}, {-3.87e03, -1.20e05, -1.55e07}},
    {"hummingbird", {-2.36, -1.73e05, -2.90e06}, {-1.60e03, -2.49e04, -4.16e06}},
}};

inline std::optional<Amplitude> amplitude(std::string_view species) {
    for (const auto& a : kAmplitudes) {
        if (a.species == species) return a;
    }
    return std::nullopt;
}

/// Published eigenvalues sorted by modulus, or nullopt for an unknown species.
inline std::optional<std::array<double, 3>> eigenvalues(std::string_view species, Objective o) {
    for (const auto& e : kEigenvalues) {
        if (e.species != species) continue;
        auto v = o == Objective::AltitudeSquared ? e.altitude : e.lift_balance;
        std::sort(v.begin(), v.end(), [](double p, double q) { return std::abs(p) < std::abs(q); });
        return v;
    }
    return std::nullopt;
}

}  // namespace hover_es::reference
