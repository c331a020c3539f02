#pragma once

// Open-loop 2-DOF flapping plant: altitude z, flapping angle phi, vertical
// velocity w (positive along gravity), flapping rate phidot, torque input tau.

#include <array>
#include <cassert>
#include <cmath>
#include <numbers>

#include "hover_es/dual.hpp"
#include "hover_es/species.hpp"

namespace hover_es {

template <class T = double>
struct BasicPlantState {
    T z{};
    T phi{};
    T w{};
    T phidot{};
};
using PlantState = BasicPlantState<double>;

/// Sharpness n of the arctan surrogate for |x|.
class SmoothingOrder {
public:
    constexpr SmoothingOrder() = default;
    constexpr explicit SmoothingOrder(int n) : n_(n) {
        if (n < 1) throw DomainError("smoothing order must be >= 1");
    }
    [[nodiscard]] constexpr int value() const { return n_; }

private:
    int n_ = 50;
};

/// |v| approximated as v (2/pi) atan(n v).
template <class T>
T abs_smooth(const T& v, SmoothingOrder n) {
    using std::atan;
    return v * (2.0 / std::numbers::pi) * atan(v * static_cast<double>(n.value()));
}

struct ExactAbs {
    template <class T>
    T operator()(const T& v) const {
        using std::abs;
        return abs(v);
    }
};

struct SmoothAbs {
    SmoothingOrder n;
    template <class T>
    T operator()(const T& v) const {
        return abs_smooth(v, n);
    }
};

/// Plant vector field with a pluggable absolute-value model.
template <class T, class Abs>
BasicPlantState<T> plant_rhs_with(const BasicPlantState<T>& x, const T& tau, const ModelCoefficients& k, Abs abs_fn) {
    const T ap = abs_fn(x.phidot);
    BasicPlantState<T> dx;
    dx.z = x.w;
    dx.phi = x.phidot;
    dx.w = k.gravity - k.kd1 * ap * x.w - k.kL * x.phidot * x.phidot;
    dx.phidot = -k.kd2 * ap * x.phidot - k.kd3 * x.w * x.phidot + tau / k.inertia_flap;
    return dx;
}

inline PlantState plant_rhs(const PlantState& x, double tau, const ModelCoefficients& k) {
    assert(std::isfinite(x.z) && std::isfinite(x.phi) && std::isfinite(x.w) && std::isfinite(x.phidot));
    return plant_rhs_with(x, tau, k, ExactAbs{});
}

inline PlantState plant_rhs_smooth(const PlantState& x, double tau, const ModelCoefficients& k,
                                   SmoothingOrder n = SmoothingOrder{}) {
    return plant_rhs_with(x, tau, k, SmoothAbs{n});
}

}  // namespace hover_es
