#pragma once

// Extremum-seeking loop around the flapping plant. The flapping torque is
//   tau = tau_hat + a * Omega * cos(Omega t),
// the measured objective J is demodulated by the same signal and integrated
// into tau_hat. No high- or low-pass filters are applied anywhere.

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <string_view>

#include "hover_es/dynamics.hpp"

namespace hover_es {

enum class Objective { AltitudeSquared, LiftBalance };
enum class LiftModel { WingOnly, BodyPlusWing };

/// Integrator law for tau_hat.
///   Eq11: d tau_hat/dt = K J a Omega cos(Omega t)
///   Eq12: d tau_hat/dt = K J (a / I_F) Omega cos(Omega t)
enum class TauHatLaw { Eq11, Eq12 };

inline constexpr std::string_view to_string(Objective o) {
    return o == Objective::AltitudeSquared ? "altitude" : "lift_balance";
}
inline constexpr std::string_view to_string(LiftModel m) {
    return m == LiftModel::WingOnly ? "wing_only" : "body_plus_wing";
}
inline constexpr std::string_view to_string(TauHatLaw l) { return l == TauHatLaw::Eq11 ? "eq11" : "eq12"; }

inline Objective parse_objective(std::string_view s) {
    if (s == "altitude" || s == "z2" || s == "altitude_squared") return Objective::AltitudeSquared;
    if (s == "lift_balance" || s == "lift" || s == "lb") return Objective::LiftBalance;
    throw ConfigError("unknown objective '" + std::string(s) + "' (expected altitude | lift_balance)");
}
inline LiftModel parse_lift_model(std::string_view s) {
    if (s == "wing_only") return LiftModel::WingOnly;
    if (s == "body_plus_wing") return LiftModel::BodyPlusWing;
    throw ConfigError("unknown lift model '" + std::string(s) + "' (expected wing_only | body_plus_wing)");
}
inline TauHatLaw parse_tauhat_law(std::string_view s) {
    if (s == "eq11") return TauHatLaw::Eq11;
    if (s == "eq12") return TauHatLaw::Eq12;
    throw ConfigError("unknown tau_hat law '" + std::string(s) + "' (expected eq11 | eq12)");
}

struct EscConfig {
    double a = 0.0;      // modulation amplitude, N m s
    double K = 0.0;      // integrator gain
    double omega = 0.0;  // rad/s
    Objective objective = Objective::AltitudeSquared;
    LiftModel lift_model = LiftModel::WingOnly;
    SmoothingOrder n_smooth{};
    TauHatLaw tauhat_law = TauHatLaw::Eq11;

    void validate() const {
        if (!(std::isfinite(a) && a > 0.0)) throw ConfigError("esc: a must be finite and > 0");
        if (!(std::isfinite(omega) && omega > 0.0)) throw ConfigError("esc: Omega must be finite and > 0");
        if (!std::isfinite(K)) throw ConfigError("esc: K must be finite");
    }
    [[nodiscard]] double period() const { return 2.0 * std::numbers::pi / omega; }
};

template <class T>
using State5 = std::array<T, 5>;
using Vec5 = State5<double>;

namespace idx {
inline constexpr std::size_t z = 0;
inline constexpr std::size_t phi = 1;
inline constexpr std::size_t w = 2;
inline constexpr std::size_t phidot = 3;
inline constexpr std::size_t tau_hat = 4;
}  // namespace idx

struct EsState {
    PlantState plant;
    double tau_hat = 0.0;

    [[nodiscard]] Vec5 to_array() const { return {plant.z, plant.phi, plant.w, plant.phidot, tau_hat}; }
    static EsState from_array(const Vec5& v) { return {{v[0], v[1], v[2], v[3]}, v[4]}; }
};

/// Lift in N. WingOnly: m kL phidot^2. BodyPlusWing: m (kd1 |phidot| w + kL phidot^2),
/// scaled by m so both selectors are forces.
template <class T, class Abs>
T lift_with(const State5<T>& x, LiftModel model, const ModelCoefficients& k, Abs abs_fn) {
    const T& pd = x[idx::phidot];
    T per_mass = k.kL * pd * pd;
    if (model == LiftModel::BodyPlusWing) per_mass = per_mass + k.kd1 * abs_fn(pd) * x[idx::w];
    return k.mass_kg * per_mass;
}

template <class T, class Abs>
T objective_with(const State5<T>& x, const EscConfig& cfg, const ModelCoefficients& k, Abs abs_fn) {
    if (cfg.objective == Objective::AltitudeSquared) return x[idx::z] * x[idx::z];
    const T e = lift_with(x, cfg.lift_model, k, abs_fn) / (k.mass_kg * k.gravity) - 1.0;
    return e * e;
}

inline double lift_value(const EsState& s, const EscConfig& cfg, const ModelCoefficients& k) {
    return lift_with(s.to_array(), cfg.lift_model, k, ExactAbs{});
}

inline double objective_value(const EsState& s, const EscConfig& cfg, const ModelCoefficients& k) {
    return objective_with(s.to_array(), cfg, k, ExactAbs{});
}

inline double modulation(double t, const EscConfig& cfg) { return cfg.a * cfg.omega * std::cos(cfg.omega * t); }

/// Drift Z(x): the closed loop with the modulation switched off.
template <class T, class Abs>
State5<T> drift_field(const State5<T>& x, const ModelCoefficients& k, Abs abs_fn) {
    const BasicPlantState<T> p{x[0], x[1], x[2], x[3]};
    const auto dp = plant_rhs_with(p, x[idx::tau_hat], k, abs_fn);
    return {dp.z, dp.phi, dp.w, dp.phidot, T(0.0)};
}

/// Control direction G(x) multiplying the scalar input a Omega cos(Omega t).
template <class T, class Abs>
State5<T> control_field(const State5<T>& x, const EscConfig& cfg, const ModelCoefficients& k, Abs abs_fn) {
    const T J = objective_with(x, cfg, k, abs_fn);
    const double demod_scale = cfg.tauhat_law == TauHatLaw::Eq12 ? 1.0 / k.inertia_flap : 1.0;
    return {T(0.0), T(0.0), T(0.0), T(1.0 / k.inertia_flap), J * (cfg.K * demod_scale)};
}

struct AffineParts {
    Vec5 drift;
    Vec5 direction;
};

inline AffineParts affine_decomposition(const EsState& s, const EscConfig& cfg, const ModelCoefficients& k,
                                        bool smoothed) {
    const Vec5 x = s.to_array();
    if (smoothed) {
        const SmoothAbs abs_fn{cfg.n_smooth};
        return {drift_field(x, k, abs_fn), control_field(x, cfg, k, abs_fn)};
    }
    return {drift_field(x, k, ExactAbs{}), control_field(x, cfg, k, ExactAbs{})};
}

namespace detail {

template <class Abs>
Vec5 closed_loop_impl(double t, const Vec5& x, const EscConfig& cfg, const ModelCoefficients& k, Abs abs_fn) {
    const double c = std::cos(cfg.omega * t);
    const double tau = x[idx::tau_hat] + cfg.a * cfg.omega * c;
    const auto dp = plant_rhs_with(PlantState{x[0], x[1], x[2], x[3]}, tau, k, abs_fn);
    const double J = objective_with(x, cfg, k, abs_fn);
    const double gain = cfg.tauhat_law == TauHatLaw::Eq12 ? cfg.a / k.inertia_flap : cfg.a;
    return {dp.z, dp.phi, dp.w, dp.phidot, cfg.K * J * gain * cfg.omega * c};
}

}  // namespace detail

inline Vec5 closed_loop_rhs(double t, const Vec5& x, const EscConfig& cfg, const ModelCoefficients& k,
                            bool smoothed) {
    if (smoothed) return detail::closed_loop_impl(t, x, cfg, k, SmoothAbs{cfg.n_smooth});
    return detail::closed_loop_impl(t, x, cfg, k, ExactAbs{});
}

inline EsState closed_loop_rhs(double t, const EsState& s, const EscConfig& cfg, const ModelCoefficients& k,
                               bool smoothed) {
    return EsState::from_array(closed_loop_rhs(t, s.to_array(), cfg, k, smoothed));
}

}  // namespace hover_es
