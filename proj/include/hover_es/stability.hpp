#pragma once

// Stability of the averaged closed loop. The ES loop is written in control-affine
// form xdot = Z(x) + G(x) a Omega cos(Omega t); averaging over the fast phase gives
//   xbar_dot = Z + (a^2 / 4) [G, [G, Z]]
// on the smoothed dynamics. The reduced coordinates (w, phidot, tau_hat) are then
// linearized about an equilibrium and the 3x3 spectrum decides stability.
//
// Lie brackets follow [Y, Z] = (dZ/dx) Y - (dY/dx) Z.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hover_es/dual.hpp"
#include "hover_es/eigenvalues.hpp"
#include "hover_es/esc.hpp"

namespace hover_es {

/// Where the modulation amplitude enters the averaged correction.
///   Squared: (a^2 / 4) [G, [G, Z]], G the unit-amplitude control direction.
///   Literal: (a^2 / 4) [Y, [Y, Z]] with Y = a G, i.e. (a^4 / 4) [G, [G, Z]].
enum class APlacement { Squared, Literal };

inline constexpr std::string_view to_string(APlacement p) { return p == APlacement::Squared ? "squared" : "literal"; }

inline APlacement parse_a_placement(std::string_view s) {
    if (s == "squared") return APlacement::Squared;
    if (s == "literal") return APlacement::Literal;
    throw ConfigError("unknown a placement '" + std::string(s) + "' (expected squared | literal)");
}

// ---------------------------------------------------------------------------
// Finite-difference Lie bracket for arbitrary fields

template <std::size_t N>
using VecN = std::array<double, N>;

template <std::size_t N>
using MatN = std::array<std::array<double, N>, N>;

/// Central-difference Jacobian, step h_j = max(1e-6 |x_j|, floor_j).
template <std::size_t N, class F>
MatN<N> fd_jacobian(const F& f, const VecN<N>& x, const VecN<N>& step_floor) {
    MatN<N> jac{};
    for (std::size_t j = 0; j < N; ++j) {
        const double h = std::max(1e-6 * std::abs(x[j]), step_floor[j]);
        VecN<N> xp = x;
        VecN<N> xm = x;
        xp[j] += h;
        xm[j] -= h;
        const VecN<N> fp = f(xp);
        const VecN<N> fm = f(xm);
        const double span = xp[j] - xm[j];  // the step actually representable
        for (std::size_t i = 0; i < N; ++i) jac[i][j] = (fp[i] - fm[i]) / span;
    }
    return jac;
}

template <std::size_t N>
VecN<N> uniform_floor(double v) {
    VecN<N> out;
    out.fill(v);
    return out;
}

template <std::size_t N>
VecN<N> mat_vec(const MatN<N>& m, const VecN<N>& v) {
    VecN<N> out{};
    for (std::size_t i = 0; i < N; ++i) {
        for (std::size_t j = 0; j < N; ++j) out[i] += m[i][j] * v[j];
    }
    return out;
}

/// [f, g](x) = (dg/dx) f - (df/dx) g with central-difference Jacobians.
template <std::size_t N, class F, class G>
VecN<N> lie_bracket(const F& f, const G& g, const VecN<N>& x, const VecN<N>& step_floor = uniform_floor<N>(1e-9)) {
    const VecN<N> dg_f = mat_vec(fd_jacobian<N>(g, x, step_floor), f(x));
    const VecN<N> df_g = mat_vec(fd_jacobian<N>(f, x, step_floor), g(x));
    VecN<N> out;
    for (std::size_t i = 0; i < N; ++i) out[i] = dg_f[i] - df_g[i];
    return out;
}

// ---------------------------------------------------------------------------
// Forward-mode brackets, exact to rounding, used for the nested averaging term

namespace ad {

/// Directional derivative (df/dx) v via one dual-number evaluation. `f` must be
/// generic over the scalar type.
template <class T, std::size_t N, class F>
std::array<T, N> jvp(const F& f, const std::array<T, N>& x, const std::array<T, N>& v) {
    std::array<Dual<T>, N> xd;
    for (std::size_t j = 0; j < N; ++j) xd[j] = Dual<T>(x[j], v[j]);
    const auto y = f(xd);
    std::array<T, N> out;
    for (std::size_t i = 0; i < N; ++i) out[i] = y[i].eps;
    return out;
}

template <class T, std::size_t N, class F, class G>
std::array<T, N> bracket(const F& f, const G& g, const std::array<T, N>& x) {
    const auto dg_f = jvp(g, x, f(x));
    const auto df_g = jvp(f, x, g(x));
    std::array<T, N> out;
    for (std::size_t i = 0; i < N; ++i) out[i] = dg_f[i] - df_g[i];
    return out;
}

}  // namespace ad

/// [G, [G, Z]](x) on the smoothed system, by nested forward-mode differentiation.
inline Vec5 double_bracket(const Vec5& x, const EscConfig& cfg, const ModelCoefficients& k) {
    const SmoothAbs abs_fn{cfg.n_smooth};
    const auto z_field = [&](const auto& s) { return drift_field(s, k, abs_fn); };
    const auto g_field = [&](const auto& s) { return control_field(s, cfg, k, abs_fn); };
    const auto gz = [&](const auto& s) { return ad::bracket(g_field, z_field, s); };
    return ad::bracket(g_field, gz, x);
}

inline double correction_coefficient(const EscConfig& cfg, APlacement placement) {
    const double a2 = cfg.a * cfg.a;
    return placement == APlacement::Squared ? a2 / 4.0 : a2 * a2 / 4.0;
}

/// Averaged field Z + c [G, [G, Z]] of the smoothed closed loop.
inline Vec5 averaged_field(const Vec5& x, const EscConfig& cfg, const ModelCoefficients& k,
                          APlacement placement = APlacement::Squared) {
    const SmoothAbs abs_fn{cfg.n_smooth};
    Vec5 out = drift_field(x, k, abs_fn);
    const double c = correction_coefficient(cfg, placement);
    if (c == 0.0) return out;
    const Vec5 corr = double_bracket(x, cfg, k);
    for (std::size_t i = 0; i < 5; ++i) out[i] += c * corr[i];
    return out;
}

// ---------------------------------------------------------------------------
// Reduced system (w, phidot, tau_hat) with z = phi = 0

using Vec3 = std::array<double, 3>;

inline Vec5 embed_reduced(const Vec3& r) { return {0.0, 0.0, r[0], r[1], r[2]}; }

inline Vec3 reduced_field(const Vec3& r, const EscConfig& cfg, const ModelCoefficients& k,
                          APlacement placement = APlacement::Squared) {
    const Vec5 f = averaged_field(embed_reduced(r), cfg, k, placement);
    return {f[idx::w], f[idx::phidot], f[idx::tau_hat]};
}

/// Characteristic magnitudes for the reduced state and for each row of the field.
struct ReducedScales {
    Vec3 state;
    Vec3 residual;
};

inline ReducedScales reduced_scales(const EscConfig& cfg, const ModelCoefficients& k) {
    const double g = k.gravity;
    const double rate = std::sqrt(g / k.kL);                  // phidot that alone balances gravity
    const double torque = k.kd2 * k.inertia_flap * g / k.kL;  // torque sustaining that rate
    const double drive = cfg.a * cfg.omega;                   // modulation torque amplitude
    const double demod = cfg.tauhat_law == TauHatLaw::Eq12 ? 1.0 / k.inertia_flap : 1.0;
    ReducedScales s;
    s.state = {1.0, rate, std::max(torque, drive)};
    s.residual = {g, std::max(torque, drive) / k.inertia_flap, std::abs(cfg.K) * drive * demod};
    if (!(s.residual[2] > 0.0)) s.residual[2] = 1.0;
    return s;
}

struct EquilibriumOptions {
    std::optional<Vec3> guess;  // default: the origin
    bool seed_grid = true;
    int max_iterations = 200;
    double tolerance = 1e-10;  // on the scaled max-norm residual
    APlacement placement = APlacement::Squared;
};

struct Equilibrium {
    Vec3 state{};
    Vec3 seed{};
    double residual_norm = 0.0;  // max-norm of the reduced field, SI
    double scaled_residual = 0.0;
    int iterations = 0;
};

namespace stab_detail {

inline double max_abs_scaled(const Vec3& f, const Vec3& scale) {
    double m = 0.0;
    for (std::size_t i = 0; i < 3; ++i) m = std::max(m, std::abs(f[i] / scale[i]));
    return m;
}

inline double sum_sq_scaled(const Vec3& f, const Vec3& scale) {
    double s = 0.0;
    for (std::size_t i = 0; i < 3; ++i) s += (f[i] / scale[i]) * (f[i] / scale[i]);
    return s;
}

/// Solves m x = b by Gaussian elimination with partial pivoting; false if singular.
inline bool solve3(Mat3 m, Vec3 b, Vec3& x) {
    for (int c = 0; c < 3; ++c) {
        int p = c;
        for (int r = c + 1; r < 3; ++r) {
            if (std::abs(m[r][c]) > std::abs(m[p][c])) p = r;
        }
        if (m[p][c] == 0.0) return false;
        std::swap(m[p], m[c]);
        std::swap(b[p], b[c]);
        for (int r = c + 1; r < 3; ++r) {
            const double f = m[r][c] / m[c][c];
            for (int j = c; j < 3; ++j) m[r][j] -= f * m[c][j];
            b[r] -= f * b[c];
        }
    }
    for (int r = 2; r >= 0; --r) {
        double s = b[r];
        for (int j = r + 1; j < 3; ++j) s -= m[r][j] * x[j];
        x[r] = s / m[r][r];
    }
    return std::isfinite(x[0]) && std::isfinite(x[1]) && std::isfinite(x[2]);
}

struct SolveResult {
    bool converged = false;
    Vec3 state{};
    double scaled = std::numeric_limits<double>::infinity();
    int iterations = 0;
};

/// Levenberg-damped Newton in scaled variables u = r / state_scale on the scaled
/// residual f / residual_scale. Handles the rank-deficient case where a row of the
/// field vanishes identically.
template <class Field>
SolveResult damped_newton(const Field& field, Vec3 r, const ReducedScales& sc, int max_iter, double tol) {
    SolveResult out;
    auto scaled_field = [&](const Vec3& u) {
        const Vec3 f = field(Vec3{u[0] * sc.state[0], u[1] * sc.state[1], u[2] * sc.state[2]});
        return Vec3{f[0] / sc.residual[0], f[1] / sc.residual[1], f[2] / sc.residual[2]};
    };
    Vec3 u{r[0] / sc.state[0], r[1] / sc.state[1], r[2] / sc.state[2]};
    Vec3 f = scaled_field(u);
    double cost = f[0] * f[0] + f[1] * f[1] + f[2] * f[2];
    double mu = 1e-6;
    const Vec3 unit{1.0, 1.0, 1.0};
    for (int it = 0; it < max_iter; ++it) {
        out.iterations = it;
        if (!std::isfinite(cost)) break;
        if (max_abs_scaled(f, unit) < tol) {
            out.converged = true;
            break;
        }
        const Mat3 jac = fd_jacobian<3>(scaled_field, u, uniform_floor<3>(1e-7));
        Mat3 jtj{};
        Vec3 jtf{};
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                for (int q = 0; q < 3; ++q) jtj[i][j] += jac[q][i] * jac[q][j];
            }
            for (int q = 0; q < 3; ++q) jtf[i] -= jac[q][i] * f[q];
        }
        bool improved = false;
        while (mu < 1e12) {
            Mat3 m = jtj;
            for (int i = 0; i < 3; ++i) m[i][i] += mu;
            Vec3 step{};
            if (solve3(m, jtf, step)) {
                const Vec3 trial{u[0] + step[0], u[1] + step[1], u[2] + step[2]};
                const Vec3 ft = scaled_field(trial);
                const double ct = ft[0] * ft[0] + ft[1] * ft[1] + ft[2] * ft[2];
                if (std::isfinite(ct) && ct < cost) {
                    u = trial;
                    f = ft;
                    cost = ct;
                    mu = std::max(mu / 10.0, 1e-15);
                    improved = true;
                    break;
                }
            }
            mu *= 10.0;
        }
        if (!improved) break;  // stagnated: no descent direction
    }
    out.state = {u[0] * sc.state[0], u[1] * sc.state[1], u[2] * sc.state[2]};
    out.scaled = std::sqrt(cost) > 0.0 ? max_abs_scaled(f, unit) : 0.0;
    if (!out.converged && out.scaled < tol) out.converged = true;
    return out;
}

}  // namespace stab_detail

/// Seeds tried after the primary guess, nearest-to-rest first.
inline std::vector<Vec3> equilibrium_seeds(const EscConfig& cfg, const ModelCoefficients& k) {
    const double rate = std::sqrt(k.gravity / k.kL);
    const double torque = k.kd2 * k.inertia_flap * k.gravity / k.kL;
    std::vector<Vec3> seeds;
    for (double rs : {0.0, 0.01, -0.01, 0.1, -0.1, 1.0, -1.0}) {
        for (double ts : {0.0, 1.0, -1.0}) {
            if (rs == 0.0 && ts == 0.0) continue;
            seeds.push_back({0.0, rs * rate, ts * std::copysign(torque, rs == 0.0 ? 1.0 : rs)});
        }
    }
    (void)cfg;
    return seeds;
}

/// Equilibrium of the reduced averaged field. The primary guess is tried first;
/// if it fails the seed grid is scanned and the converged point with the smallest
/// |phidot*| (then |w*|) is returned.
inline Equilibrium find_equilibrium(const EscConfig& cfg, const ModelCoefficients& k,
                                    const EquilibriumOptions& opt = {}) {
    const Vec3 guess = opt.guess.value_or(Vec3{0.0, 0.0, 0.0});
    for (double v : guess) {
        if (!std::isfinite(v)) throw ConfigError("equilibrium guess must be finite");
    }
    const ReducedScales sc = reduced_scales(cfg, k);
    const auto field = [&](const Vec3& r) { return reduced_field(r, cfg, k, opt.placement); };

    auto finish = [&](const stab_detail::SolveResult& s, const Vec3& seed) {
        Equilibrium e;
        e.state = s.state;
        e.seed = seed;
        e.scaled_residual = s.scaled;
        e.iterations = s.iterations;
        const Vec3 f = field(s.state);
        e.residual_norm = std::max({std::abs(f[0]), std::abs(f[1]), std::abs(f[2])});
        return e;
    };

    double best = std::numeric_limits<double>::infinity();
    const auto primary = stab_detail::damped_newton(field, guess, sc, opt.max_iterations, opt.tolerance);
    if (primary.converged) return finish(primary, guess);
    best = std::min(best, primary.scaled);

    std::optional<Equilibrium> chosen;
    if (opt.seed_grid) {
        for (const Vec3& seed : equilibrium_seeds(cfg, k)) {
            const auto s = stab_detail::damped_newton(field, seed, sc, opt.max_iterations, opt.tolerance);
            if (!s.converged) {
                best = std::min(best, s.scaled);
                continue;
            }
            Equilibrium e = finish(s, seed);
            const bool better = !chosen || std::abs(e.state[1]) < std::abs(chosen->state[1]) ||
                                (std::abs(e.state[1]) == std::abs(chosen->state[1]) &&
                                 std::abs(e.state[0]) < std::abs(chosen->state[0]));
            if (better) chosen = e;
        }
    }
    if (chosen) return *chosen;
    std::ostringstream msg;
    msg << "no equilibrium of the averaged system found (best scaled residual " << best << ")";
    throw NoEquilibriumFound(msg.str(), best);
}

/// Central-difference Jacobian of the reduced averaged field, steps scaled to each
/// coordinate's characteristic size.
inline Mat3 reduced_jacobian(const Vec3& r, const EscConfig& cfg, const ModelCoefficients& k,
                             APlacement placement = APlacement::Squared) {
    const ReducedScales sc = reduced_scales(cfg, k);
    const Vec3 floor{1e-6 * sc.state[0], 1e-6 * sc.state[1], 1e-6 * sc.state[2]};
    return fd_jacobian<3>([&](const Vec3& x) { return reduced_field(x, cfg, k, placement); }, r, floor);
}

// ---------------------------------------------------------------------------
// Report

struct StabilityReport {
    std::string species;
    Objective objective = Objective::AltitudeSquared;
    Equilibrium equilibrium;
    Mat3 jacobian{};
    std::array<Complex, 3> eigenvalues{};
    std::array<Complex, 3> companion_eigenvalues{};
    double companion_deviation = 0.0;   // max |cubic - companion| / max(1, |lambda|)
    double charpoly_residual = 0.0;     // max |p(lambda)| / (|lambda|^3 + |c0||lambda|^2 + |c1||lambda| + |c2|)
    double condition = 0.0;
    bool ill_conditioned = false;
    bool stable = false;
    int n_smooth = 50;
    APlacement placement = APlacement::Squared;
    TauHatLaw tauhat_law = TauHatLaw::Eq11;
};

inline StabilityReport analyze(const std::string& species, const EscConfig& cfg, const ModelCoefficients& k,
                               const EquilibriumOptions& opt = {}) {
    cfg.validate();
    StabilityReport rep;
    rep.species = species;
    rep.objective = cfg.objective;
    rep.n_smooth = cfg.n_smooth.value();
    rep.placement = opt.placement;
    rep.tauhat_law = cfg.tauhat_law;
    rep.equilibrium = find_equilibrium(cfg, k, opt);
    rep.jacobian = reduced_jacobian(rep.equilibrium.state, cfg, k, opt.placement);

    const auto c = characteristic_polynomial(rep.jacobian);
    rep.eigenvalues = cubic_roots(c);
    rep.companion_eigenvalues = companion_roots(c);
    for (std::size_t i = 0; i < 3; ++i) {
        const Complex l = rep.eigenvalues[i];
        const double ml = std::abs(l);
        rep.companion_deviation =
            std::max(rep.companion_deviation, std::abs(l - rep.companion_eigenvalues[i]) / std::max(1.0, ml));
        const double denom = ml * ml * ml + std::abs(c[0]) * ml * ml + std::abs(c[1]) * ml + std::abs(c[2]);
        if (denom > 0.0) rep.charpoly_residual = std::max(rep.charpoly_residual, std::abs(eval_cubic(c, l)) / denom);
    }
    rep.condition = condition_estimate(rep.jacobian);
    rep.ill_conditioned = !(rep.condition <= 1e12);
    rep.stable = std::all_of(rep.eigenvalues.begin(), rep.eigenvalues.end(),
                             [](const Complex& l) { return l.real() < 0.0; });
    return rep;
}

}  // namespace hover_es
