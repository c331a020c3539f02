#pragma once

// Classical fixed-step 4th-order Runge-Kutta. Step times are computed as t0 + i*dt
// (never accumulated), so a given input reproduces the same trajectory bit for bit.

#include <array>
#include <cmath>
#include <cstddef>
#include <iostream>
#include <sstream>
#include <vector>

#include "hover_es/error.hpp"

namespace hover_es {

template <std::size_t N>
struct Trajectory {
    double t0 = 0.0;
    double dt = 0.0;
    std::vector<std::array<double, N>> samples;

    [[nodiscard]] std::size_t size() const { return samples.size(); }
    [[nodiscard]] double time(std::size_t i) const { return t0 + static_cast<double>(i) * dt; }
    [[nodiscard]] double t_end() const { return samples.empty() ? t0 : time(samples.size() - 1); }
};

struct IntegrateOptions {
    double max_dt = 0.0;  // 0 disables the step-size ceiling
    bool allow_coarse = false;
};

template <std::size_t N, class Rhs>
std::array<double, N> rk4_step(Rhs& rhs, double t, const std::array<double, N>& x, double dt) {
    std::array<double, N> tmp{};
    const auto k1 = rhs(t, x);
    for (std::size_t j = 0; j < N; ++j) tmp[j] = x[j] + 0.5 * dt * k1[j];
    const auto k2 = rhs(t + 0.5 * dt, tmp);
    for (std::size_t j = 0; j < N; ++j) tmp[j] = x[j] + 0.5 * dt * k2[j];
    const auto k3 = rhs(t + 0.5 * dt, tmp);
    for (std::size_t j = 0; j < N; ++j) tmp[j] = x[j] + dt * k3[j];
    const auto k4 = rhs(t + dt, tmp);
    std::array<double, N> out{};
    for (std::size_t j = 0; j < N; ++j) out[j] = x[j] + dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
    return out;
}

inline std::size_t step_count(double t0, double t_end, double dt) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("integrate: dt must be finite and > 0");
    if (!(t_end > t0)) throw ConfigError("integrate: t_end must exceed the start time");
    const auto n = static_cast<std::size_t>(std::llround((t_end - t0) / dt));
    return n == 0 ? 1 : n;
}

inline void check_step_ceiling(double dt, const IntegrateOptions& opt) {
    if (opt.max_dt <= 0.0 || dt <= opt.max_dt) return;
    std::ostringstream msg;
    msg << "integrate: dt = " << dt << " s exceeds the ceiling " << opt.max_dt << " s";
    if (!opt.allow_coarse) throw ConfigError(msg.str());
    std::cerr << "warning: " << msg.str() << "; continuing as requested\n";
}

/// Integrates into `out`, which keeps every finite sample even when a DivergenceError is thrown.
template <std::size_t N, class Rhs>
void integrate_into(Trajectory<N>& out, Rhs&& rhs, const std::array<double, N>& x0, double t0, double t_end,
                    double dt, const IntegrateOptions& opt = {}) {
    check_step_ceiling(dt, opt);
    const std::size_t steps = step_count(t0, t_end, dt);
    out.t0 = t0;
    out.dt = dt;
    out.samples.clear();
    out.samples.reserve(steps + 1);
    out.samples.push_back(x0);
    std::array<double, N> x = x0;
    for (std::size_t i = 0; i < steps; ++i) {
        const double t = t0 + static_cast<double>(i) * dt;
        auto next = rk4_step<N>(rhs, t, x, dt);
        for (double v : next) {
            if (!std::isfinite(v)) {
                std::ostringstream msg;
                msg << "integration diverged after t = " << t << " s (non-finite state at step " << i + 1 << ")";
                throw DivergenceError(msg.str(), t, std::vector<double>(x.begin(), x.end()));
            }
        }
        x = next;
        out.samples.push_back(x);
    }
}

template <std::size_t N, class Rhs>
Trajectory<N> integrate(Rhs&& rhs, const std::array<double, N>& x0, double t_end, double dt,
                        const IntegrateOptions& opt = {}, double t0 = 0.0) {
    Trajectory<N> out;
    integrate_into(out, rhs, x0, t0, t_end, dt, opt);
    return out;
}

}  // namespace hover_es
