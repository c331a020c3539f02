#pragma once

// Hover experiments on the closed-loop system: disturbance runs, open-loop
// comparisons, hover metrics over a trailing window, flapping amplitude, and
// parameter sweeps.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "hover_es/esc.hpp"
#include "hover_es/integrate.hpp"
#include "hover_es/species_io.hpp"

namespace hover_es {

using EsTrajectory = Trajectory<5>;

struct HoverOptions {
    double w0 = 0.2;                 // initial vertical velocity, m/s
    double duration_periods = 200.0;
    double steps_per_period = 200.0;  // dt = T / steps_per_period unless dt is set
    double dt = 0.0;                 // explicit step in s; 0 selects T / steps_per_period
    double max_steps_per_period = 100.0;  // ceiling: dt <= T / this
    bool allow_coarse = false;
    double tail_periods = 20.0;
    double w_tol = 0.01;  // m/s
    double z_tol = 0.01;  // m/s
    bool smoothed = false;

    void validate() const {
        if (!(std::isfinite(duration_periods) && duration_periods > 0.0)) {
            throw ConfigError("duration must be finite and > 0");
        }
        if (!(std::isfinite(steps_per_period) && steps_per_period >= 1.0)) {
            throw ConfigError("steps per period must be >= 1");
        }
        if (!(dt >= 0.0) || !std::isfinite(dt)) {
            throw ConfigError("dt must be finite and > 0 (0 selects T / steps_per_period)");
        }
        if (!(std::isfinite(tail_periods) && tail_periods > 0.0)) throw ConfigError("tail window must be > 0");
        if (!std::isfinite(w0)) throw ConfigError("w0 must be finite");
    }

    [[nodiscard]] double step(double period) const { return dt > 0.0 ? dt : period / steps_per_period; }
};

struct HoverMetrics {
    double mean_w_tail = std::numeric_limits<double>::quiet_NaN();
    double z_drift_rate = std::numeric_limits<double>::quiet_NaN();
    double mean_lift_ratio = std::numeric_limits<double>::quiet_NaN();
    double phi_amplitude = std::numeric_limits<double>::quiet_NaN();  // NaN when too few cycles
    double tau_hat_tail_mean = std::numeric_limits<double>::quiet_NaN();
    double tau_hat_drift_rate = std::numeric_limits<double>::quiet_NaN();  // N m / s
    bool settled = false;
    bool diverged = false;
    double diverged_at = std::numeric_limits<double>::quiet_NaN();
    std::string note;

    [[nodiscard]] bool lift_balanced(double tol = 0.05) const { return std::abs(mean_lift_ratio - 1.0) <= tol; }
};

struct HoverRun {
    EsTrajectory trajectory;
    HoverMetrics metrics;
    EscConfig config;
    HoverOptions options;
};

namespace sim_detail {

struct LineFit {
    double intercept = 0.0;
    double slope = 0.0;
};

/// Least-squares line through (t0 + i dt, y_i).
inline LineFit fit_line(std::span<const double> y, double t0, double dt) {
    const auto n = static_cast<double>(y.size());
    if (y.size() < 2) return {y.empty() ? 0.0 : y[0], 0.0};
    // Centered abscissa keeps the normal equations well conditioned.
    const double mid = 0.5 * (n - 1.0);
    double sy = 0.0;
    for (double v : y) sy += v;
    const double mean = sy / n;
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double x = static_cast<double>(i) - mid;
        sxy += x * (y[i] - mean);
        sxx += x * x;
    }
    const double slope = sxy / sxx / dt;
    return {mean - slope * (t0 + mid * dt), slope};
}

inline std::vector<double> channel(const EsTrajectory& tr, std::size_t col, std::size_t first, std::size_t last) {
    std::vector<double> out;
    out.reserve(last - first);
    for (std::size_t i = first; i < last; ++i) out.push_back(tr.samples[i][col]);
    return out;
}

inline double mean(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? std::numeric_limits<double>::quiet_NaN() : s / static_cast<double>(v.size());
}

}  // namespace sim_detail

/// Flapping amplitude from uniformly sampled phi: successive extrema (refined by a
/// parabola through three samples), amplitude = mean of |peak - trough| / 2 over
/// consecutive extremum pairs. Needs at least 5 full cycles (10 extrema).
inline double amplitude_from_samples(std::span<const double> phi) {
    std::vector<double> extrema;
    std::vector<int> kind;  // +1 max, -1 min
    for (std::size_t i = 1; i + 1 < phi.size(); ++i) {
        const double a = phi[i - 1];
        const double b = phi[i];
        const double c = phi[i + 1];
        int k = 0;
        if (b > a && b >= c) k = 1;
        if (b < a && b <= c) k = -1;
        if (k == 0) continue;
        const double curv = a - 2.0 * b + c;
        double value = b;
        if (curv != 0.0) {
            const double off = 0.5 * (a - c) / curv;
            if (std::abs(off) <= 1.0) value = b - 0.25 * (a - c) * off;
        }
        if (!kind.empty() && kind.back() == k) {
            // Keep the more extreme of two same-type neighbours.
            if ((k > 0 && value > extrema.back()) || (k < 0 && value < extrema.back())) extrema.back() = value;
            continue;
        }
        extrema.push_back(value);
        kind.push_back(k);
    }
    if (extrema.size() < 10) {
        throw InsufficientData("flapping amplitude needs at least 5 full cycles; found " +
                               std::to_string(extrema.size()) + " extrema");
    }
    double sum = 0.0;
    for (std::size_t i = 1; i < extrema.size(); ++i) sum += std::abs(extrema[i] - extrema[i - 1]);
    return 0.5 * sum / static_cast<double>(extrema.size() - 1);
}

/// Amplitude over the trailing `tail_periods` periods of a trajectory.
inline double measure_phi_amplitude(const EsTrajectory& tr, double period, double tail_periods = 20.0) {
    if (tr.size() < 3) throw InsufficientData("trajectory too short for amplitude measurement");
    const auto window = static_cast<std::size_t>(std::llround(tail_periods * period / tr.dt));
    const std::size_t first = window + 1 >= tr.size() ? 0 : tr.size() - 1 - window;
    const auto phi = sim_detail::channel(tr, idx::phi, first, tr.size());
    return amplitude_from_samples(phi);
}

/// Hover metrics over the trailing window. The window covers an integer number of
/// steps equal to tail_periods periods, so periodic content averages out.
inline HoverMetrics compute_metrics(const EsTrajectory& tr, const EscConfig& cfg, const ModelCoefficients& k,
                                    const HoverOptions& opt) {
    using namespace sim_detail;
    HoverMetrics m;
    const double period = cfg.period();
    const auto window = static_cast<std::size_t>(std::llround(opt.tail_periods * period / tr.dt));
    if (tr.size() < window + 1 || window < 2) {
        m.note = "trajectory shorter than the trailing window";
        return m;
    }
    const std::size_t first = tr.size() - 1 - window;
    const std::size_t last = tr.size() - 1;  // [first, last): exactly `window` steps
    const double t_first = tr.time(first);

    const auto w = channel(tr, idx::w, first, last);
    const auto z = channel(tr, idx::z, first, last);
    const auto th = channel(tr, idx::tau_hat, first, last);
    m.mean_w_tail = mean(w);
    m.z_drift_rate = fit_line(z, t_first, tr.dt).slope;
    m.tau_hat_tail_mean = mean(th);
    m.tau_hat_drift_rate = fit_line(th, t_first, tr.dt).slope;

    const double weight = k.mass_kg * k.gravity;
    double lift = 0.0;
    for (std::size_t i = first; i < last; ++i) lift += lift_with(tr.samples[i], cfg.lift_model, k, ExactAbs{});
    m.mean_lift_ratio = lift / static_cast<double>(window) / weight;

    try {
        m.phi_amplitude = measure_phi_amplitude(tr, period, opt.tail_periods);
    } catch (const InsufficientData& e) {
        m.note = e.what();
    }
    m.settled = std::abs(m.mean_w_tail) < opt.w_tol && std::abs(m.z_drift_rate) < opt.z_tol;
    return m;
}

/// Closed-loop hover run from x0 = (0, 0, w0, 0, 0). A divergence does not throw:
/// the partial trajectory is returned with metrics.diverged set and settled false.
inline HoverRun run_hover(const ModelCoefficients& k, const EscConfig& cfg, const HoverOptions& opt = {}) {
    cfg.validate();
    opt.validate();
    HoverRun run;
    run.config = cfg;
    run.options = opt;
    const double period = cfg.period();
    const double dt = opt.step(period);
    IntegrateOptions io;
    io.max_dt = period / opt.max_steps_per_period;
    io.allow_coarse = opt.allow_coarse;
    const Vec5 x0{0.0, 0.0, opt.w0, 0.0, 0.0};
    auto rhs = [&](double t, const Vec5& x) { return closed_loop_rhs(t, x, cfg, k, opt.smoothed); };
    try {
        integrate_into(run.trajectory, rhs, x0, 0.0, opt.duration_periods * period, dt, io);
    } catch (const DivergenceError& e) {
        // Statistics over a window that blows up carry no information.
        run.metrics = HoverMetrics{};
        run.metrics.diverged = true;
        run.metrics.diverged_at = e.time();
        run.metrics.note = e.what();
        return run;
    }
    run.metrics = compute_metrics(run.trajectory, cfg, k, opt);
    return run;
}

/// The same experiment with the tau_hat integrator disabled (K = 0).
inline HoverRun run_open_loop(const ModelCoefficients& k, EscConfig cfg, const HoverOptions& opt = {}) {
    cfg.K = 0.0;
    return run_hover(k, cfg, opt);
}

// ---------------------------------------------------------------------------
// Sweeps

/// One named override axis. Supported names: a_scale, K_scale, omega_scale, w0.
struct SweepAxis {
    std::string name;
    std::vector<double> values;
};

struct SweepSpec {
    std::vector<SpeciesRecord> species;
    std::vector<Objective> objectives{Objective::AltitudeSquared, Objective::LiftBalance};
    std::vector<SweepAxis> axes;
    EscConfig base;  // lift model, smoothing, tau_hat law; a, K, omega come from the species
    HoverOptions options;
    unsigned jobs = 1;
};

struct SweepCell {
    std::string species;
    Objective objective = Objective::AltitudeSquared;
    std::vector<std::pair<std::string, double>> overrides;
    EscConfig config;
    HoverMetrics metrics;
    std::optional<std::string> error;
};

namespace sim_detail {

inline void apply_override(const std::string& name, double v, EscConfig& cfg, HoverOptions& opt) {
    if (name == "a_scale") {
        cfg.a *= v;
    } else if (name == "K_scale") {
        cfg.K *= v;
    } else if (name == "omega_scale") {
        cfg.omega *= v;
    } else if (name == "w0") {
        opt.w0 = v;
    } else {
        throw ConfigError("unknown sweep axis '" + name + "' (expected a_scale | K_scale | omega_scale | w0)");
    }
}

}  // namespace sim_detail

/// Runs every cell of species x objective x axes. Cells are ordered by grid
/// coordinates (species outermost, last axis innermost) whatever the thread count.
inline std::vector<SweepCell> sweep(const SweepSpec& spec) {
    if (spec.species.empty() || spec.objectives.empty()) throw ConfigError("sweep grid is empty");
    for (const auto& ax : spec.axes) {
        if (ax.values.empty()) throw ConfigError("sweep axis '" + ax.name + "' has no values");
    }
    std::vector<SweepCell> cells;
    std::vector<std::size_t> species_of;
    for (std::size_t s = 0; s < spec.species.size(); ++s) {
        for (Objective o : spec.objectives) {
            std::vector<std::vector<std::pair<std::string, double>>> combos{{}};
            for (const auto& ax : spec.axes) {
                std::vector<std::vector<std::pair<std::string, double>>> next;
                for (const auto& c : combos) {
                    for (double v : ax.values) {
                        auto e = c;
                        e.emplace_back(ax.name, v);
                        next.push_back(std::move(e));
                    }
                }
                combos = std::move(next);
            }
            for (auto& c : combos) {
                SweepCell cell;
                cell.species = spec.species[s].name();
                cell.objective = o;
                cell.overrides = std::move(c);
                cells.push_back(std::move(cell));
                species_of.push_back(s);
            }
        }
    }

    auto run_cell = [&](std::size_t i) {
        auto& cell = cells[i];
        const auto& rec = spec.species[species_of[i]];
        try {
            EscConfig cfg = rec.esc_config(cell.objective);
            cfg.lift_model = spec.base.lift_model;
            cfg.n_smooth = spec.base.n_smooth;
            cfg.tauhat_law = spec.base.tauhat_law;
            HoverOptions opt = spec.options;
            for (const auto& [name, v] : cell.overrides) sim_detail::apply_override(name, v, cfg, opt);
            cell.config = cfg;
            cell.metrics = run_hover(rec.coefficients, cfg, opt).metrics;
        } catch (const std::exception& e) {
            cell.error = e.what();
        }
    };

    const unsigned jobs = std::max(1U, std::min<unsigned>(spec.jobs, static_cast<unsigned>(cells.size())));
    if (jobs == 1) {
        for (std::size_t i = 0; i < cells.size(); ++i) run_cell(i);
        return cells;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (unsigned j = 0; j < jobs; ++j) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < cells.size(); i = next++) run_cell(i);
        });
    }
    for (auto& t : pool) t.join();
    return cells;
}

// ---------------------------------------------------------------------------
// Export

/// Shortest round-trip decimal text, independent of the global locale.
inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

/// CSV with header t,z,phi,w,phidot,tauhat,J,lift_ratio; every `stride`-th sample
/// plus the final one.
inline void write_trajectory_csv(std::ostream& os, const EsTrajectory& tr, const EscConfig& cfg,
                                 const ModelCoefficients& k, std::size_t stride = 1) {
    if (stride == 0) throw ConfigError("csv stride must be >= 1");
    os << "t,z,phi,w,phidot,tauhat,J,lift_ratio\n";
    const double weight = k.mass_kg * k.gravity;
    auto row = [&](std::size_t i) {
        const auto& x = tr.samples[i];
        os << format_number(tr.time(i));
        for (double v : x) os << ',' << format_number(v);
        os << ',' << format_number(objective_with(x, cfg, k, ExactAbs{})) << ','
           << format_number(lift_with(x, cfg.lift_model, k, ExactAbs{}) / weight) << '\n';
    };
    for (std::size_t i = 0; i < tr.size(); i += stride) row(i);
    if (tr.size() > 0 && (tr.size() - 1) % stride != 0) row(tr.size() - 1);
}

namespace sim_detail {

inline nlohmann::ordered_json finite_or_null(double v) {
    return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
}

}  // namespace sim_detail

inline nlohmann::ordered_json to_json(const HoverMetrics& m) {
    using sim_detail::finite_or_null;
    nlohmann::ordered_json j;
    j["mean_w_tail"] = finite_or_null(m.mean_w_tail);
    j["z_drift_rate"] = finite_or_null(m.z_drift_rate);
    j["mean_lift_ratio"] = finite_or_null(m.mean_lift_ratio);
    j["phi_amplitude"] = finite_or_null(m.phi_amplitude);
    j["tau_hat_tail_mean"] = finite_or_null(m.tau_hat_tail_mean);
    j["tau_hat_drift_rate"] = finite_or_null(m.tau_hat_drift_rate);
    j["settled"] = m.settled;
    j["diverged"] = m.diverged;
    j["diverged_at"] = finite_or_null(m.diverged_at);
    if (!m.note.empty()) j["note"] = m.note;
    return j;
}

inline nlohmann::ordered_json to_json(const EscConfig& c) {
    nlohmann::ordered_json j;
    j["a"] = c.a;
    j["K"] = c.K;
    j["omega"] = c.omega;
    j["objective"] = std::string(to_string(c.objective));
    j["lift_model"] = std::string(to_string(c.lift_model));
    j["n_smooth"] = c.n_smooth.value();
    j["tauhat_law"] = std::string(to_string(c.tauhat_law));
    return j;
}

inline nlohmann::ordered_json to_json(const HoverOptions& o) {
    nlohmann::ordered_json j;
    j["w0"] = o.w0;
    j["duration_periods"] = o.duration_periods;
    j["steps_per_period"] = o.steps_per_period;
    j["dt"] = o.dt;
    j["tail_periods"] = o.tail_periods;
    j["w_tol"] = o.w_tol;
    j["z_tol"] = o.z_tol;
    j["smoothed"] = o.smoothed;
    return j;
}

/// FNV-1a over the raw bytes of every sample; equal trajectories give equal checksums.
inline std::string trajectory_checksum(const EsTrajectory& tr) {
    std::string bytes;
    bytes.reserve(tr.size() * sizeof(Vec5));
    for (const auto& x : tr.samples) bytes.append(reinterpret_cast<const char*>(x.data()), sizeof(Vec5));
    return fnv1a_hex(bytes);
}

}  // namespace hover_es
