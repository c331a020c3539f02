#pragma once

// Consolidated reproduction run: coefficient consistency, hover experiments,
// open-loop contrast, flapping amplitudes, averaged-system eigenvalues,
// smoothing fidelity and numerical self-checks, each scored against its
// acceptance threshold.

#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hover_es/reference.hpp"
#include "hover_es/report_io.hpp"

namespace hover_es {

struct ReproduceOptions {
    double duration_periods = 1000.0;
    unsigned jobs = 1;
    EscConfig base;  // lift model, smoothing order, tau_hat law
    APlacement placement = APlacement::Squared;
};

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
};

struct ReproduceSummary {
    nlohmann::ordered_json json;
    std::string text;
    std::vector<CriterionResult> criteria;

    [[nodiscard]] bool all_pass() const {
        return std::all_of(criteria.begin(), criteria.end(), [](const CriterionResult& c) { return c.pass; });
    }
};

namespace repro_detail {

using ojson = nlohmann::ordered_json;
using sim_detail::finite_or_null;

inline double pct(double value, double ref) { return 100.0 * (value - ref) / ref; }

inline std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

inline ojson coefficients_json(const ModelCoefficients& k) {
    return {{"kd1", k.kd1}, {"kL", k.kL}, {"kd2", k.kd2}, {"kd3", k.kd3}, {"IF", k.inertia_flap}};
}

/// Relative RMS of (b - a) against a over the first `window` seconds.
inline double relative_rms(const EsTrajectory& a, const EsTrajectory& b, std::size_t col, double window) {
    const auto n = std::min<std::size_t>(a.size(), static_cast<std::size_t>(std::llround(window / a.dt)) + 1);
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = b.samples[i][col] - a.samples[i][col];
        num += d * d;
        den += a.samples[i][col] * a.samples[i][col];
    }
    return std::sqrt(num / den);
}

/// Global error of RK4 on wdot = g - c w^2 against the closed form sqrt(g/c) tanh(sqrt(g c) t).
inline double drag_error(double dt) {
    constexpr double g = 9.81;
    constexpr double c = 0.5;
    constexpr double t_end = 1.0;
    auto rhs = [](double, const std::array<double, 1>& w) { return std::array<double, 1>{g - c * w[0] * w[0]}; };
    const auto tr = integrate(rhs, std::array<double, 1>{0.0}, t_end, dt);
    const double exact = std::sqrt(g / c) * std::tanh(std::sqrt(g * c) * t_end);
    return std::abs(tr.samples.back()[0] - exact);
}

}  // namespace repro_detail

/// Runs everything. `species` must hold the six bundled species.
inline ReproduceSummary reproduce(const std::vector<SpeciesRecord>& species, const ReproduceOptions& opt) {
    using namespace repro_detail;
    ReproduceSummary out;
    ojson& j = out.json;
    std::ostringstream txt;

    std::vector<const SpeciesRecord*> refs;
    for (const auto& s : species) refs.push_back(&s);
    ojson cfg;
    cfg["duration_periods"] = opt.duration_periods;
    cfg["lift_model"] = std::string(to_string(opt.base.lift_model));
    cfg["n_smooth"] = opt.base.n_smooth.value();
    cfg["tauhat_law"] = std::string(to_string(opt.base.tauhat_law));
    cfg["a_placement"] = std::string(to_string(opt.placement));
    cfg["hover"] = to_json(HoverOptions{});
    cfg["hover"]["duration_periods"] = opt.duration_periods;
    j["metadata"] = metadata(refs, cfg);

    auto add = [&](int id, std::string name, bool pass, std::string detail) {
        out.criteria.push_back({id, std::move(name), pass, std::move(detail)});
    };

    // --- coefficient consistency -------------------------------------------------
    ojson t2 = ojson::array();
    bool identity_ok = true;
    bool chord_ok = true;
    double worst_identity = 0.0;
    double worst_chord = 0.0;
    double worst_derived_identity = 0.0;
    txt << "Coefficient consistency (kd3 I_F / (2 m kL); 1 for derived coefficients)\n";
    txt << "  species        table ratio  derived ratio  kd1 dev%  kL dev%  kd2 dev%  kd3 dev%  IF dev%\n";
    for (const auto& s : species) {
        const ModelCoefficients derived = derive_coefficients(s.morphology);
        const ModelCoefficients& table = s.override_coefficients ? *s.override_coefficients : s.coefficients;
        const double ratio = table.coupling_identity_ratio();
        const double dratio = derived.coupling_identity_ratio();
        worst_identity = std::max(worst_identity, std::abs(ratio - 1.0));
        worst_derived_identity = std::max(worst_derived_identity, std::abs(dratio - 1.0));
        if (std::abs(ratio - 1.0) > 0.15) identity_ok = false;

        const auto chord = ChordDistribution::from(s.morphology);
        const double r = s.morphology.wing_length_m;
        const double area = 0.5 * chord.moment(0, 1);
        const double r1 = 0.5 * chord.moment(1, 1) / (area * r);
        const double r2 = std::sqrt(0.5 * chord.moment(2, 1) / (area * r * r));
        const double e_area = std::abs(area / (s.morphology.mean_chord_m * r) - 1.0);
        const double e_r1 = std::abs(r1 / s.morphology.r1_hat - 1.0);
        const double e_r2 = std::abs(r2 / s.morphology.r2_hat - 1.0);
        worst_chord = std::max({worst_chord, e_area, e_r1, e_r2});
        if (std::max({e_area, e_r1, e_r2}) > 1e-6) chord_ok = false;

        ojson row;
        row["species"] = s.name();
        row["table"] = coefficients_json(table);
        row["derived"] = coefficients_json(derived);
        row["deviation_pct"] = {{"kd1", pct(derived.kd1, table.kd1)},
                                {"kL", pct(derived.kL, table.kL)},
                                {"kd2", pct(derived.kd2, table.kd2)},
                                {"kd3", pct(derived.kd3, table.kd3)},
                                {"IF", pct(derived.inertia_flap, table.inertia_flap)}};
        row["identity_ratio_table"] = ratio;
        row["identity_ratio_derived"] = dratio;
        row["chord_roundtrip_error"] = std::max({e_area, e_r1, e_r2});
        t2.push_back(row);
        char line[256];
        std::snprintf(line, sizeof line, "  %-13s  %11.4f  %13.10f  %8.2f  %7.2f  %8.2f  %8.2f  %7.2f\n",
                      s.name().c_str(), ratio, dratio, pct(derived.kd1, table.kd1), pct(derived.kL, table.kL),
                      pct(derived.kd2, table.kd2), pct(derived.kd3, table.kd3),
                      pct(derived.inertia_flap, table.inertia_flap));
        txt << line;
    }
    j["coefficients"] = t2;

    // --- hover runs -------------------------------------------------------------
    SweepSpec spec;
    spec.species = species;
    spec.axes = {{"w0", {0.2, -0.2}}};
    spec.base = opt.base;
    spec.options.duration_periods = opt.duration_periods;
    spec.jobs = opt.jobs;
    const auto cells = sweep(spec);
    ojson hover = ojson::array();
    int settled_count = 0;
    std::vector<std::string> unsettled;
    txt << "\nHover runs (trailing 20 periods)\n";
    txt << "  species        objective      w0     mean w (m/s)  z drift (m/s)  L/mg     amplitude  result\n";
    for (const auto& c : cells) {
        const auto& m = c.metrics;
        const bool ok = !c.error && m.settled && m.lift_balanced(0.05);
        if (ok) {
            ++settled_count;
        } else {
            unsettled.push_back(c.species + "/" + std::string(to_string(c.objective)) + "/w0=" +
                                fmt("%+.1f", c.overrides.front().second));
        }
        ojson row;
        row["species"] = c.species;
        row["objective"] = std::string(to_string(c.objective));
        row["w0"] = c.overrides.front().second;
        row["metrics"] = to_json(m);
        if (c.error) row["error"] = *c.error;
        row["pass"] = ok;
        hover.push_back(row);
        char line[256];
        std::snprintf(line, sizeof line, "  %-13s  %-13s  %+.1f  %12.3e  %13.3e  %7.4f  %9.4f  %s\n", c.species.c_str(),
                      std::string(to_string(c.objective)).c_str(), c.overrides.front().second, m.mean_w_tail,
                      m.z_drift_rate, m.mean_lift_ratio, m.phi_amplitude,
                      ok ? "settled" : (m.diverged ? "DIVERGED" : "unsettled"));
        txt << line;
    }
    j["hover"] = hover;
    {
        std::string detail = std::to_string(settled_count) + "/" + std::to_string(cells.size()) + " runs settled";
        if (!unsettled.empty()) {
            detail += "; failing:";
            for (const auto& u : unsettled) detail += " " + u;
        }
        add(1, "closed-loop hover stabilization", unsettled.empty(), detail);
    }

    // --- open-loop contrast -----------------------------------------------------
    const SpeciesRecord* hawk = nullptr;
    for (const auto& s : species) {
        if (s.name() == "hawkmoth") hawk = &s;
    }
    if (hawk != nullptr) {
        EscConfig c = hawk->esc_config(Objective::AltitudeSquared);
        c.lift_model = opt.base.lift_model;
        c.n_smooth = opt.base.n_smooth;
        c.tauhat_law = opt.base.tauhat_law;
        HoverOptions ho;
        ho.w0 = -1.0;
        ho.duration_periods = opt.duration_periods;
        const auto open = run_open_loop(hawk->coefficients, c, ho).metrics;
        const auto closed = run_hover(hawk->coefficients, c, ho).metrics;
        const bool ramp = std::abs(open.mean_w_tail) > 0.05 && std::abs(open.z_drift_rate) > 0.05 &&
                          std::abs(open.z_drift_rate - open.mean_w_tail) <= 0.1 * std::abs(open.mean_w_tail);
        const bool closed_ok = closed.settled && closed.lift_balanced(0.05);
        j["open_loop"] = {{"species", "hawkmoth"}, {"w0", -1.0}, {"open_loop", to_json(open)},
                          {"closed_loop", to_json(closed)}, {"open_loop_ramp", ramp},
                          {"closed_loop_settled", closed_ok}};
        txt << "\nOpen-loop contrast (hawkmoth, altitude objective, w0 = -1 m/s)\n";
        txt << "  K = 0      : mean w " << fmt("%+.4e", open.mean_w_tail) << ", z drift "
            << fmt("%+.4e", open.z_drift_rate) << (ramp ? "  (linear ramp)\n" : "  (no ramp)\n");
        txt << "  closed loop: "
            << (closed.diverged ? "diverged at t = " + fmt("%.4f", closed.diverged_at) + " s"
                                : "mean w " + fmt("%+.4e", closed.mean_w_tail))
            << (closed_ok ? "  (settled)\n" : "  (not settled)\n");
        add(2, "open-loop contrast", ramp && closed_ok,
            std::string("open loop ") + (ramp ? "ramps" : "does not ramp") + ", closed loop " +
                (closed_ok ? "settles" : (closed.diverged ? "diverges" : "does not settle")));
    } else {
        add(2, "open-loop contrast", false, "hawkmoth not among the species");
    }

    // --- amplitudes -------------------------------------------------------------
    ojson t4 = ojson::array();
    bool amp_ok = true;
    std::string amp_fail;
    txt << "\nFlapping amplitude (altitude objective, w0 = +0.2 m/s)\n";
    txt << "  species        measured (rad)  published ES (rad)  error %\n";
    for (const auto& c : cells) {
        if (c.objective != Objective::AltitudeSquared || c.overrides.front().second != 0.2) continue;
        const auto ref = reference::amplitude(c.species);
        if (!ref) continue;
        const double a = c.metrics.phi_amplitude;
        const double err = pct(a, ref->es_rad);
        const bool ok = std::isfinite(a) && std::abs(err) <= 10.0;
        if (!ok) {
            amp_ok = false;
            amp_fail += " " + c.species;
        }
        t4.push_back({{"species", c.species}, {"measured", finite_or_null(a)}, {"published_es", ref->es_rad},
                      {"published_observed", ref->observed_rad}, {"error_pct", finite_or_null(err)}, {"pass", ok}});
        char line[160];
        std::snprintf(line, sizeof line, "  %-13s  %14.4f  %18.2f  %7.2f\n", c.species.c_str(), a, ref->es_rad, err);
        txt << line;
    }
    j["amplitudes"] = t4;
    add(3, "flapping amplitudes within 10%", amp_ok, amp_ok ? "all within 10%" : "failing:" + amp_fail);

    // --- averaged-system eigenvalues --------------------------------------------
    ojson t5 = ojson::array();
    int stable_count = 0;
    int magnitude_ok = 0;
    int total = 0;
    std::string eig_fail;
    txt << "\nAveraged-system eigenvalues (reduced w, phidot, tau_hat)\n";
    txt << "  species        objective      eigenvalues                                  published"
           "                         verdict   magnitude\n";
    for (const auto& s : species) {
        for (Objective o : {Objective::AltitudeSquared, Objective::LiftBalance}) {
            ++total;
            EscConfig c = s.esc_config(o);
            c.lift_model = opt.base.lift_model;
            c.n_smooth = opt.base.n_smooth;
            c.tauhat_law = opt.base.tauhat_law;
            EquilibriumOptions eo;
            eo.placement = opt.placement;
            ojson row;
            row["species"] = s.name();
            row["objective"] = std::string(to_string(o));
            const auto ref = reference::eigenvalues(s.name(), o);
            try {
                const auto rep = analyze(s.name(), c, s.coefficients, eo);
                bool mag = ref.has_value();
                ojson ratios = ojson::array();
                for (std::size_t i = 0; i < 3 && ref; ++i) {
                    const double ratio = std::abs(rep.eigenvalues[i]) / std::abs((*ref)[i]);
                    ratios.push_back(ratio);
                    if (!(ratio >= 0.1 && ratio <= 10.0)) mag = false;
                }
                if (rep.stable) ++stable_count;
                if (mag) ++magnitude_ok;
                if (!(rep.stable && mag)) eig_fail += " " + s.name() + "/" + std::string(to_string(o));
                row["report"] = to_json(rep);
                if (ref) row["published"] = *ref;
                row["magnitude_ratios"] = ratios;
                row["magnitude_ok"] = mag;
                char line[320];
                std::snprintf(line, sizeof line,
                              "  %-13s  %-13s  %11.4g %11.4g %11.4g    %10.4g %10.4g %10.4g   %-8s  %s\n",
                              s.name().c_str(), std::string(to_string(o)).c_str(), rep.eigenvalues[0].real(),
                              rep.eigenvalues[1].real(), rep.eigenvalues[2].real(), ref ? (*ref)[0] : 0.0,
                              ref ? (*ref)[1] : 0.0, ref ? (*ref)[2] : 0.0, rep.stable ? "stable" : "UNSTABLE",
                              mag ? "ok" : "OFF");
                txt << line;
            } catch (const Error& e) {
                row["error"] = e.what();
                eig_fail += " " + s.name() + "/" + std::string(to_string(o));
                txt << "  " << s.name() << "  " << to_string(o) << "  analysis failed: " << e.what() << "\n";
            }
            t5.push_back(row);
        }
    }
    j["eigenvalues"] = t5;
    add(4, "averaged-system stability", eig_fail.empty(),
        std::to_string(stable_count) + "/" + std::to_string(total) + " stable, " + std::to_string(magnitude_ok) +
            "/" + std::to_string(total) + " within an order of magnitude" +
            (eig_fail.empty() ? "" : "; failing:" + eig_fail));

    // --- smoothing fidelity -----------------------------------------------------
    if (hawk != nullptr) {
        EscConfig c = hawk->esc_config(Objective::AltitudeSquared);
        c.lift_model = opt.base.lift_model;
        c.tauhat_law = opt.base.tauhat_law;
        c.n_smooth = SmoothingOrder(50);
        HoverOptions ho;
        ho.w0 = 0.0;
        ho.duration_periods = 0.1 / c.period();
        ho.tail_periods = 1.0;
        const auto exact = run_hover(hawk->coefficients, c, ho);
        ho.smoothed = true;
        const auto smooth = run_hover(hawk->coefficients, c, ho);
        const bool complete = !exact.metrics.diverged && !smooth.metrics.diverged;
        const double ew = complete ? relative_rms(exact.trajectory, smooth.trajectory, idx::w, 0.1) : NAN;
        const double ep = complete ? relative_rms(exact.trajectory, smooth.trajectory, idx::phidot, 0.1) : NAN;
        const bool ok = complete && ew < 0.05 && ep < 0.05;
        j["smoothing"] = {{"species", "hawkmoth"}, {"n_smooth", 50}, {"window_s", 0.1},
                          {"relative_rms_w", finite_or_null(ew)}, {"relative_rms_phidot", finite_or_null(ep)},
                          {"pass", ok}};
        txt << "\nSmoothing fidelity (hawkmoth, n = 50, 0.1 s): relative RMS w " << fmt("%.3e", ew) << ", phidot "
            << fmt("%.3e", ep) << "\n";
        add(5, "smoothing fidelity", ok, "relative RMS w " + fmt("%.3e", ew) + ", phidot " + fmt("%.3e", ep));
    } else {
        add(5, "smoothing fidelity", false, "hawkmoth not among the species");
    }

    // --- species identities -----------------------------------------------------
    add(6, "species-module identities", chord_ok && identity_ok && worst_derived_identity < 1e-12,
        "chord round-trip " + fmt("%.2e", worst_chord) + ", derived identity " + fmt("%.2e", worst_derived_identity) +
            ", table identity off by up to " + fmt("%.1f", 100.0 * worst_identity) + "%");

    // --- numerical self-checks --------------------------------------------------
    {
        const double e1 = drag_error(1.0 / 64.0);
        const double e2 = drag_error(1.0 / 128.0);
        const double order = std::log2(e1 / e2);

        std::mt19937_64 rng(20240917);
        std::uniform_real_distribution<double> uni(-1.0, 1.0);
        double bracket_err = 0.0;
        for (int trial = 0; trial < 100; ++trial) {
            Mat3 a{};
            Mat3 b{};
            Vec3 x{};
            for (int r = 0; r < 3; ++r) {
                x[r] = uni(rng);
                for (int col = 0; col < 3; ++col) {
                    a[r][col] = uni(rng);
                    b[r][col] = uni(rng);
                }
            }
            auto fa = [&](const Vec3& v) { return mat_vec<3>(a, v); };
            auto fb = [&](const Vec3& v) { return mat_vec<3>(b, v); };
            const Vec3 got = lie_bracket<3>(fa, fb, x);
            Mat3 comm{};
            for (int r = 0; r < 3; ++r) {
                for (int col = 0; col < 3; ++col) {
                    for (int q = 0; q < 3; ++q) comm[r][col] += b[r][q] * a[q][col] - a[r][q] * b[q][col];
                }
            }
            const Vec3 want = mat_vec<3>(comm, x);
            const double scale = std::max({std::abs(want[0]), std::abs(want[1]), std::abs(want[2]), 1e-300});
            for (int r = 0; r < 3; ++r) bracket_err = std::max(bracket_err, std::abs(got[r] - want[r]) / scale);
        }

        double eig_err = 0.0;
        for (int trial = 0; trial < 1000; ++trial) {
            Mat3 m{};
            for (auto& row : m) {
                for (auto& v : row) v = uni(rng);
            }
            const auto c = characteristic_polynomial(m);
            const auto p = cubic_roots(c);
            const auto q = companion_roots(c);
            for (int i = 0; i < 3; ++i) eig_err = std::max(eig_err, std::abs(p[i] - q[i]) / std::max(1.0, std::abs(q[i])));
        }
        const bool ok = order > 3.8 && order < 4.2 && bracket_err < 1e-6 && eig_err < 1e-9;
        j["self_checks"] = {{"rk4_order", order}, {"bracket_max_rel_error", bracket_err},
                            {"cubic_vs_companion_max_error", eig_err}, {"pass", ok}};
        txt << "\nNumerical self-checks: RK4 order " << fmt("%.3f", order) << ", bracket error "
            << fmt("%.2e", bracket_err) << ", cubic vs companion " << fmt("%.2e", eig_err) << "\n";
        add(7, "numerical oracles", ok,
            "RK4 order " + fmt("%.3f", order) + ", bracket " + fmt("%.2e", bracket_err) + ", eigenvalues " +
                fmt("%.2e", eig_err));
    }

    ojson crit = ojson::array();
    txt << "\nCriteria\n";
    for (const auto& c : out.criteria) {
        crit.push_back({{"id", c.id}, {"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
        txt << "  [" << (c.pass ? "PASS" : "FAIL") << "] " << c.id << ". " << c.name << ": " << c.detail << "\n";
    }
    j["criteria"] = crit;
    j["all_pass"] = out.all_pass();
    out.text = txt.str();
    return out;
}

}  // namespace hover_es
