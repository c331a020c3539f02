// hover-es: species data, hover simulations, stability analysis, sweeps and the
// consolidated reproduction run.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hover_es/reproduce.hpp"

namespace fs = std::filesystem;
using namespace hover_es;
using ojson = nlohmann::ordered_json;

namespace {

int code(ExitCode c) { return static_cast<int>(c); }

// Values shared by the run-type subcommands. Unset optionals fall back to the
// run-config file, then the species file, then built-in defaults.
struct Common {
    std::string config_path;
    std::string output = "hover_es_out";
    std::string format = "csv,json";
    std::optional<std::string> tauhat_law;
    std::optional<std::string> lift_model;
    std::optional<std::string> a_placement;
    std::optional<int> n_smooth;
    std::optional<double> dt;
    std::optional<double> w0;
    std::optional<double> a;
    std::optional<double> K;
    std::optional<double> omega;
    std::optional<double> duration_periods;
    unsigned jobs = 1;
    ojson file;  // parsed run-config file

    template <class T>
    std::optional<T> from_file(const char* key) const {
        if (!file.contains(key)) return std::nullopt;
        try {
            return file.at(key).get<T>();
        } catch (const nlohmann::json::exception&) {
            throw ConfigError(config_path + ": key '" + key + "' has the wrong type");
        }
    }

    template <class T>
    std::optional<T> pick(const std::optional<T>& flag, const char* key) const {
        return flag ? flag : from_file<T>(key);
    }

    void load_file() {
        if (config_path.empty()) return;
        const std::string text = read_file(config_path);
        try {
            file = ojson::parse(text);
        } catch (const nlohmann::json::parse_error& e) {
            throw ConfigError(config_path + ": malformed JSON: " + e.what());
        }
        static const std::vector<std::string> known{
            "species",  "objective", "a",          "K",         "omega",      "w0",          "duration_periods",
            "dt",       "n_smooth",  "tauhat_law", "lift_model", "a_placement", "output",     "format",
            "open_loop", "smoothed", "stride",     "jobs"};
        if (!file.is_object()) throw ConfigError(config_path + ": expected a JSON object");
        for (const auto& [k, v] : file.items()) {
            if (std::find(known.begin(), known.end(), k) == known.end()) {
                throw ConfigError(config_path + ": unknown key '" + k + "'");
            }
        }
        if (auto o = from_file<std::string>("output")) output = *o;
        if (auto f = from_file<std::string>("format")) format = *f;
    }

    [[nodiscard]] bool wants(const std::string& fmt) const {
        std::stringstream ss(format);
        std::string item;
        while (std::getline(ss, item, ',')) {
            if (item == fmt) return true;
        }
        return false;
    }

    void check_formats() const {
        std::stringstream ss(format);
        std::string item;
        while (std::getline(ss, item, ',')) {
            if (item != "csv" && item != "json") throw ConfigError("unknown format '" + item + "' (expected csv, json)");
        }
    }

    /// Resolves an ES configuration for one species/objective pair.
    [[nodiscard]] EscConfig resolve(const SpeciesRecord& rec, Objective o, bool require_pair = true) const {
        EscConfig cfg;
        if (require_pair || (o == Objective::AltitudeSquared ? rec.esc_altitude : rec.esc_lift_balance)) {
            cfg = rec.esc_config(o);
        } else {
            cfg.omega = 2.0 * std::numbers::pi * rec.morphology.flap_frequency_hz;
            cfg.objective = o;
        }
        if (auto v = pick(a, "a")) cfg.a = *v;
        if (auto v = pick(K, "K")) cfg.K = *v;
        if (auto v = pick(omega, "omega")) cfg.omega = *v;
        if (auto v = pick(tauhat_law, "tauhat_law")) cfg.tauhat_law = parse_tauhat_law(*v);
        if (auto v = pick(lift_model, "lift_model")) cfg.lift_model = parse_lift_model(*v);
        if (auto v = pick(n_smooth, "n_smooth")) cfg.n_smooth = SmoothingOrder(*v);
        cfg.validate();
        return cfg;
    }

    [[nodiscard]] APlacement placement() const {
        if (auto v = pick(a_placement, "a_placement")) return parse_a_placement(*v);
        return APlacement::Squared;
    }

    [[nodiscard]] fs::path out_dir() const {
        fs::path p(output);
        std::error_code ec;
        fs::create_directories(p, ec);
        if (ec) throw ConfigError("cannot create output directory '" + output + "': " + ec.message());
        return p;
    }
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config_path, "Run-configuration JSON file");
    cmd->add_option("--output", c.output, "Output directory")->capture_default_str();
    cmd->add_option("--format", c.format, "Writers to enable: csv,json")->capture_default_str();
    cmd->add_option("--tauhat-law", c.tauhat_law, "tau_hat integrator law: eq11 | eq12");
    cmd->add_option("--lift-model", c.lift_model, "Lift model: wing_only | body_plus_wing");
    cmd->add_option("--n-smooth", c.n_smooth, "Smoothing order n of the |x| surrogate");
    cmd->add_option("--dt", c.dt, "Integration step in s (default T/200)");
    cmd->add_option("--w0", c.w0, "Initial vertical velocity disturbance, m/s");
    cmd->add_option("--a", c.a, "Modulation amplitude a, N m s");
    cmd->add_option("--K", c.K, "Integrator gain K");
    cmd->add_option("--omega", c.omega, "Modulation frequency Omega, rad/s (default 2 pi f)");
    cmd->add_option("--duration-periods", c.duration_periods, "Run length in flapping periods");
    cmd->add_option("--jobs", c.jobs, "Concurrent cells")->capture_default_str();
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + p.string() + "'");
    out << text;
}

void write_json(const fs::path& p, const ojson& j) { write_text(p, j.dump(2) + "\n"); }

std::string num(double v) { return format_number(v); }

std::string plot_script(const std::string& csv_name, const std::string& title) {
    std::ostringstream s;
    s << "#!/usr/bin/env python3\n"
         "# Renders the hover run stored next to this script. Requires matplotlib.\n"
         "import csv\n"
         "import pathlib\n"
         "import matplotlib.pyplot as plt\n\n"
         "here = pathlib.Path(__file__).resolve().parent\n"
         "with open(here / \""
      << csv_name
      << "\", newline=\"\") as fh:\n"
         "    rows = list(csv.DictReader(fh))\n"
         "t = [float(r[\"t\"]) for r in rows]\n"
         "panels = [(\"z\", \"z (m)\"), (\"w\", \"w (m/s)\"), (\"phidot\", \"phidot (rad/s)\"),\n"
         "          (\"tauhat\", \"tau_hat (N m)\"), (\"J\", \"J\"), (\"lift_ratio\", \"L / (m g)\")]\n"
         "fig, axes = plt.subplots(3, 2, figsize=(11, 8), sharex=True)\n"
         "for ax, (key, label) in zip(axes.T.flat, panels):\n"
         "    ax.plot(t, [float(r[key]) for r in rows], lw=0.6)\n"
         "    ax.set_ylabel(label)\n"
         "    ax.grid(alpha=0.3)\n"
         "for ax in axes[-1]:\n"
         "    ax.set_xlabel(\"t (s)\")\n"
         "fig.suptitle(\""
      << title
      << "\")\n"
         "fig.tight_layout()\n"
         "fig.savefig(here / \""
      << csv_name.substr(0, csv_name.size() - 4)
      << ".png\", dpi=150)\n";
    return s.str();
}

// ---------------------------------------------------------------------------

int cmd_species_list(const std::string& format) {
    const auto names = list_species();
    if (format == "json") {
        ojson j = ojson::array();
        for (const auto& n : names) j.push_back(n);
        std::cout << j.dump(2) << "\n";
        return 0;
    }
    for (const auto& n : names) std::cout << n << "\n";
    return 0;
}

void print_coefficients(std::ostream& os, const ModelCoefficients& k) {
    os << "  kd1 = " << num(k.kd1) << " s/rad\n"
       << "  kL  = " << num(k.kL) << " m/rad^2\n"
       << "  kd2 = " << num(k.kd2) << " 1/rad\n"
       << "  kd3 = " << num(k.kd3) << " s/(m rad)\n"
       << "  I_F = " << num(k.inertia_flap) << " kg m^2\n";
}

int cmd_species_show(const std::string& name, const std::string& format) {
    const auto rec = find_species(name);
    if (format == "json") {
        ojson j = to_json(rec);
        j["coefficients_in_use"] = {{"source", rec.source == CoefficientSource::Override ? "override" : "derived"},
                                    {"kd1", rec.coefficients.kd1},
                                    {"kL", rec.coefficients.kL},
                                    {"kd2", rec.coefficients.kd2},
                                    {"kd3", rec.coefficients.kd3},
                                    {"IF_kg_m2", rec.coefficients.inertia_flap}};
        j["checksum"] = rec.checksum;
        std::cout << j.dump(2) << "\n";
        return 0;
    }
    const auto& m = rec.morphology;
    std::cout << rec.name() << "  (" << rec.path << ", fnv1a " << rec.checksum << ")\n"
              << "morphology\n"
              << "  f     = " << num(m.flap_frequency_hz) << " Hz\n"
              << "  Phi   = " << num(m.flap_amplitude_rad) << " rad\n"
              << "  S     = " << num(m.wing_area_m2) << " m^2\n"
              << "  R     = " << num(m.wing_length_m) << " m\n"
              << "  c_bar = " << num(m.mean_chord_m) << " m\n"
              << "  r1    = " << num(m.r1_hat) << "\n"
              << "  r2    = " << num(m.r2_hat) << "\n"
              << "  m     = " << num(m.mass_kg) << " kg\n"
              << "  I_y   = " << num(m.body_inertia_kg_m2) << " kg m^2\n"
              << "auxiliary\n"
              << "  alpha_m = " << num(m.alpha_m_rad) << " rad\n"
              << "  m_w     = " << num(m.wing_mass_kg) << " kg\n"
              << "  d_hat   = " << num(m.d_hat) << "\n"
              << "  a0      = " << num(m.airfoil_slope) << " 1/rad\n"
              << "coefficients (" << (rec.source == CoefficientSource::Override ? "override" : "derived") << ")\n";
    print_coefficients(std::cout, rec.coefficients);
    std::cout << "  kd3 I_F / (2 m kL) = " << num(rec.coefficients.coupling_identity_ratio()) << "\n";
    for (Objective o : {Objective::AltitudeSquared, Objective::LiftBalance}) {
        const auto& p = o == Objective::AltitudeSquared ? rec.esc_altitude : rec.esc_lift_balance;
        if (p) std::cout << "esc " << to_string(o) << ": a = " << num(p->a) << ", K = " << num(p->K) << "\n";
    }
    return 0;
}

int cmd_species_derive(const std::vector<std::string>& args, const std::string& format) {
    std::string target;
    if (args.size() == 2 && args[0] == "bundled") {
        target = args[1];
    } else if (args.size() == 1) {
        target = args[0];
    } else {
        throw ConfigError("usage: species derive <file.json | name | bundled name>");
    }
    const auto rec = find_species(target);
    const auto derived = derive_coefficients(rec.morphology);
    const auto table = rec.override_coefficients;
    auto dev = [](double d, double t) { return 100.0 * (d - t) / t; };
    if (format == "json") {
        ojson j;
        j["species"] = rec.name();
        j["derived"] = {{"kd1", derived.kd1}, {"kL", derived.kL}, {"kd2", derived.kd2}, {"kd3", derived.kd3},
                        {"IF", derived.inertia_flap}};
        j["identity_ratio_derived"] = derived.coupling_identity_ratio();
        if (table) {
            j["override"] = {{"kd1", table->kd1}, {"kL", table->kL}, {"kd2", table->kd2}, {"kd3", table->kd3},
                             {"IF", table->inertia_flap}};
            j["deviation_pct"] = {{"kd1", dev(derived.kd1, table->kd1)},
                                  {"kL", dev(derived.kL, table->kL)},
                                  {"kd2", dev(derived.kd2, table->kd2)},
                                  {"kd3", dev(derived.kd3, table->kd3)},
                                  {"IF", dev(derived.inertia_flap, table->inertia_flap)}};
            j["identity_ratio_override"] = table->coupling_identity_ratio();
        }
        std::cout << j.dump(2) << "\n";
        return 0;
    }
    std::printf("%s: derived vs %s coefficients\n", rec.name().c_str(), table ? "override" : "(no override)");
    std::printf("  %-4s  %14s  %14s  %9s\n", "", "derived", "override", "dev %");
    auto row = [&](const char* n, double d, std::optional<double> t) {
        if (t) {
            std::printf("  %-4s  %14.6g  %14.6g  %9.2f\n", n, d, *t, dev(d, *t));
        } else {
            std::printf("  %-4s  %14.6g  %14s  %9s\n", n, d, "-", "-");
        }
    };
    auto get = [&](double ModelCoefficients::*f) -> std::optional<double> {
        if (!table) return std::nullopt;
        return (*table).*f;
    };
    row("kd1", derived.kd1, get(&ModelCoefficients::kd1));
    row("kL", derived.kL, get(&ModelCoefficients::kL));
    row("kd2", derived.kd2, get(&ModelCoefficients::kd2));
    row("kd3", derived.kd3, get(&ModelCoefficients::kd3));
    row("I_F", derived.inertia_flap, get(&ModelCoefficients::inertia_flap));
    std::printf("consistency kd3 = 2 m kL / I_F: derived ratio %.12f", derived.coupling_identity_ratio());
    if (table) {
        const double r = table->coupling_identity_ratio();
        std::printf(", override ratio %.4f (residual %+.2f%%)", r, 100.0 * (r - 1.0));
    }
    std::printf("\n");
    return 0;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
    std::optional<std::string> species;
    std::optional<std::string> objective;
    bool open_loop = false;
    bool smoothed = false;
    bool no_assert = false;
    bool allow_coarse = false;
    std::size_t stride = 1;
};

int cmd_simulate(Common& c, SimulateArgs& s) {
    c.load_file();
    c.check_formats();
    const auto species = c.pick(s.species, "species");
    if (!species) throw ConfigError("simulate: --species is required");
    const Objective obj = parse_objective(c.pick(s.objective, "objective").value_or("altitude"));
    const auto rec = find_species(*species);
    if (!s.open_loop) s.open_loop = c.from_file<bool>("open_loop").value_or(false);
    if (!s.smoothed) s.smoothed = c.from_file<bool>("smoothed").value_or(false);
    if (s.stride == 1) s.stride = c.from_file<std::size_t>("stride").value_or(1);

    EscConfig cfg = c.resolve(rec, obj);
    if (s.open_loop) cfg.K = 0.0;
    HoverOptions opt;
    if (auto v = c.pick(c.w0, "w0")) opt.w0 = *v;
    if (auto v = c.pick(c.duration_periods, "duration_periods")) opt.duration_periods = *v;
    if (auto v = c.pick(c.dt, "dt")) opt.dt = *v;
    opt.allow_coarse = s.allow_coarse;
    opt.smoothed = s.smoothed;

    const auto run = run_hover(rec.coefficients, cfg, opt);
    const auto& m = run.metrics;

    const fs::path dir = c.out_dir();
    const std::string stem = rec.name() + "_" + std::string(to_string(obj)) + (s.open_loop ? "_open_loop" : "");
    ojson config;
    config["species"] = rec.name();
    config["esc"] = to_json(cfg);
    config["hover"] = to_json(opt);
    config["open_loop"] = s.open_loop;
    const ojson meta = metadata({&rec}, config);

    if (c.wants("csv")) {
        std::ostringstream csv;
        write_trajectory_csv(csv, run.trajectory, cfg, rec.coefficients, s.stride);
        write_text(dir / (stem + ".csv"), csv.str());
        write_json(dir / (stem + ".meta.json"), meta);
        write_text(dir / (stem + "_plot.py"),
                   plot_script(stem + ".csv", rec.name() + ", " + std::string(to_string(obj)) + ", w0 = " +
                                                  num(opt.w0) + " m/s" + (s.open_loop ? ", open loop" : "")));
    }
    if (c.wants("json")) {
        ojson j;
        j["metadata"] = meta;
        j["metrics"] = to_json(m);
        j["trajectory_checksum"] = trajectory_checksum(run.trajectory);
        write_json(dir / (stem + "_metrics.json"), j);
    }

    std::printf("%s %s%s: mean w %s m/s, z drift %s m/s, L/mg %s, amplitude %s rad -> %s\n", rec.name().c_str(),
                std::string(to_string(obj)).c_str(), s.open_loop ? " (open loop)" : "", num(m.mean_w_tail).c_str(),
                num(m.z_drift_rate).c_str(), num(m.mean_lift_ratio).c_str(), num(m.phi_amplitude).c_str(),
                m.diverged ? "diverged" : (m.settled ? "settled" : "not settled"));
    if (m.diverged) {
        std::fprintf(stderr, "error: %s (last finite time %.6g s)\n", m.note.c_str(), m.diverged_at);
        return code(ExitCode::Divergence);
    }
    if (s.no_assert || m.settled) return 0;
    return code(ExitCode::AcceptanceFailure);
}

// ---------------------------------------------------------------------------

struct StabilityArgs {
    bool all = false;
    std::vector<std::string> species;
    std::optional<std::string> objective;
};

int cmd_stability(Common& c, const StabilityArgs& a) {
    c.load_file();
    c.check_formats();
    std::vector<std::string> names = a.species;
    if (names.empty()) {
        if (auto v = c.from_file<std::string>("species")) names.push_back(*v);
    }
    if (a.all || names.empty()) names = bundled_species();
    std::vector<Objective> objectives{Objective::AltitudeSquared, Objective::LiftBalance};
    if (auto v = c.pick(a.objective, "objective")) objectives = {parse_objective(*v)};

    const APlacement placement = c.placement();
    std::vector<SpeciesRecord> recs;
    for (const auto& n : names) recs.push_back(find_species(n));

    struct Cell {
        std::size_t rec;
        Objective obj;
        std::optional<StabilityReport> report;
        std::string error;
    };
    std::vector<Cell> cells;
    for (std::size_t i = 0; i < recs.size(); ++i) {
        for (Objective o : objectives) cells.push_back({i, o, std::nullopt, {}});
    }
    auto work = [&](std::size_t i) {
        auto& cell = cells[i];
        try {
            const auto& rec = recs[cell.rec];
            EquilibriumOptions eo;
            eo.placement = placement;
            cell.report = analyze(rec.name(), c.resolve(rec, cell.obj), rec.coefficients, eo);
        } catch (const NoEquilibriumFound& e) {
            cell.error = e.what();
        }
    };
    const unsigned jobs = std::max(1U, std::min<unsigned>(c.jobs, static_cast<unsigned>(cells.size())));
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < jobs; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < cells.size(); i = next++) work(i);
        });
    }
    for (auto& t : pool) t.join();

    const fs::path dir = c.out_dir();
    bool all_stable = true;
    bool failed = false;
    std::printf("%-13s %-13s %-40s %s\n", "species", "objective", "eigenvalues (re)", "verdict");
    for (const auto& cell : cells) {
        const auto& rec = recs[cell.rec];
        if (!cell.report) {
            failed = true;
            std::printf("%-13s %-13s no equilibrium: %s\n", rec.name().c_str(),
                        std::string(to_string(cell.obj)).c_str(), cell.error.c_str());
            continue;
        }
        const auto& r = *cell.report;
        all_stable = all_stable && r.stable;
        std::printf("%-13s %-13s %12.5g %12.5g %12.5g   %s%s\n", rec.name().c_str(),
                    std::string(to_string(cell.obj)).c_str(), r.eigenvalues[0].real(), r.eigenvalues[1].real(),
                    r.eigenvalues[2].real(), r.stable ? "stable" : "unstable",
                    r.ill_conditioned ? " (ill-conditioned)" : "");
        if (c.wants("json")) {
            ojson config;
            config["esc"] = to_json(c.resolve(rec, cell.obj));
            config["a_placement"] = std::string(to_string(placement));
            ojson j = to_json(r);
            j["metadata"] = metadata({&rec}, config);
            write_json(dir / (rec.name() + "_" + std::string(to_string(cell.obj)) + "_stability.json"), j);
        }
    }
    if (failed) return code(ExitCode::AnalysisFailure);
    return all_stable ? 0 : code(ExitCode::AcceptanceFailure);
}

// ---------------------------------------------------------------------------

struct SweepArgs {
    std::vector<std::string> species;
    std::vector<std::string> objectives;
    std::vector<std::string> axes;  // name=v1,v2,...
};

int cmd_sweep(Common& c, const SweepArgs& a) {
    c.load_file();
    c.check_formats();
    SweepSpec spec;
    const auto names = a.species.empty() ? bundled_species() : a.species;
    for (const auto& n : names) spec.species.push_back(find_species(n));
    if (!a.objectives.empty()) {
        spec.objectives.clear();
        for (const auto& o : a.objectives) spec.objectives.push_back(parse_objective(o));
    }
    for (const auto& ax : a.axes) {
        const auto eq = ax.find('=');
        if (eq == std::string::npos) throw ConfigError("sweep axis '" + ax + "' must look like name=v1,v2");
        SweepAxis axis;
        axis.name = ax.substr(0, eq);
        std::stringstream ss(ax.substr(eq + 1));
        std::string item;
        while (std::getline(ss, item, ',')) {
            double v = 0.0;
            const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
            if (res.ec != std::errc() || res.ptr != item.data() + item.size()) {
                throw ConfigError("sweep axis '" + axis.name + "': bad value '" + item + "'");
            }
            axis.values.push_back(v);
        }
        spec.axes.push_back(axis);
    }
    if (auto v = c.pick(c.tauhat_law, "tauhat_law")) spec.base.tauhat_law = parse_tauhat_law(*v);
    if (auto v = c.pick(c.lift_model, "lift_model")) spec.base.lift_model = parse_lift_model(*v);
    if (auto v = c.pick(c.n_smooth, "n_smooth")) spec.base.n_smooth = SmoothingOrder(*v);
    if (auto v = c.pick(c.w0, "w0")) spec.options.w0 = *v;
    if (auto v = c.pick(c.duration_periods, "duration_periods")) spec.options.duration_periods = *v;
    if (auto v = c.pick(c.dt, "dt")) spec.options.dt = *v;
    spec.jobs = c.jobs;

    const auto cells = sweep(spec);
    const fs::path dir = c.out_dir();
    std::vector<const SpeciesRecord*> refs;
    for (const auto& s : spec.species) refs.push_back(&s);
    ojson config;
    config["base"] = to_json(spec.base);
    config["hover"] = to_json(spec.options);
    ojson axes = ojson::object();
    for (const auto& ax : spec.axes) axes[ax.name] = ax.values;
    config["axes"] = axes;
    const ojson meta = metadata(refs, config);

    ojson rows = ojson::array();
    std::ostringstream csv;
    csv << "species,objective";
    for (const auto& ax : spec.axes) csv << ',' << ax.name;
    csv << ",mean_w_tail,z_drift_rate,mean_lift_ratio,phi_amplitude,settled,diverged,error\n";
    for (const auto& cell : cells) {
        ojson r;
        r["species"] = cell.species;
        r["objective"] = std::string(to_string(cell.objective));
        ojson ov = ojson::object();
        for (const auto& [k, v] : cell.overrides) ov[k] = v;
        r["overrides"] = ov;
        r["metrics"] = to_json(cell.metrics);
        if (cell.error) r["error"] = *cell.error;
        rows.push_back(r);
        csv << cell.species << ',' << to_string(cell.objective);
        for (const auto& [k, v] : cell.overrides) csv << ',' << num(v);
        const auto& m = cell.metrics;
        std::string err = cell.error.value_or("");
        std::replace(err.begin(), err.end(), ',', ';');
        csv << ',' << num(m.mean_w_tail) << ',' << num(m.z_drift_rate) << ',' << num(m.mean_lift_ratio) << ','
            << num(m.phi_amplitude) << ',' << (m.settled ? 1 : 0) << ',' << (m.diverged ? 1 : 0) << ',' << err
            << '\n';
        std::printf("%-13s %-13s", cell.species.c_str(), std::string(to_string(cell.objective)).c_str());
        for (const auto& [k, v] : cell.overrides) std::printf(" %s=%s", k.c_str(), num(v).c_str());
        std::printf("  %s\n", cell.error ? ("error: " + *cell.error).c_str()
                                         : (m.diverged ? "diverged" : (m.settled ? "settled" : "not settled")));
    }
    if (c.wants("json")) {
        ojson j;
        j["metadata"] = meta;
        j["cells"] = rows;
        write_json(dir / "sweep.json", j);
    }
    if (c.wants("csv")) {
        write_text(dir / "sweep.csv", csv.str());
        write_json(dir / "sweep.meta.json", meta);
    }
    return 0;
}

// ---------------------------------------------------------------------------

int cmd_reproduce(Common& c) {
    c.load_file();
    ReproduceOptions opt;
    if (auto v = c.pick(c.duration_periods, "duration_periods")) opt.duration_periods = *v;
    if (auto v = c.pick(c.tauhat_law, "tauhat_law")) opt.base.tauhat_law = parse_tauhat_law(*v);
    if (auto v = c.pick(c.lift_model, "lift_model")) opt.base.lift_model = parse_lift_model(*v);
    if (auto v = c.pick(c.n_smooth, "n_smooth")) opt.base.n_smooth = SmoothingOrder(*v);
    opt.placement = c.placement();
    opt.jobs = c.jobs;
    std::vector<SpeciesRecord> recs;
    for (const auto& n : bundled_species()) recs.push_back(find_species(n));

    const auto summary = reproduce(recs, opt);
    const fs::path dir = c.out_dir();
    write_json(dir / "summary.json", summary.json);
    write_text(dir / "summary.txt", summary.text);
    std::cout << summary.text;
    if (summary.all_pass()) return 0;
    for (const auto& cr : summary.criteria) {
        if (!cr.pass) std::fprintf(stderr, "criterion %d failed: %s\n", cr.id, cr.name.c_str());
    }
    return code(ExitCode::AcceptanceFailure);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Extremum-seeking hover simulation and stability analysis for flapping flyers"};
    app.set_version_flag("--version", std::string(kToolVersion));
    app.require_subcommand(1);
    std::string data_dir;
    app.add_option("--data-dir", data_dir, "Species data directory (overrides HOVER_ES_DATA)");

    std::string fmt = "text";
    auto* species = app.add_subcommand("species", "List, show or derive species data");
    species->require_subcommand(1);
    auto* sp_list = species->add_subcommand("list", "List available species");
    sp_list->add_option("--format", fmt, "text | json");
    std::string show_name;
    auto* sp_show = species->add_subcommand("show", "Show morphology and coefficients");
    sp_show->add_option("name", show_name, "Species name or .json path")->required();
    sp_show->add_option("--format", fmt, "text | json");
    std::vector<std::string> derive_args;
    auto* sp_derive = species->add_subcommand("derive", "Derived vs override coefficients");
    sp_derive->add_option("target", derive_args, "<file.json | name | bundled name>")->required()->expected(1, 2);
    sp_derive->add_option("--format", fmt, "text | json");

    Common sim_c;
    SimulateArgs sim_a;
    auto* simulate = app.add_subcommand("simulate", "Run one hover experiment");
    add_common(simulate, sim_c);
    simulate->add_option("--species", sim_a.species, "Species name or .json path");
    simulate->add_option("--objective", sim_a.objective, "altitude | lift_balance");
    simulate->add_flag("--open-loop", sim_a.open_loop, "Disable the tau_hat integrator (K = 0)");
    simulate->add_flag("--smoothed", sim_a.smoothed, "Integrate the smoothed dynamics");
    simulate->add_flag("--no-assert", sim_a.no_assert, "Exit 0 whenever the run completes");
    simulate->add_flag("--allow-coarse", sim_a.allow_coarse, "Permit dt above T/100 with a warning");
    simulate->add_option("--stride", sim_a.stride, "Write every n-th sample to the CSV")->check(CLI::PositiveNumber);

    Common st_c;
    StabilityArgs st_a;
    auto* stability = app.add_subcommand("stability", "Averaged-system equilibrium and eigenvalues");
    add_common(stability, st_c);
    stability->add_flag("--all", st_a.all, "All bundled species and both objectives");
    stability->add_option("--species", st_a.species, "Species (repeatable)");
    stability->add_option("--objective", st_a.objective, "altitude | lift_balance");
    stability->add_option("--a-placement", st_c.a_placement, "squared | literal");

    Common sw_c;
    SweepArgs sw_a;
    auto* sweep_cmd = app.add_subcommand("sweep", "Grid of hover runs");
    add_common(sweep_cmd, sw_c);
    sweep_cmd->add_option("--species", sw_a.species, "Species (repeatable; default all bundled)");
    sweep_cmd->add_option("--objective", sw_a.objectives, "Objectives (repeatable; default both)");
    sweep_cmd->add_option("--axis", sw_a.axes, "Override axis name=v1,v2 (a_scale, K_scale, omega_scale, w0)");

    Common rp_c;
    auto* repro = app.add_subcommand("reproduce", "All tables, hover runs and acceptance checks");
    add_common(repro, rp_c);
    repro->add_option("--a-placement", rp_c.a_placement, "squared | literal");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : code(ExitCode::ConfigError);
    }

    try {
        if (!data_dir.empty()) {
#ifdef _WIN32
            _putenv_s("HOVER_ES_DATA", data_dir.c_str());
#else
            setenv("HOVER_ES_DATA", data_dir.c_str(), 1);
#endif
        }
        if (fmt != "text" && fmt != "json") throw ConfigError("--format must be text or json");
        if (*sp_list) return cmd_species_list(fmt);
        if (*sp_show) return cmd_species_show(show_name, fmt);
        if (*sp_derive) return cmd_species_derive(derive_args, fmt);
        if (*simulate) return cmd_simulate(sim_c, sim_a);
        if (*stability) return cmd_stability(st_c, st_a);
        if (*sweep_cmd) return cmd_sweep(sw_c, sw_a);
        if (*repro) return cmd_reproduce(rp_c);
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return code(e.exit_code());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return code(ExitCode::ConfigError);
    }
    return 0;
}
