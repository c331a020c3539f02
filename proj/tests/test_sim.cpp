#include <gtest/gtest.h>

#include <algorithm>
#include <clocale>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include "hover_es/sim.hpp"

using namespace hover_es;

namespace {

const SpeciesRecord& species(const std::string& name) {
    static std::map<std::string, SpeciesRecord> cache;
    auto it = cache.find(name);
    if (it == cache.end()) it = cache.emplace(name, find_species(name)).first;
    return it->second;
}

HoverRun hover(const std::string& name, Objective o, double w0, double periods = 200.0) {
    HoverOptions opt;
    opt.w0 = w0;
    opt.duration_periods = periods;
    const auto& rec = species(name);
    return run_hover(rec.coefficients, rec.esc_config(o), opt);
}

double max_abs_w(const EsTrajectory& tr) {
    double m = 0.0;
    for (const auto& x : tr.samples) m = std::max(m, std::abs(x[idx::w]));
    return m;
}

}  // namespace

TEST(Amplitude, SyntheticSinusoid) {
    const double omega = 2.0 * std::numbers::pi * 26.3;
    const double period = 2.0 * std::numbers::pi / omega;
    EsTrajectory tr;
    tr.dt = period / 200.0;
    for (int i = 0; i <= 200 * 30; ++i) {
        Vec5 x{};
        x[idx::phi] = 1.07 * std::sin(omega * tr.time(static_cast<std::size_t>(i)));
        tr.samples.push_back(x);
    }
    EXPECT_NEAR(measure_phi_amplitude(tr, period), 1.07, 1e-6);
}

TEST(Amplitude, OffsetAndNonSinusoidal) {
    // Peak-to-trough halving ignores a constant offset.
    std::vector<double> phi;
    const double dt = 1.0 / 200.0;
    for (int i = 0; i <= 200 * 10; ++i) {
        const double t = i * dt * 2.0 * std::numbers::pi;
        phi.push_back(0.3 + 0.9 * std::sin(t) + 0.05 * std::sin(3.0 * t));
    }
    // Extremum of sin t + (0.05/0.9) sin 3t: sin t = 1 gives 0.9 - 0.05 = 0.85; interior maxima are lower.
    const double amp = amplitude_from_samples(phi);
    EXPECT_NEAR(amp, 0.85, 1e-4);
}

TEST(Amplitude, InsufficientCycles) {
    std::vector<double> phi;
    for (int i = 0; i <= 800; ++i) phi.push_back(std::sin(2.0 * std::numbers::pi * i / 200.0));
    EXPECT_THROW(amplitude_from_samples(phi), InsufficientData);
    EXPECT_THROW(amplitude_from_samples(std::vector<double>(5000, 0.1)), InsufficientData);
}

TEST(Metrics, LineFitAndMeanOracles) {
    std::vector<double> y;
    for (int i = 0; i < 100; ++i) y.push_back(3.0 - 0.25 * (2.0 + 0.01 * i));
    const auto f = sim_detail::fit_line(y, 2.0, 0.01);
    EXPECT_NEAR(f.slope, -0.25, 1e-12);
    EXPECT_NEAR(sim_detail::mean(std::vector<double>{1.0, 2.0, 6.0}), 3.0, 1e-15);
}

TEST(Metrics, SyntheticTrajectory) {
    // z ramps at 0.03 m/s, w oscillates about 0.002, lift ratio exactly 1 with phidot = sqrt(g/kL).
    const auto& rec = species("bumblebee");
    const auto cfg = rec.esc_config(Objective::AltitudeSquared);
    const auto& k = rec.coefficients;
    const double period = cfg.period();
    EsTrajectory tr;
    tr.dt = period / 200.0;
    const double pd = std::sqrt(k.gravity / k.kL);
    for (int i = 0; i <= 200 * 40; ++i) {
        const double t = tr.time(static_cast<std::size_t>(i));
        tr.samples.push_back({0.03 * t, 0.8 * std::sin(cfg.omega * t), 0.002 + 0.1 * std::cos(cfg.omega * t), pd, 1e-7});
    }
    HoverOptions opt;
    const auto m = compute_metrics(tr, cfg, k, opt);
    EXPECT_NEAR(m.mean_w_tail, 0.002, 1e-12);
    EXPECT_NEAR(m.z_drift_rate, 0.03, 1e-9);
    EXPECT_NEAR(m.mean_lift_ratio, 1.0, 1e-12);
    EXPECT_NEAR(m.phi_amplitude, 0.8, 1e-6);
    EXPECT_NEAR(m.tau_hat_tail_mean, 1e-7, 1e-20);
    EXPECT_FALSE(m.settled);
    EXPECT_GE(m.phi_amplitude, 0.0);
}

TEST(Hover, HawkmothAltitudeSettles) {
    const auto run = hover("hawkmoth", Objective::AltitudeSquared, 0.2);
    EXPECT_FALSE(run.metrics.diverged) << run.metrics.note;
    EXPECT_TRUE(run.metrics.settled);
    EXPECT_LT(std::abs(run.metrics.mean_w_tail), 0.01);
}

TEST(Hover, HawkmothAmplitude) {
    const auto run = hover("hawkmoth", Objective::AltitudeSquared, 0.2);
    EXPECT_NEAR(run.metrics.phi_amplitude / 1.07, 1.0, 0.10) << run.metrics.note;
}

TEST(Hover, HoverflyAmplitude) {
    const auto run = hover("hoverfly", Objective::AltitudeSquared, 0.2);
    ASSERT_FALSE(run.metrics.diverged);
    EXPECT_NEAR(run.metrics.phi_amplitude / 0.75, 1.0, 0.10);
}

TEST(Hover, MirrorDisturbanceSettles) {
    const auto run = hover("cranefly", Objective::AltitudeSquared, -0.2);
    EXPECT_TRUE(run.metrics.settled) << run.metrics.mean_w_tail;
    EXPECT_NEAR(run.metrics.mean_lift_ratio, 1.0, 0.05);
}

TEST(Hover, UndisturbedLiftBalanceHasSmallerTransient) {
    const auto calm = hover("bumblebee", Objective::LiftBalance, 0.0);
    const auto kicked = hover("bumblebee", Objective::LiftBalance, 0.2);
    EXPECT_TRUE(calm.metrics.settled);
    EXPECT_LT(max_abs_w(calm.trajectory), max_abs_w(kicked.trajectory));
}

TEST(Hover, SettledRunsBalanceLift) {
    for (const char* name : {"cranefly", "dragonfly", "hummingbird"}) {
        const auto run = hover(name, Objective::AltitudeSquared, 0.2, 400.0);
        ASSERT_TRUE(run.metrics.settled) << name;
        EXPECT_TRUE(run.metrics.lift_balanced(0.05)) << name << " " << run.metrics.mean_lift_ratio;
        EXPECT_TRUE(std::isfinite(run.metrics.tau_hat_tail_mean));
        EXPECT_GE(run.metrics.phi_amplitude, 0.0);
    }
}

TEST(Hover, DivergedRunHasNoStatistics) {
    const auto& rec = species("hawkmoth");
    auto cfg = rec.esc_config(Objective::LiftBalance);
    HoverOptions opt;
    opt.duration_periods = 100.0;
    const auto run = run_hover(rec.coefficients, cfg, opt);
    ASSERT_TRUE(run.metrics.diverged);
    EXPECT_FALSE(run.metrics.settled);
    EXPECT_TRUE(std::isnan(run.metrics.mean_w_tail));
    EXPECT_TRUE(std::isfinite(run.metrics.diverged_at));
    EXPECT_GT(run.trajectory.size(), 1u);
    for (double v : run.trajectory.samples.back()) EXPECT_TRUE(std::isfinite(v));
}

TEST(OpenLoop, HawkmothRampsInAltitude) {
    const auto& rec = species("hawkmoth");
    HoverOptions opt;
    opt.w0 = -1.0;
    const auto run = run_open_loop(rec.coefficients, rec.esc_config(Objective::AltitudeSquared), opt);
    ASSERT_FALSE(run.metrics.diverged);
    EXPECT_GT(std::abs(run.metrics.mean_w_tail), 0.05);
    EXPECT_GT(std::abs(run.metrics.z_drift_rate), 0.05);
    EXPECT_NEAR(run.metrics.z_drift_rate, run.metrics.mean_w_tail, 0.1 * std::abs(run.metrics.mean_w_tail));
    EXPECT_EQ(run.config.K, 0.0);
}

TEST(OpenLoop, HawkmothClosedLoopFromLargeDisturbance) {
    const auto run = hover("hawkmoth", Objective::AltitudeSquared, -1.0);
    EXPECT_TRUE(run.metrics.settled) << run.metrics.note;
}

TEST(OpenLoop, IndependentOfGain) {
    const auto& rec = species("dragonfly");
    HoverOptions opt;
    opt.duration_periods = 60.0;
    auto cfg = rec.esc_config(Objective::AltitudeSquared);
    const auto a = run_open_loop(rec.coefficients, cfg, opt);
    cfg.K *= 37.0;
    const auto b = run_open_loop(rec.coefficients, cfg, opt);
    EXPECT_EQ(a.metrics.mean_w_tail, b.metrics.mean_w_tail);
    EXPECT_EQ(trajectory_checksum(a.trajectory), trajectory_checksum(b.trajectory));
}

TEST(Hover, SmoothedMatchesExact) {
    const auto& rec = species("hawkmoth");
    const auto cfg = rec.esc_config(Objective::AltitudeSquared);
    HoverOptions opt;
    opt.w0 = 0.0;
    opt.duration_periods = 0.1 / cfg.period();
    const auto exact = run_hover(rec.coefficients, cfg, opt);
    opt.smoothed = true;
    const auto smooth = run_hover(rec.coefficients, cfg, opt);
    ASSERT_EQ(exact.trajectory.size(), smooth.trajectory.size());
    for (std::size_t col : {idx::w, idx::phidot}) {
        double num = 0.0;
        double den = 0.0;
        for (std::size_t i = 0; i < exact.trajectory.size(); ++i) {
            const double e = exact.trajectory.samples[i][col];
            const double s = smooth.trajectory.samples[i][col];
            num += (s - e) * (s - e);
            den += e * e;
        }
        EXPECT_LT(std::sqrt(num / den), 0.05) << col;
    }
}

TEST(Hover, DeterministicChecksum) {
    const auto a = hover("hoverfly", Objective::LiftBalance, 0.2, 50.0);
    const auto b = hover("hoverfly", Objective::LiftBalance, 0.2, 50.0);
    EXPECT_EQ(trajectory_checksum(a.trajectory), trajectory_checksum(b.trajectory));
    EXPECT_EQ(a.trajectory.samples, b.trajectory.samples);
}

TEST(Hover, OptionValidation) {
    const auto& rec = species("hoverfly");
    const auto cfg = rec.esc_config(Objective::AltitudeSquared);
    HoverOptions opt;
    opt.steps_per_period = 50.0;
    EXPECT_THROW(run_hover(rec.coefficients, cfg, opt), ConfigError);
    opt.duration_periods = 0.0;
    EXPECT_THROW(run_hover(rec.coefficients, cfg, opt), ConfigError);
    opt = {};
    opt.dt = cfg.period() / 200.0;
    opt.duration_periods = 2.0;
    EXPECT_NO_THROW(run_hover(rec.coefficients, cfg, opt));
}

namespace {

SweepSpec default_grid(unsigned jobs) {
    SweepSpec spec;
    for (const auto& n : bundled_species()) spec.species.push_back(species(n));
    spec.jobs = jobs;
    return spec;
}

}  // namespace

TEST(Sweep, DefaultGridHasTwelveOrderedCells) {
    auto spec = default_grid(1);
    spec.options.duration_periods = 30.0;
    const auto cells = sweep(spec);
    ASSERT_EQ(cells.size(), 12u);
    for (std::size_t i = 0; i < cells.size(); ++i) {
        EXPECT_EQ(cells[i].species, bundled_species()[i / 2]);
        EXPECT_EQ(cells[i].objective, i % 2 == 0 ? Objective::AltitudeSquared : Objective::LiftBalance);
        EXPECT_TRUE(cells[i].overrides.empty());
        EXPECT_FALSE(cells[i].error.has_value());
    }
}

TEST(Sweep, DefaultGridSettlesAllCells) {
    const auto cells = sweep(default_grid(4));
    for (const auto& c : cells) {
        EXPECT_TRUE(c.metrics.settled) << c.species << " " << to_string(c.objective) << " w=" << c.metrics.mean_w_tail
                                       << " " << c.metrics.note;
    }
}

TEST(Sweep, ParallelMatchesSerial) {
    auto spec = default_grid(1);
    spec.options.duration_periods = 40.0;
    spec.axes = {{"w0", {-0.2, 0.2}}, {"K_scale", {0.5, 1.0}}};
    const auto serial = sweep(spec);
    spec.jobs = 8;
    const auto parallel = sweep(spec);
    ASSERT_EQ(serial.size(), 48u);
    ASSERT_EQ(parallel.size(), serial.size());
    for (std::size_t i = 0; i < serial.size(); ++i) {
        EXPECT_EQ(serial[i].species, parallel[i].species);
        EXPECT_EQ(serial[i].overrides, parallel[i].overrides);
        EXPECT_EQ(to_json(serial[i].metrics), to_json(parallel[i].metrics)) << i;
    }
    // Last axis innermost.
    EXPECT_EQ(serial[0].overrides, (std::vector<std::pair<std::string, double>>{{"w0", -0.2}, {"K_scale", 0.5}}));
    EXPECT_EQ(serial[1].overrides, (std::vector<std::pair<std::string, double>>{{"w0", -0.2}, {"K_scale", 1.0}}));
    EXPECT_EQ(serial[2].overrides, (std::vector<std::pair<std::string, double>>{{"w0", 0.2}, {"K_scale", 0.5}}));
}

TEST(Sweep, ReducedModulationProbeIsRecorded) {
    SweepSpec spec;
    spec.species.push_back(species("hawkmoth"));
    spec.axes = {{"a_scale", {0.1}}};
    const auto cells = sweep(spec);
    ASSERT_EQ(cells.size(), 2u);
    for (const auto& c : cells) {
        EXPECT_FALSE(c.error.has_value());
        EXPECT_NEAR(c.config.a, 0.1 * species("hawkmoth").esc_pair(c.objective).a, 1e-20);
        const bool degraded = !c.metrics.settled || !c.metrics.lift_balanced();
        RecordProperty(std::string(to_string(c.objective)) + "_degraded", degraded ? "yes" : "no");
    }
}

TEST(Sweep, PerCellErrorsDoNotAbort) {
    SweepSpec spec;
    spec.species.push_back(species("dragonfly"));
    spec.options.duration_periods = 10.0;
    // A negative a_scale fails validation in that cell only.
    spec.axes = {{"a_scale", {-1.0, 1.0}}};
    const auto cells = sweep(spec);
    ASSERT_EQ(cells.size(), 4u);
    EXPECT_TRUE(cells[0].error.has_value());
    EXPECT_FALSE(cells[1].error.has_value());
    EXPECT_TRUE(cells[2].error.has_value());
    EXPECT_FALSE(cells[3].error.has_value());
    spec.axes = {{"bogus", {1.0}}};
    const auto bad = sweep(spec);
    EXPECT_TRUE(bad[0].error.has_value());
    EXPECT_NE(bad[0].error->find("unknown sweep axis"), std::string::npos);
    spec.species.clear();
    EXPECT_THROW(sweep(spec), ConfigError);
}

TEST(Export, CsvFormat) {
    const auto& rec = species("hoverfly");
    const auto cfg = rec.esc_config(Objective::LiftBalance);
    HoverOptions opt;
    opt.duration_periods = 1.0;
    const auto run = run_hover(rec.coefficients, cfg, opt);
    std::ostringstream os;
    write_trajectory_csv(os, run.trajectory, cfg, rec.coefficients, 7);
    std::istringstream in(os.str());
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "t,z,phi,w,phidot,tauhat,J,lift_ratio");
    std::size_t rows = 0;
    std::string last;
    while (std::getline(in, line)) {
        ++rows;
        EXPECT_EQ(std::count(line.begin(), line.end(), ','), 7);
        last = line;
    }
    EXPECT_EQ(rows, 200u / 7u + 1u + 1u);
    EXPECT_EQ(last.substr(0, last.find(',')), format_number(run.trajectory.t_end()));
    EXPECT_THROW(write_trajectory_csv(os, run.trajectory, cfg, rec.coefficients, 0), ConfigError);
}

TEST(Export, NumbersIgnoreLocale) {
    const char* prev = std::setlocale(LC_NUMERIC, nullptr);
    const std::string saved = prev ? prev : "C";
    for (const char* loc : {"de_DE.UTF-8", "fr_FR.UTF-8", "de_DE"}) {
        if (std::setlocale(LC_NUMERIC, loc) != nullptr) break;
    }
    EXPECT_EQ(format_number(1234567.25), "1234567.25");
    EXPECT_EQ(format_number(-0.001), "-0.001");
    EXPECT_EQ(format_number(1e-300), "1e-300");
    EXPECT_EQ(format_number(std::nan("")), "nan");
    EXPECT_EQ(format_number(-INFINITY), "-inf");
    std::setlocale(LC_NUMERIC, saved.c_str());
    // Round trip.
    for (double v : {0.1, 1.0 / 3.0, 2.56e-5, -6900.0}) EXPECT_EQ(std::stod(format_number(v)), v);
}

TEST(Export, MetricsJsonMirrorsFields) {
    HoverMetrics m;
    m.mean_w_tail = 0.001;
    m.settled = true;
    const auto j = to_json(m);
    for (const char* key : {"mean_w_tail", "z_drift_rate", "mean_lift_ratio", "phi_amplitude", "tau_hat_tail_mean",
                            "tau_hat_drift_rate", "settled", "diverged", "diverged_at"}) {
        EXPECT_TRUE(j.contains(key)) << key;
    }
    EXPECT_TRUE(j["z_drift_rate"].is_null());
    EXPECT_EQ(j["settled"], true);
}
