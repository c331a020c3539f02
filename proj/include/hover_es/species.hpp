#pragma once

// Wing morphology, chord distribution, and the lumped plant coefficients of the
// 2-DOF flapping model. Everything here is SI: m, kg, s, rad.

#include <cmath>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>

#include "hover_es/error.hpp"
#include "hover_es/quadrature.hpp"

namespace hover_es {

inline constexpr double kDefaultAirDensity = 1.225;  // kg/m^3
inline constexpr double kDefaultGravity = 9.81;      // m/s^2
inline constexpr double kThinAirfoilSlope = 2.0 * std::numbers::pi;

struct SpeciesMorphology {
    std::string name;
    double flap_frequency_hz = 0.0;
    double flap_amplitude_rad = 0.0;  // Phi
    double wing_area_m2 = 0.0;        // S, one wing
    double wing_length_m = 0.0;       // R
    double mean_chord_m = 0.0;        // c_bar
    double r1_hat = 0.0;
    double r2_hat = 0.0;
    double mass_kg = 0.0;             // body + wings
    double body_inertia_kg_m2 = 0.0;  // I_y, unused by the 2-DOF plant

    // Auxiliary aerodynamic/inertial inputs.
    double alpha_m_rad = 0.0;
    double wing_mass_kg = 0.0;  // one wing
    double d_hat = 0.0;
    double airfoil_slope = kThinAirfoilSlope;  // a0, per rad
    double air_density = kDefaultAirDensity;
    double gravity = kDefaultGravity;

    [[nodiscard]] double aspect_ratio() const { return wing_length_m * wing_length_m / wing_area_m2; }
};

struct ModelCoefficients {
    double kd1 = 0.0;  // s/rad, multiplies |phidot| w
    double kL = 0.0;   // m/rad^2, multiplies phidot^2
    double kd2 = 0.0;  // per rad
    double kd3 = 0.0;  // 1/(rad m) * s, multiplies w phidot
    double inertia_flap = 0.0;  // I_F, kg m^2
    double mass_kg = 0.0;
    double gravity = kDefaultGravity;

    /// kd3 * I_F / (2 m kL). Exactly 1 for coefficients derived from morphology.
    [[nodiscard]] double coupling_identity_ratio() const { return kd3 * inertia_flap / (2.0 * mass_kg * kL); }
};

namespace detail {

inline void require(bool ok, const std::string& what) {
    if (!ok) throw InvalidMorphology(what);
}

}  // namespace detail

/// Checks the morphology invariants; throws InvalidMorphology naming the offending field.
inline void validate(const SpeciesMorphology& m) {
    using detail::require;
    auto positive = [&](double v, const char* field) {
        require(std::isfinite(v) && v > 0.0, std::string(field) + " must be finite and > 0");
    };
    positive(m.flap_frequency_hz, "f");
    positive(m.flap_amplitude_rad, "Phi");
    positive(m.wing_area_m2, "S");
    positive(m.wing_length_m, "R");
    positive(m.mean_chord_m, "c_bar");
    positive(m.mass_kg, "m");
    positive(m.body_inertia_kg_m2, "I_y");
    positive(m.wing_mass_kg, "m_w");
    positive(m.d_hat, "d_hat");
    positive(m.airfoil_slope, "a0");
    positive(m.air_density, "rho");
    positive(m.gravity, "g");
    require(m.r1_hat > 0.0 && m.r1_hat < m.r2_hat && m.r2_hat < 1.0,
            "chord moments must satisfy 0 < r1_hat < r2_hat < 1");
    const double shape = m.r1_hat * (1.0 - m.r1_hat) / (m.r2_hat * m.r2_hat - m.r1_hat * m.r1_hat);
    require(shape > 1.0, "r1_hat (1 - r1_hat) / (r2_hat^2 - r1_hat^2) must exceed 1 (kappa, gamma > 0)");
    require(m.alpha_m_rad > 0.0 && m.alpha_m_rad < std::numbers::pi / 2, "alpha_m must lie in (0, pi/2)");
}

/// Beta-shaped spanwise chord distribution c(r) = (c_bar / beta) x^(kappa-1) (1-x)^(gamma-1), x = r/R.
class ChordDistribution {
public:
    static ChordDistribution from(const SpeciesMorphology& m) {
        return ChordDistribution(m.r1_hat, m.r2_hat, m.mean_chord_m, m.wing_length_m);
    }

    ChordDistribution(double r1_hat, double r2_hat, double mean_chord, double span)
        : mean_chord_(mean_chord), span_(span) {
        const double shape = r1_hat * (1.0 - r1_hat) / (r2_hat * r2_hat - r1_hat * r1_hat) - 1.0;
        kappa_ = r1_hat * shape;
        gamma_ = (1.0 - r1_hat) * shape;
        if (!(kappa_ > 0.0) || !(gamma_ > 0.0)) {
            std::ostringstream msg;
            msg << "chord distribution exponents must be positive (kappa = " << kappa_ << ", gamma = " << gamma_
                << ")";
            throw InvalidMorphology(msg.str());
        }
        const double k1 = kappa_ - 1.0;
        const double g1 = gamma_ - 1.0;
        beta_ = quad::integrate([=](double x) { return std::pow(x, k1) * std::pow(1.0 - x, g1); }, 0.0, 1.0);
    }

    [[nodiscard]] double kappa() const { return kappa_; }
    [[nodiscard]] double gamma() const { return gamma_; }
    [[nodiscard]] double beta() const { return beta_; }
    [[nodiscard]] double span() const { return span_; }

    /// Chord in m at normalized station x = r/R in [0, 1]; no range check.
    [[nodiscard]] double at_normalized(double x) const {
        return mean_chord_ / beta_ * std::pow(x, kappa_ - 1.0) * std::pow(1.0 - x, gamma_ - 1.0);
    }

    [[nodiscard]] double operator()(double r) const {
        if (!(r >= 0.0 && r <= span_)) {
            std::ostringstream msg;
            msg << "spanwise station r = " << r << " m outside [0, " << span_ << "]";
            throw DomainError(msg.str());
        }
        return at_normalized(r / span_);
    }

    /// I_mn = 2 * integral_0^R r^m c(r)^n dr.
    [[nodiscard]] double moment(int m_exp, int n_exp) const {
        if (m_exp < 0 || n_exp < 1) throw DomainError("chord moment needs m >= 0 and n >= 1");
        const double root_exp = m_exp + n_exp * (kappa_ - 1.0);
        const double tip_exp = n_exp * (gamma_ - 1.0);
        if (root_exp <= -1.0 || tip_exp <= -1.0) {
            std::ostringstream msg;
            msg << "I_" << m_exp << n_exp << " diverges: integrand ~ x^" << root_exp << " at the root and (1-x)^"
                << tip_exp << " at the tip (kappa = " << kappa_ << ", gamma = " << gamma_ << ")";
            throw IntegrationError(msg.str());
        }
        const double cn = std::pow(mean_chord_ / beta_, n_exp);
        const double k1 = n_exp * (kappa_ - 1.0);
        const double g1 = n_exp * (gamma_ - 1.0);
        const double integral = quad::integrate(
            [=](double x) { return std::pow(x, m_exp + k1) * std::pow(1.0 - x, g1); }, 0.0, 1.0);
        return 2.0 * std::pow(span_, m_exp + 1) * cn * integral;
    }

private:
    double mean_chord_;
    double span_;
    double kappa_ = 0.0;
    double gamma_ = 0.0;
    double beta_ = 0.0;
};

inline double chord_at(double r, const SpeciesMorphology& m) { return ChordDistribution::from(m)(r); }

inline double chord_moment(int m_exp, int n_exp, const SpeciesMorphology& m) {
    return ChordDistribution::from(m).moment(m_exp, n_exp);
}

/// Finite-wing lift-curve slope from the aspect ratio and the 2-D slope a0.
inline double lift_curve_slope(double aspect_ratio, double a0 = kThinAirfoilSlope) {
    if (!(aspect_ratio > 0.0) || !(a0 > 0.0)) throw DomainError("lift_curve_slope needs AR > 0 and a0 > 0");
    const double pa = std::numbers::pi * aspect_ratio;
    return pa / (1.0 + std::sqrt((pa / a0) * (pa / a0) + 1.0));
}

inline double lift_curve_slope(const SpeciesMorphology& m) { return lift_curve_slope(m.aspect_ratio(), m.airfoil_slope); }

struct WingInertia {
    double ix = 0.0;
    double iy = 0.0;
    double iz = 0.0;
    double flap = 0.0;  // I_F
};

inline WingInertia wing_inertia(const SpeciesMorphology& m, const ChordDistribution& chord) {
    const double areal_mass = m.wing_mass_kg / (2.0 * m.wing_area_m2);
    WingInertia w;
    w.ix = areal_mass * chord.moment(2, 1);
    w.iy = areal_mass * m.d_hat * m.d_hat * chord.moment(0, 3);
    w.iz = w.ix + w.iy;
    const double s = std::sin(m.alpha_m_rad);
    const double c = std::cos(m.alpha_m_rad);
    w.flap = w.ix * s * s + w.iz * c * c;
    return w;
}

inline double flapping_inertia(const SpeciesMorphology& m) {
    return wing_inertia(m, ChordDistribution::from(m)).flap;
}

/// Evaluates the lumped plant coefficients from morphology. Does not call validate(),
/// so limiting cases (alpha_m = 0) can be probed directly.
inline ModelCoefficients derive_coefficients(const SpeciesMorphology& m) {
    const auto chord = ChordDistribution::from(m);
    const double cla = lift_curve_slope(m);
    const double i11 = chord.moment(1, 1);
    const double i21 = chord.moment(2, 1);
    const double i31 = chord.moment(3, 1);
    const double inertia = wing_inertia(m, chord).flap;
    const double s = std::sin(m.alpha_m_rad);
    const double c = std::cos(m.alpha_m_rad);
    const double rc = m.air_density * cla;

    ModelCoefficients k;
    k.kd1 = rc * i11 * c * c / (2.0 * m.mass_kg);
    k.kL = rc * i21 * s * c / (2.0 * m.mass_kg);
    k.kd2 = rc * i31 * s * s / inertia;
    k.kd3 = rc * i21 * s * c / inertia;
    k.inertia_flap = inertia;
    k.mass_kg = m.mass_kg;
    k.gravity = m.gravity;
    return k;
}

}  // namespace hover_es
