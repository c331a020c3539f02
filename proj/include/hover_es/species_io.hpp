#pragma once

// Species file format (UTF-8 JSON, one species per file). Files carry the
// customary units of the morphology tables, tagged in the key suffix; the
// loader converts everything to SI.
//
//   {
//     "name": "hawkmoth",
//     "morphology": { "f_hz", "phi_deg", "S_mm2", "R_mm", "cbar_mm",
//                     "r1_hat", "r2_hat", "m_mg", "Iy_mg_cm2" },
//     "auxiliary":  { "alpha_m_deg", "mw_mg", "d_hat",
//                     "a0_per_rad" (opt, 2 pi), "rho_kg_m3" (opt, 1.225), "g_m_s2" (opt, 9.81) },
//     "coefficients_override": { "kd1", "kL", "kd2", "kd3", "IF_kg_m2" },          (optional)
//     "esc": { "altitude": { "a", "K" }, "lift_balance": { "a", "K" } }              (optional)
//   }

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "hover_es/esc.hpp"
#include "hover_es/species.hpp"

#ifndef HOVER_ES_DEFAULT_DATA_DIR
#define HOVER_ES_DEFAULT_DATA_DIR "data/species"
#endif

namespace hover_es {

struct EscPair {
    double a = 0.0;
    double K = 0.0;
};

enum class CoefficientSource { Override, Derived };

struct SpeciesRecord {
    SpeciesMorphology morphology;
    ModelCoefficients coefficients;
    CoefficientSource source = CoefficientSource::Derived;
    std::optional<ModelCoefficients> override_coefficients;
    std::optional<EscPair> esc_altitude;
    std::optional<EscPair> esc_lift_balance;
    std::string checksum;  // FNV-1a 64 of the file bytes, hex
    std::string path;

    [[nodiscard]] const std::string& name() const { return morphology.name; }

    [[nodiscard]] const EscPair& esc_pair(Objective o) const {
        const auto& p = o == Objective::AltitudeSquared ? esc_altitude : esc_lift_balance;
        if (!p) {
            throw ConfigError("species '" + name() + "' has no esc." + std::string(to_string(o)) + " parameters");
        }
        return *p;
    }

    /// ES loop configuration from the bundled (a, K) pair, Omega = 2 pi f.
    [[nodiscard]] EscConfig esc_config(Objective o) const {
        const auto& p = esc_pair(o);
        EscConfig cfg;
        cfg.a = p.a;
        cfg.K = p.K;
        cfg.omega = 2.0 * std::numbers::pi * morphology.flap_frequency_hz;
        cfg.objective = o;
        return cfg;
    }
};

inline std::string fnv1a_hex(std::string_view bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << h;
    return os.str();
}

namespace io_detail {

using nlohmann::json;

struct FieldSpec {
    const char* key;
    bool required;
};

inline void check_keys(const json& obj, const std::string& path, const std::vector<FieldSpec>& fields) {
    if (!obj.is_object()) throw ConfigError(path + ": expected an object");
    for (const auto& [key, value] : obj.items()) {
        const bool known = std::any_of(fields.begin(), fields.end(), [&](const FieldSpec& f) { return key == f.key; });
        if (known) continue;
        // Same quantity with a different unit suffix is a unit-tag mismatch, not just an unknown key.
        const auto stem = key.substr(0, key.find('_'));
        for (const auto& f : fields) {
            const std::string fk = f.key;
            if (fk.find('_') != std::string::npos && fk.substr(0, fk.find('_')) == stem) {
                throw ConfigError(path + "." + key + ": unit-tag mismatch, expected '" + fk + "'");
            }
        }
        throw ConfigError(path + "." + key + ": unknown key");
    }
    for (const auto& f : fields) {
        if (f.required && !obj.contains(f.key)) throw ConfigError(path + "." + f.key + ": missing required field");
    }
}

inline double number(const json& obj, const std::string& path, const char* key) {
    const auto& v = obj.at(key);
    if (!v.is_number()) throw ConfigError(path + "." + key + ": expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(path + "." + key + ": not finite");
    return d;
}

inline double number_or(const json& obj, const std::string& path, const char* key, double fallback) {
    return obj.contains(key) ? number(obj, path, key) : fallback;
}

// Rounds to 12 significant digits so unit conversion round trips print identically.
inline double tidy(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 12);
    double out = 0.0;
    std::from_chars(buf, res.ptr, out);
    return out;
}

inline constexpr double kDeg = std::numbers::pi / 180.0;

inline ModelCoefficients parse_override(const json& obj, const SpeciesMorphology& m) {
    const std::string p = "coefficients_override";
    check_keys(obj, p, {{"kd1", true}, {"kL", true}, {"kd2", true}, {"kd3", true}, {"IF_kg_m2", true}});
    ModelCoefficients k;
    k.kd1 = number(obj, p, "kd1");
    k.kL = number(obj, p, "kL");
    k.kd2 = number(obj, p, "kd2");
    k.kd3 = number(obj, p, "kd3");
    k.inertia_flap = number(obj, p, "IF_kg_m2");
    for (auto [v, n] : {std::pair{k.kd1, "kd1"}, {k.kL, "kL"}, {k.kd2, "kd2"}, {k.kd3, "kd3"}, {k.inertia_flap, "IF_kg_m2"}}) {
        if (!(v > 0.0)) throw ConfigError(p + "." + n + ": coefficient must be > 0");
    }
    k.mass_kg = m.mass_kg;
    k.gravity = m.gravity;
    return k;
}

inline EscPair parse_pair(const json& obj, const std::string& path) {
    check_keys(obj, path, {{"a", true}, {"K", true}});
    EscPair p{number(obj, path, "a"), number(obj, path, "K")};
    if (!(p.a > 0.0)) throw ConfigError(path + ".a: modulation amplitude must be > 0");
    return p;
}

}  // namespace io_detail

/// Parses and validates a species document. Coefficients come from
/// `coefficients_override` when present, otherwise from derive_coefficients().
inline SpeciesRecord load_species(const nlohmann::json& doc) {
    using namespace io_detail;
    check_keys(doc, "$", {{"name", true}, {"morphology", true}, {"auxiliary", true},
                          {"coefficients_override", false}, {"esc", false}});
    if (!doc.at("name").is_string() || doc.at("name").get<std::string>().empty()) {
        throw ConfigError("$.name: expected a non-empty string");
    }

    SpeciesRecord rec;
    auto& m = rec.morphology;
    m.name = doc.at("name").get<std::string>();

    const auto& mo = doc.at("morphology");
    const std::string mp = "morphology";
    check_keys(mo, mp, {{"f_hz", true}, {"phi_deg", true}, {"S_mm2", true}, {"R_mm", true}, {"cbar_mm", true},
                        {"r1_hat", true}, {"r2_hat", true}, {"m_mg", true}, {"Iy_mg_cm2", true}});
    m.flap_frequency_hz = number(mo, mp, "f_hz");
    m.flap_amplitude_rad = number(mo, mp, "phi_deg") * kDeg;
    m.wing_area_m2 = number(mo, mp, "S_mm2") * 1e-6;
    m.wing_length_m = number(mo, mp, "R_mm") * 1e-3;
    m.mean_chord_m = number(mo, mp, "cbar_mm") * 1e-3;
    m.r1_hat = number(mo, mp, "r1_hat");
    m.r2_hat = number(mo, mp, "r2_hat");
    m.mass_kg = number(mo, mp, "m_mg") * 1e-6;
    m.body_inertia_kg_m2 = number(mo, mp, "Iy_mg_cm2") * 1e-10;

    const auto& ax = doc.at("auxiliary");
    const std::string ap = "auxiliary";
    check_keys(ax, ap, {{"alpha_m_deg", true}, {"mw_mg", true}, {"d_hat", true}, {"a0_per_rad", false},
                        {"rho_kg_m3", false}, {"g_m_s2", false}});
    m.alpha_m_rad = number(ax, ap, "alpha_m_deg") * kDeg;
    m.wing_mass_kg = number(ax, ap, "mw_mg") * 1e-6;
    m.d_hat = number(ax, ap, "d_hat");
    m.airfoil_slope = number_or(ax, ap, "a0_per_rad", kThinAirfoilSlope);
    m.air_density = number_or(ax, ap, "rho_kg_m3", kDefaultAirDensity);
    m.gravity = number_or(ax, ap, "g_m_s2", kDefaultGravity);

    try {
        validate(m);
    } catch (const InvalidMorphology& e) {
        throw ConfigError("species '" + m.name + "': invariant violation: " + e.what());
    }

    if (doc.contains("coefficients_override")) {
        rec.override_coefficients = parse_override(doc.at("coefficients_override"), m);
        rec.coefficients = *rec.override_coefficients;
        rec.source = CoefficientSource::Override;
    } else {
        rec.coefficients = derive_coefficients(m);
        rec.source = CoefficientSource::Derived;
    }

    if (doc.contains("esc")) {
        const auto& esc = doc.at("esc");
        check_keys(esc, "esc", {{"altitude", false}, {"lift_balance", false}});
        if (esc.contains("altitude")) rec.esc_altitude = parse_pair(esc.at("altitude"), "esc.altitude");
        if (esc.contains("lift_balance")) rec.esc_lift_balance = parse_pair(esc.at("lift_balance"), "esc.lift_balance");
    }
    return rec;
}

/// Serializes back to the file format. Unit-converted quantities are rounded to
/// 12 significant digits, so load -> serialize is idempotent.
inline nlohmann::ordered_json to_json(const SpeciesRecord& rec) {
    using io_detail::kDeg;
    using io_detail::tidy;
    using ojson = nlohmann::ordered_json;
    const auto& m = rec.morphology;
    ojson doc;
    doc["name"] = m.name;
    doc["morphology"] = {
        {"f_hz", tidy(m.flap_frequency_hz)},    {"phi_deg", tidy(m.flap_amplitude_rad / kDeg)},
        {"S_mm2", tidy(m.wing_area_m2 * 1e6)},  {"R_mm", tidy(m.wing_length_m * 1e3)},
        {"cbar_mm", tidy(m.mean_chord_m * 1e3)}, {"r1_hat", m.r1_hat},
        {"r2_hat", m.r2_hat},                   {"m_mg", tidy(m.mass_kg * 1e6)},
        {"Iy_mg_cm2", tidy(m.body_inertia_kg_m2 * 1e10)},
    };
    doc["auxiliary"] = {
        {"alpha_m_deg", tidy(m.alpha_m_rad / kDeg)}, {"mw_mg", tidy(m.wing_mass_kg * 1e6)},
        {"d_hat", m.d_hat},                          {"a0_per_rad", m.airfoil_slope},
        {"rho_kg_m3", m.air_density},                {"g_m_s2", m.gravity},
    };
    if (rec.override_coefficients) {
        const auto& k = *rec.override_coefficients;
        doc["coefficients_override"] = {{"kd1", k.kd1}, {"kL", k.kL},   {"kd2", k.kd2},
                                        {"kd3", k.kd3}, {"IF_kg_m2", k.inertia_flap}};
    }
    if (rec.esc_altitude || rec.esc_lift_balance) {
        ojson esc = ojson::object();
        if (rec.esc_altitude) esc["altitude"] = {{"a", rec.esc_altitude->a}, {"K", rec.esc_altitude->K}};
        if (rec.esc_lift_balance) esc["lift_balance"] = {{"a", rec.esc_lift_balance->a}, {"K", rec.esc_lift_balance->K}};
        doc["esc"] = esc;
    }
    return doc;
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw ConfigError("cannot open '" + p.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline SpeciesRecord load_species_file(const std::filesystem::path& p) {
    const std::string text = read_file(p);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(p.string() + ": malformed JSON: " + e.what());
    }
    SpeciesRecord rec;
    try {
        rec = load_species(doc);
    } catch (const ConfigError& e) {
        throw ConfigError(p.string() + ": " + e.what());
    }
    rec.checksum = fnv1a_hex(text);
    rec.path = p.string();
    return rec;
}

/// Species data directory: $HOVER_ES_DATA if set, else the compiled-in default.
inline std::filesystem::path data_directory() {
    if (const char* env = std::getenv("HOVER_ES_DATA"); env != nullptr && *env != '\0') return env;
    return HOVER_ES_DEFAULT_DATA_DIR;
}

/// The six bundled species, in the canonical reporting order.
inline const std::vector<std::string>& bundled_species() {
    static const std::vector<std::string> names{"hawkmoth", "cranefly", "bumblebee",
                                                "dragonfly", "hoverfly", "hummingbird"};
    return names;
}

/// Names available in a data directory (sorted file stems of *.json).
inline std::vector<std::string> list_species(const std::filesystem::path& dir = data_directory()) {
    std::vector<std::string> out;
    std::error_code ec;
    for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") out.push_back(entry.path().stem().string());
    }
    if (ec) throw ConfigError("cannot read species directory '" + dir.string() + "': " + ec.message());
    std::sort(out.begin(), out.end());
    return out;
}

/// Resolves a name in the data directory, or an explicit path to a .json file.
inline SpeciesRecord find_species(const std::string& name_or_path,
                                  const std::filesystem::path& dir = data_directory()) {
    const std::filesystem::path direct(name_or_path);
    if (direct.extension() == ".json" && std::filesystem::exists(direct)) return load_species_file(direct);
    const auto p = dir / (name_or_path + ".json");
    if (!std::filesystem::exists(p)) throw ConfigError("unknown species '" + name_or_path + "'");
    return load_species_file(p);
}

}  // namespace hover_es
