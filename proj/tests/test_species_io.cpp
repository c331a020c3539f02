#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>

#include "hover_es/species_io.hpp"

using namespace hover_es;
using nlohmann::json;

namespace {

json bundled_doc(const std::string& name) {
    return json::parse(read_file(data_directory() / (name + ".json")));
}

std::string error_of(const json& doc) {
    try {
        (void)load_species(doc);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST(SpeciesIo, BundledListIsComplete) {
    const auto names = list_species();
    for (const auto& n : bundled_species()) {
        EXPECT_NE(std::find(names.begin(), names.end(), n), names.end()) << n;
    }
    EXPECT_EQ(bundled_species().size(), 6u);
}

TEST(SpeciesIo, BumblebeeTableCoefficients) {
    const auto rec = find_species("bumblebee");
    EXPECT_EQ(rec.source, CoefficientSource::Override);
    EXPECT_DOUBLE_EQ(rec.coefficients.kd2, 0.2826);
    EXPECT_DOUBLE_EQ(rec.coefficients.inertia_flap, 9.453e-11);
    EXPECT_DOUBLE_EQ(rec.coefficients.mass_kg, rec.morphology.mass_kg);
}

TEST(SpeciesIo, HummingbirdMorphologyUnits) {
    const auto rec = find_species("hummingbird");
    EXPECT_DOUBLE_EQ(rec.morphology.flap_frequency_hz, 48.0);
    EXPECT_NEAR(rec.morphology.mass_kg, 4320e-6, 1e-15);
    EXPECT_NEAR(rec.esc_config(Objective::AltitudeSquared).omega, 2.0 * std::numbers::pi * 48.0, 1e-12);
}

TEST(SpeciesIo, HawkmothConvertedToSi) {
    const auto rec = find_species("hawkmoth");
    const auto& m = rec.morphology;
    EXPECT_NEAR(m.wing_length_m, 0.0519, 1e-15);
    EXPECT_NEAR(m.wing_area_m2, 947.8e-6, 1e-18);
    EXPECT_NEAR(m.flap_amplitude_rad, 60.5 * std::numbers::pi / 180.0, 1e-15);
    EXPECT_NEAR(m.body_inertia_kg_m2, 2080e-10, 1e-20);
    EXPECT_DOUBLE_EQ(rec.coefficients.kd3, 17.3331);
    EXPECT_EQ(rec.esc_pair(Objective::AltitudeSquared).K, -6900.0);
    EXPECT_EQ(rec.checksum.size(), 16u);
}

TEST(SpeciesIo, InvariantViolationNamesField) {
    auto doc = bundled_doc("hawkmoth");
    doc["morphology"]["r1_hat"] = 0.6;
    doc["morphology"]["r2_hat"] = 0.55;
    const auto msg = error_of(doc);
    EXPECT_NE(msg.find("invariant violation"), std::string::npos) << msg;
    EXPECT_NE(msg.find("r1_hat"), std::string::npos) << msg;
}

TEST(SpeciesIo, UnknownKeyRejected) {
    auto doc = bundled_doc("hawkmoth");
    doc["morphology"]["wingspan"] = 1.0;
    const auto msg = error_of(doc);
    EXPECT_NE(msg.find("morphology.wingspan: unknown key"), std::string::npos) << msg;
}

TEST(SpeciesIo, UnitTagMismatchRejected) {
    auto doc = bundled_doc("hawkmoth");
    doc["morphology"].erase("R_mm");
    doc["morphology"]["R_m"] = 0.0519;
    const auto msg = error_of(doc);
    EXPECT_NE(msg.find("morphology.R_m: unit-tag mismatch"), std::string::npos) << msg;
    EXPECT_NE(msg.find("R_mm"), std::string::npos) << msg;
}

TEST(SpeciesIo, SchemaErrors) {
    auto doc = bundled_doc("hawkmoth");
    doc["morphology"].erase("f_hz");
    EXPECT_NE(error_of(doc).find("morphology.f_hz: missing required field"), std::string::npos);
    doc = bundled_doc("hawkmoth");
    doc["auxiliary"]["d_hat"] = "wide";
    EXPECT_NE(error_of(doc).find("auxiliary.d_hat: expected a number"), std::string::npos);
    doc = bundled_doc("hawkmoth");
    doc["coefficients_override"]["kd2"] = -1.0;
    EXPECT_NE(error_of(doc).find("coefficients_override.kd2"), std::string::npos);
    doc = bundled_doc("hawkmoth");
    doc["esc"]["altitude"]["a"] = 0.0;
    EXPECT_NE(error_of(doc).find("esc.altitude.a"), std::string::npos);
}

TEST(SpeciesIo, DerivedWhenNoOverride) {
    auto doc = bundled_doc("bumblebee");
    doc.erase("coefficients_override");
    const auto rec = load_species(doc);
    EXPECT_EQ(rec.source, CoefficientSource::Derived);
    EXPECT_FALSE(rec.override_coefficients.has_value());
    EXPECT_NEAR(rec.coefficients.kd2 / 0.2826, 1.0, 0.01);
    EXPECT_NEAR(rec.coefficients.coupling_identity_ratio(), 1.0, 1e-14);
}

TEST(SpeciesIo, RoundTripIsIdempotent) {
    for (const auto& name : bundled_species()) {
        const auto first = to_json(find_species(name)).dump(2);
        const auto second = to_json(load_species(json::parse(first))).dump(2);
        EXPECT_EQ(first, second) << name;
        // Payload values survive the unit conversion.
        const auto orig = bundled_doc(name);
        const auto back = json::parse(first);
        for (const auto& [key, value] : orig["morphology"].items()) {
            EXPECT_NEAR(back["morphology"][key].get<double>(), value.get<double>(), 1e-9 * std::abs(value.get<double>()))
                << name << " " << key;
        }
        EXPECT_EQ(back["coefficients_override"], orig["coefficients_override"]) << name;
    }
}

TEST(SpeciesIo, UnknownSpecies) {
    try {
        (void)find_species("nosuch");
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("unknown species 'nosuch'"), std::string::npos);
        EXPECT_EQ(e.exit_code(), ExitCode::ConfigError);
    }
}

TEST(SpeciesIo, ExplicitPathAndChecksum) {
    const auto dir = std::filesystem::temp_directory_path() / "hover_es_species_io_test";
    std::filesystem::create_directories(dir);
    const auto path = dir / "custom.json";
    auto doc = bundled_doc("dragonfly");
    doc["name"] = "custom";
    {
        std::ofstream out(path, std::ios::binary);
        out << doc.dump(2);
    }
    const auto rec = find_species(path.string());
    EXPECT_EQ(rec.name(), "custom");
    EXPECT_EQ(rec.checksum, fnv1a_hex(doc.dump(2)));
    EXPECT_EQ(find_species("custom", dir).name(), "custom");
    std::filesystem::remove_all(dir);
}

TEST(SpeciesIo, Fnv1aKnownVectors) {
    EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
    EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
    EXPECT_EQ(fnv1a_hex("foobar"), "85944171f73967e8");
}

TEST(SpeciesIo, MalformedJson) {
    const auto dir = std::filesystem::temp_directory_path() / "hover_es_species_io_bad";
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "bad.json");
        out << "{ \"name\": ";
    }
    try {
        (void)find_species("bad", dir);
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("malformed JSON"), std::string::npos);
    }
    std::filesystem::remove_all(dir);
}
