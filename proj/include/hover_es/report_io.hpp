#pragma once

// JSON views of stability reports and the metadata block embedded in every output file.

#include <string>
#include <vector>

#include "hover_es/sim.hpp"
#include "hover_es/stability.hpp"

#ifndef HOVER_ES_VERSION
#define HOVER_ES_VERSION "0.0.0"
#endif

namespace hover_es {

inline constexpr const char* kToolVersion = HOVER_ES_VERSION;

inline nlohmann::ordered_json complex_json(const Complex& c) {
    return {{"re", c.real()}, {"im", c.imag()}};
}

inline nlohmann::ordered_json to_json(const StabilityReport& r) {
    using sim_detail::finite_or_null;
    nlohmann::ordered_json j;
    j["species"] = r.species;
    j["objective"] = std::string(to_string(r.objective));
    const auto& e = r.equilibrium.state;
    j["equilibrium"] = {{"w", e[0]}, {"phidot", e[1]}, {"tau_hat", e[2]}};
    j["residual_norm"] = r.equilibrium.residual_norm;
    auto jac = nlohmann::ordered_json::array();
    for (const auto& row : r.jacobian) {
        for (double v : row) jac.push_back(v);
    }
    j["jacobian"] = jac;
    auto ev = nlohmann::ordered_json::array();
    for (const auto& l : r.eigenvalues) ev.push_back(complex_json(l));
    j["eigenvalues"] = ev;
    j["verdict"] = r.stable ? "stable" : "unstable";
    j["n_smooth"] = r.n_smooth;
    j["a_placement"] = std::string(to_string(r.placement));
    j["tauhat_law"] = std::string(to_string(r.tauhat_law));
    j["scaled_residual"] = r.equilibrium.scaled_residual;
    j["newton_seed"] = {r.equilibrium.seed[0], r.equilibrium.seed[1], r.equilibrium.seed[2]};
    j["newton_iterations"] = r.equilibrium.iterations;
    j["condition_estimate"] = finite_or_null(r.condition);
    j["ill_conditioned"] = r.ill_conditioned;
    j["companion_deviation"] = r.companion_deviation;
    j["charpoly_residual"] = r.charpoly_residual;
    return j;
}

/// Metadata block: tool version, checksums of the species files used, and the
/// fully resolved configuration.
inline nlohmann::ordered_json metadata(const std::vector<const SpeciesRecord*>& species,
                                       const nlohmann::ordered_json& config) {
    nlohmann::ordered_json m;
    m["tool"] = "hover-es";
    m["version"] = kToolVersion;
    nlohmann::ordered_json sums = nlohmann::ordered_json::object();
    for (const auto* s : species) sums[s->name()] = s->checksum.empty() ? "inline" : s->checksum;
    m["species_checksums"] = sums;
    m["config"] = config;
    m["tool_defaults"] =
        "integration step, run duration, trailing window and settling tolerances are this tool's defaults";
    return m;
}

}  // namespace hover_es
