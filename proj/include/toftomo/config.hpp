#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "toftomo/io.hpp"
#include "toftomo/scenario.hpp"

namespace toftomo::config {

using json = io::json;

inline constexpr int schema_version = 1;

// Built-in defaults; config/paper-defaults.json carries the same values with per-key notes.
json defaults();

// Overlays `user` on the defaults. Unknown keys and type mismatches throw ConfigError naming the
// dotted path, e.g. "trap.lambda". The free-form "notes" object is accepted and ignored.
json resolve(const json& user);
json resolve_file(const io::fs::path& path);

// "a.b.c=value"; value is parsed as JSON when possible, otherwise taken as a string.
void apply_override(json& doc, const std::string& assignment);

OscillatorSpec spec(const json& doc);
TrapModel trap(const json& doc);
MleConfig mle(const json& doc);
MeasurementChain chain(const json& doc);
ScenarioConfig scenario(const json& doc);
BootstrapConfig bootstrap(const json& doc);
int bootstrap_replicas(const json& doc);
std::uint64_t seed(const json& doc);

struct RobustnessSetup {
    RobustnessConfig config;  // trap and displacement already rescaled
    double grid_spacing = 0.05;
    TrapModel fitted;
    double fitted_displacement = 0.0;
    double depth_ratio = 1.0;
    double displacement_ratio = 1.0;
};
RobustnessSetup robustness(const json& doc);

NoiseBiasStudyConfig noise_bias(const json& doc);

}  // namespace toftomo::config
