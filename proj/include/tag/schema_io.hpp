#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "tag/forward_model.hpp"
#include "tag/hadar.hpp"
#include "tag/slot_solver.hpp"

namespace tag {

inline constexpr const char* kSceneMagic = "SLOTSCENE/1";

/// Parse errors are Config errors naming the offending field path.
nlohmann::json load_json(const std::filesystem::path& path);

SceneDescriptor scene_descriptor_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SceneDescriptor& desc);

SlotConfig slot_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SlotConfig& config);

HadarConfig hadar_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const HadarConfig& config);

TesConfig tes_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TesConfig& config);

/// A config document holds SlotConfig fields at top level and optional
/// "hadar" and "tes" sections.
struct RunConfig {
  SlotConfig slot;
  HadarConfig hadar;
  TesConfig tes;
};
RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& config);

/// `{"materials": [{"name", "wavenumbers", "emissivity"}]}` or a bare array.
/// Curves on another grid are linearly resampled and the library is flagged.
MaterialLibrary library_from_json(const nlohmann::json& j, const SpectralGrid& grid);
nlohmann::json to_json(const MaterialLibrary& library, const SpectralGrid& grid);

/// Single-pixel truth: temperature, view_factor, and one of
/// "emissivity" (per band), "beta" (spline coefficients) or "constant".
/// The grid comes from "grid" {start, stop, step} or "wavenumbers".
struct TruthSpec {
  SpectralGrid grid;
  PixelTruth truth;
};
TruthSpec truth_from_json(const nlohmann::json& j);

/// Scene file: descriptor echo plus every ground-truth field at full precision.
void write_scene(const SyntheticScene& scene, const SceneDescriptor& desc, const std::filesystem::path& path);
SyntheticScene read_scene(const std::filesystem::path& path);

}  // namespace tag
