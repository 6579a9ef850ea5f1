#pragma once

#include <json.hpp>

#include "gfpeel/levy.hpp"

namespace gfpeel {

// Document layout:
//   {"sigma2": .., "b": .., "killing": .., "alpha": ..,
//    "compensation": "exponential" | "truncated",        (optional)
//    "measure": {"kind": "atoms", "atoms": [{"position": .., "mass": ..}, ..]}
//             | {"kind": "density", "family": "stable_theta", "theta": .., "atoms": [..]?}
//             | {"kind": "density", "family": "shifted", "omega": .., "base": <measure>}}
// Malformed documents raise SchemaError naming the field.
nlohmann::json measure_to_json(const LevyMeasure& m);
LevyMeasure measure_from_json(const nlohmann::json& j, const std::string& path = "measure");

nlohmann::json characteristics_to_json(const LevyCharacteristics& chars);
LevyCharacteristics characteristics_from_json(const nlohmann::json& j);

}  // namespace gfpeel
