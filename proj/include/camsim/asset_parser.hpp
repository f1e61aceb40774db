#pragma once

#include <string>

#include "camsim/asset.hpp"

namespace camsim {

/// Parse an asset description in the documented PBRT-inspired subset
/// grammar (docs/formats.md). Statements: Asset, MakeNamedMaterial,
/// NamedMaterial, Shape "trianglemesh", Translate/Rotate/Scale/Transform,
/// AttributeBegin/AttributeEnd. Anything else is rejected with a
/// position-annotated ParseError. The result is fully validated.
AssetDescription parse_asset(const std::string& text,
                             const WavelengthGrid& grid = WavelengthGrid::standard());

AssetDescription load_asset(const std::string& path,
                            const WavelengthGrid& grid = WavelengthGrid::standard());

/// Canonical serialization: transforms baked, one Shape block per mesh.
/// parse_asset(serialize_asset(a)) is structurally identical to a.
std::string serialize_asset(const AssetDescription& asset);

}  // namespace camsim
