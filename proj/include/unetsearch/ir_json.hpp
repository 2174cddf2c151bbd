#pragma once

#include <json.hpp>

#include "unetsearch/archspace.hpp"

namespace unetsearch {

inline constexpr const char* kArchIrSchema = "unetsearch.arch_ir/1";

/// Versioned IR document consumed by training workers and visualizers.
/// Field-by-field description in docs/schemas.md.
nlohmann::json ir_to_json(const ArchitectureIR& ir);

/// Throws ParseError on a wrong schema tag or malformed fields. The result
/// is not validated; call validate() on it.
ArchitectureIR ir_from_json(const nlohmann::json& doc);

}  // namespace unetsearch
