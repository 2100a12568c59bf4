#pragma once

#include <istream>
#include <ostream>
#include <string>

#include "asbci/network.hpp"

namespace asbci {

// Versioned flat binary model format: magic bytes `ASMT`, format version
// u32, an architecture section, then per-block tensor records
// (block-index u32, tensor-rank u32, dims as u32, values as 64-bit
// little-endian floats) in a fixed slot order.
void save_model(std::ostream& out, const ModelState& state);
ModelState load_model(std::istream& in);

void save_model_file(const std::string& path, const ModelState& state);
ModelState load_model_file(const std::string& path);

}  // namespace asbci
