#pragma once

#include <string>

#include "esp/network.hpp"

namespace esp {

// Checkpoint layout, all little-endian:
//   magic "ESPC" | u32 version | u32 input_width | u32 block_count |
//   u32 width per block | u32 class_count | f64 parameters in enumeration
//   order.
// Covers single-layer relu blocks plus the identity decoder, which is the
// shape every experiment in the repo uses.
void save_checkpoint(const BlockNetwork& net, const std::string& path);
BlockNetwork load_checkpoint(const std::string& path);

}  // namespace esp
