#pragma once

#include <string>

#include "dss/vmc.hpp"

namespace dss {

// Binary container for training state. Layout:
//   bytes 0..7   magic "DSSCKPT1"
//   u32          format version (currently 1), little endian
//   u32          JSON header length in bytes
//   header       UTF-8 JSON: model config, step, master_seed,
//                optimizer_kind, param_count, has_moments
//   f64[P]       parameters, little endian
//   f64[2P]      adam moments (first then second), only if has_moments
void save_checkpoint(const std::string& path, const TrainState& state);

// Throws std::runtime_error on missing file, bad magic, version or
// size mismatch.
TrainState load_checkpoint(const std::string& path);

}  // namespace dss
