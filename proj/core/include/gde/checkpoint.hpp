#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gde/param_store.hpp"

namespace gde {

/// Versioned binary checkpoint container:
///   bytes 0-7   magic "GDEFCKP1"
///   u32         version (little-endian)
///   u64         JSON header length, then that many bytes
///   u64         parameter count, then raw little-endian IEEE-754 doubles
/// The JSON header holds a caller-supplied model descriptor, the view table
/// and the RNG seeds. Round-trips are bit-exact on theta.
struct Checkpoint {
  std::uint32_t version = 1;
  std::string descriptor;  // JSON text
  std::vector<std::pair<std::string, ViewInfo>> views;
  std::vector<std::uint64_t> seeds;
  std::vector<double> theta;
};

void save_checkpoint(const std::string& path, const std::string& descriptor_json,
                     const ParamStore& params, const std::vector<std::uint64_t>& seeds);

Checkpoint load_checkpoint(const std::string& path);

/// Restores theta into a store whose view table matches the checkpoint.
void restore_params(const Checkpoint& ck, ParamStore& params);

}  // namespace gde
