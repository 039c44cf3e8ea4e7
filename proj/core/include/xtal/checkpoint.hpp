#pragma once

#include <string>

#include "xtal/parameters.hpp"
#include "xtal/score_diffusion.hpp"

namespace xtal {

/// Trained weights with the run configuration that produced them.
///
/// Binary layout (little-endian): magic "XTALCKPT", u32 version, u64 config
/// length + config text, u64 level count + sigma_hat doubles, u64 segment
/// count, per segment {u64 name length, name, i32 rows, i32 cols}, then u64
/// value count + raw doubles in segment order.
struct Checkpoint {
  std::string config_text;
  EdgeStd edge_std;
  Parameters params;
};

inline constexpr unsigned kCheckpointVersion = 1;

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace xtal
