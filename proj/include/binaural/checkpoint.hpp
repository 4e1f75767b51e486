// Copyright 2026 The binaural Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Little-endian checkpoint container:
//
//   char[4]  magic "BNCK"
//   u32      version (1)
//   u32      header length, then that many bytes of key=value text
//   u32      tensor count
//   per tensor:
//     u32 name length, name bytes, u32 rank, u32 dims[rank],
//     f32 values[prod(dims)]

#ifndef BINAURAL_CHECKPOINT_HPP_
#define BINAURAL_CHECKPOINT_HPP_

#include <string>
#include <vector>

#include "binaural/tensor.hpp"

namespace binaural {

inline constexpr char kCheckpointMagic[4] = {'B', 'N', 'C', 'K'};
inline constexpr unsigned kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  ad::Shape shape;
  std::vector<float> values;
};

struct Checkpoint {
  std::string header;  // architecture config as key=value lines
  std::vector<NamedTensor> tensors;

  const NamedTensor* find(const std::string& name) const;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace binaural

#endif  // BINAURAL_CHECKPOINT_HPP_
