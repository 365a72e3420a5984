#pragma once

// Binary checkpoint file. All integers and floats are little-endian.
//
//   bytes  "STRATACK"                         magic
//   u32    version (= 1)
//   u64    step
//   u64    metadata byte length, then that many bytes of "key=value\n" lines
//   u32    tensor count T
//   T x {  u32 name length, name bytes (UTF-8)
//          u32 rank, rank x u64 dims
//          prod(dims) x f64 payload }
//   u8     optimizer flag (0 = absent, 1 = Adagrad)
//   if 1:  f64 learning_rate, f64 initial_accumulator,
//          T x prod(dims) x f64 accumulators, same tensor order as above
//
// Readers reject unknown magic/version and truncated files.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "strata/graph.hpp"
#include "strata/optim.hpp"

namespace strata {

struct Checkpoint {
  std::uint64_t step = 0;
  std::map<std::string, std::string> metadata;
  std::vector<std::string> names;
  std::vector<Tensor> tensors;
  std::optional<AdagradState> optimizer;
};

void save_checkpoint(const std::filesystem::path& path, std::uint64_t step,
                     const std::map<std::string, std::string>& metadata, const ParameterStore& params,
                     const AdagradState* optimizer);

Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Copies checkpoint tensors into `params`; names, order, and shapes must match.
void restore_parameters(const Checkpoint& ckpt, ParameterStore& params);

}  // namespace strata
