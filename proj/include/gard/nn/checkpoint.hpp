#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "gard/nn/optim.hpp"

namespace gard::nn {

/// Contents of a checkpoint file. Text layout, one record per line:
///
///   gard-checkpoint 1
///   meta <key> <value to end of line>          (sorted by key)
///   tensor <name> <rows> <cols>
///   <rows*cols row-major values in C99 hex-float notation, space separated>
///   end
///
/// Hex floats make values round-trip bit-exactly. Names contain no whitespace.
struct Checkpoint {
  std::map<std::string, std::string> meta;
  std::vector<std::pair<std::string, Tensor>> tensors;

  const Tensor& tensor(const std::string& name) const;
  bool has_tensor(const std::string& name) const;
};

inline constexpr int kCheckpointVersion = 1;

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path);
std::string checkpoint_to_string(const Checkpoint& ckpt);
Checkpoint checkpoint_from_string(const std::string& text);

/// Parameters are stored as "<prefix>/<param name>".
void store_parameters(Checkpoint& ckpt, const std::string& prefix, const ParameterSet& params);
void load_parameters(const Checkpoint& ckpt, const std::string& prefix, ParameterSet& params);

/// Adam moments are stored as "<prefix>.m/<param>" and "<prefix>.v/<param>",
/// the step counter and hyperparameters as meta entries under <prefix>.
void store_adam(Checkpoint& ckpt, const std::string& prefix, const ParameterSet& params,
                const AdamState& state);
void load_adam(const Checkpoint& ckpt, const std::string& prefix, const ParameterSet& params,
               AdamState& state);

}  // namespace gard::nn
