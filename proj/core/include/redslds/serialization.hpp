#pragma once

#include <string>

#include "redslds/gibbs.hpp"
#include "redslds/model.hpp"

namespace redslds {

/// JSON encodings. Doubles round-trip exactly; non-finite values are written
/// as the strings "inf", "-inf" and "nan".
std::string config_to_json(const ModelConfig& config);
ModelConfig config_from_json(const std::string& text);

std::string params_to_json(const ModelParams& params);
ModelParams params_from_json(const std::string& text);

std::string chain_state_to_json(const ChainState& state);
ChainState chain_state_from_json(const std::string& text);

/// Checkpoint container: format version, model config and the full FitResult.
struct Checkpoint {
  ModelConfig config;
  FitResult result;
};

inline constexpr int kCheckpointVersion = 1;

std::string checkpoint_to_json(const Checkpoint& checkpoint);
Checkpoint checkpoint_from_json(const std::string& text);

}  // namespace redslds
