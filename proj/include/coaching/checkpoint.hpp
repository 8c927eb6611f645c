#pragma once

// Agent checkpoints are line-oriented text: a CSV header describing every
// array, then the array values one per line in %.17g (exact round trip).
//
//   coaching-checkpoint,1
//   policy_layers,<n0>,<n1>,...      policy mean MLP layer sizes
//   value_layers,<n0>,<n1>,...       value MLP layer sizes
//   normalizer,<dim>,<count>
//   policy,<k>      then k values: MLP layers in order, each W (out x in,
//                   row-major) followed by b, then the log-std
//   value,<k>       then k values, same layer layout
//   normalizer_mean,<dim>   then dim values
//   normalizer_m2,<dim>     then dim values
//
// Training hyperparameters are not stored; a loaded agent uses the
// supplied PpoConfig with hidden_width taken from the stored shapes.

#include <filesystem>
#include <iosfwd>

#include "coaching/ppo.hpp"

namespace coaching {

void write_checkpoint(std::ostream& out, const PpoAgent& agent);
void save_checkpoint(const std::filesystem::path& path, const PpoAgent& agent);

/// Throws std::runtime_error with the offending line number on malformed input.
PpoAgent read_checkpoint(std::istream& in, const PpoConfig& cfg = {});
PpoAgent load_checkpoint(const std::filesystem::path& path, const PpoConfig& cfg = {});

}  // namespace coaching
