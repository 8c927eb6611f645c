#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "coaching/rng.hpp"

namespace coaching {

/// Architecture of a tanh MLP with a linear output layer. Parameters live in
/// a caller-owned flat vector laid out layer by layer as [W (out x in,
/// row-major), b (out)].
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<std::size_t> layer_sizes);

  const std::vector<std::size_t>& layer_sizes() const { return sizes_; }
  std::size_t input_dim() const { return sizes_.front(); }
  std::size_t output_dim() const { return sizes_.back(); }
  std::size_t num_layers() const { return sizes_.size() - 1; }
  std::size_t parameter_count() const { return param_count_; }

  std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }
  std::size_t bias_offset(std::size_t layer) const {
    return offsets_[layer] + sizes_[layer] * sizes_[layer + 1];
  }

  /// Gaussian weights scaled by gain/sqrt(fan_in); the last layer uses
  /// `output_gain`. Biases start at zero.
  std::vector<double> init_parameters(CounterRng& rng, double hidden_gain, double output_gain) const;

  // Activations per layer; activations[0] is the input.
  struct Cache {
    std::size_t batch = 0;
    std::vector<std::vector<double>> activations;
    std::span<const double> output() const { return activations.back(); }
  };

  void forward(std::span<const double> params, std::span<const double> input, std::size_t batch,
               Cache& cache) const;

  /// Accumulates d(loss)/d(params) into `grad` given d(loss)/d(output).
  void backward(std::span<const double> params, const Cache& cache,
                std::span<const double> d_output, std::span<double> grad) const;

 private:
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> offsets_;
  std::size_t param_count_ = 0;
};

}  // namespace coaching
