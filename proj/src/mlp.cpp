#include "coaching/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "coaching/kernels.hpp"

namespace coaching {

Mlp::Mlp(std::vector<std::size_t> layer_sizes) : sizes_(std::move(layer_sizes)) {
  if (sizes_.size() < 2) throw std::invalid_argument("Mlp needs at least two layer sizes");
  if (std::find(sizes_.begin(), sizes_.end(), std::size_t{0}) != sizes_.end()) {
    throw std::invalid_argument("Mlp layer sizes must be positive");
  }
  offsets_.resize(num_layers());
  for (std::size_t l = 0; l < num_layers(); ++l) {
    offsets_[l] = param_count_;
    param_count_ += sizes_[l] * sizes_[l + 1] + sizes_[l + 1];
  }
}

std::vector<double> Mlp::init_parameters(CounterRng& rng, double hidden_gain,
                                         double output_gain) const {
  std::vector<double> params(param_count_, 0.0);
  for (std::size_t l = 0; l < num_layers(); ++l) {
    const double gain = (l + 1 == num_layers()) ? output_gain : hidden_gain;
    const double scale = gain / std::sqrt(static_cast<double>(sizes_[l]));
    const std::size_t n = sizes_[l] * sizes_[l + 1];
    for (std::size_t i = 0; i < n; ++i) params[offsets_[l] + i] = scale * rng.normal();
  }
  return params;
}

void Mlp::forward(std::span<const double> params, std::span<const double> input,
                  std::size_t batch, Cache& cache) const {
  if (params.size() != param_count_) throw std::invalid_argument("Mlp::forward: parameter size");
  if (input.size() != batch * input_dim()) throw std::invalid_argument("Mlp::forward: input size");
  cache.batch = batch;
  cache.activations.resize(sizes_.size());
  cache.activations[0].assign(input.begin(), input.end());
  for (std::size_t l = 0; l < num_layers(); ++l) {
    const std::size_t in = sizes_[l];
    const std::size_t out = sizes_[l + 1];
    auto& y = cache.activations[l + 1];
    y.resize(batch * out);
    kernels::dense_forward(cache.activations[l], params.subspan(weight_offset(l), in * out),
                           params.subspan(bias_offset(l), out), y, batch, in, out);
    if (l + 1 < num_layers()) kernels::tanh_inplace(y);
  }
}

void Mlp::backward(std::span<const double> params, const Cache& cache,
                   std::span<const double> d_output, std::span<double> grad) const {
  const std::size_t batch = cache.batch;
  if (grad.size() != param_count_) throw std::invalid_argument("Mlp::backward: gradient size");
  if (d_output.size() != batch * output_dim()) {
    throw std::invalid_argument("Mlp::backward: d_output size");
  }
  std::vector<double> delta(d_output.begin(), d_output.end());
  std::vector<double> next;
  for (std::size_t l = num_layers(); l-- > 0;) {
    const std::size_t in = sizes_[l];
    const std::size_t out = sizes_[l + 1];
    kernels::dense_backward_params(cache.activations[l], delta,
                                   grad.subspan(weight_offset(l), in * out),
                                   grad.subspan(bias_offset(l), out), batch, in, out);
    if (l == 0) break;
    next.resize(batch * in);
    kernels::dense_backward_input(delta, params.subspan(weight_offset(l), in * out), next, batch,
                                  in, out);
    // Hidden activations are tanh outputs.
    kernels::tanh_backward(cache.activations[l], next, next);
    std::swap(delta, next);
  }
}

}  // namespace coaching
