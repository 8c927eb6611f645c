#pragma once

// Dense-layer kernels for batched MLP evaluation. Matrices are row-major:
// inputs are batch x in, weights are out x in, outputs are batch x out.
//
// The parallel versions split work only over independent output elements and
// keep every reduction in a fixed serial order, so results are bit-identical
// to the serial reference versions for any thread count.

#include <cstddef>
#include <span>

namespace coaching::kernels {

// y = x w^T + b
void dense_forward(std::span<const double> x, std::span<const double> w,
                   std::span<const double> b, std::span<double> y, std::size_t batch,
                   std::size_t in, std::size_t out);

// dx = dy w
void dense_backward_input(std::span<const double> dy, std::span<const double> w,
                          std::span<double> dx, std::size_t batch, std::size_t in,
                          std::size_t out);

// dw += dy^T x, db += column sums of dy
void dense_backward_params(std::span<const double> x, std::span<const double> dy,
                           std::span<double> dw, std::span<double> db, std::size_t batch,
                           std::size_t in, std::size_t out);

void tanh_inplace(std::span<double> v);

// dz = dy * (1 - y^2), with y = tanh(z)
void tanh_backward(std::span<const double> y, std::span<const double> dy, std::span<double> dz);

namespace reference {

void dense_forward(std::span<const double> x, std::span<const double> w,
                   std::span<const double> b, std::span<double> y, std::size_t batch,
                   std::size_t in, std::size_t out);
void dense_backward_input(std::span<const double> dy, std::span<const double> w,
                          std::span<double> dx, std::size_t batch, std::size_t in,
                          std::size_t out);
void dense_backward_params(std::span<const double> x, std::span<const double> dy,
                           std::span<double> dw, std::span<double> db, std::size_t batch,
                           std::size_t in, std::size_t out);
void tanh_inplace(std::span<double> v);
void tanh_backward(std::span<const double> y, std::span<const double> dy, std::span<double> dz);

}  // namespace reference
}  // namespace coaching::kernels
