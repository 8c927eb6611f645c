#include "coaching/kernels.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace coaching::kernels {
namespace {

// Below this many multiply-adds the thread fork costs more than it saves.
constexpr std::size_t kParallelThreshold = 1 << 15;

void check_sizes(std::size_t x_size, std::size_t w_size, std::size_t y_size, std::size_t batch,
                 std::size_t in, std::size_t out) {
  if (x_size < batch * in || w_size < out * in || y_size < batch * out) {
    throw std::invalid_argument("dense kernel: buffer too small for batch/in/out");
  }
}

}  // namespace

void dense_forward(std::span<const double> x, std::span<const double> w,
                   std::span<const double> b, std::span<double> y, std::size_t batch,
                   std::size_t in, std::size_t out) {
  check_sizes(x.size(), w.size(), y.size(), batch, in, out);
  const double* xp = x.data();
  const double* wp = w.data();
  const double* bp = b.data();
  double* yp = y.data();
  const auto n = static_cast<std::int64_t>(batch);
#pragma omp parallel for schedule(static) if (batch * in * out > kParallelThreshold)
  for (std::int64_t r = 0; r < n; ++r) {
    const double* xr = xp + r * in;
    double* yr = yp + r * out;
    for (std::size_t o = 0; o < out; ++o) {
      const double* wo = wp + o * in;
      double acc = bp[o];
      for (std::size_t i = 0; i < in; ++i) acc += xr[i] * wo[i];
      yr[o] = acc;
    }
  }
}

void dense_backward_input(std::span<const double> dy, std::span<const double> w,
                          std::span<double> dx, std::size_t batch, std::size_t in,
                          std::size_t out) {
  check_sizes(dx.size(), w.size(), dy.size(), batch, in, out);
  const double* dyp = dy.data();
  const double* wp = w.data();
  double* dxp = dx.data();
  const auto n = static_cast<std::int64_t>(batch);
#pragma omp parallel for schedule(static) if (batch * in * out > kParallelThreshold)
  for (std::int64_t r = 0; r < n; ++r) {
    const double* dyr = dyp + r * out;
    double* dxr = dxp + r * in;
    for (std::size_t i = 0; i < in; ++i) dxr[i] = 0.0;
    for (std::size_t o = 0; o < out; ++o) {
      const double g = dyr[o];
      const double* wo = wp + o * in;
      for (std::size_t i = 0; i < in; ++i) dxr[i] += g * wo[i];
    }
  }
}

void dense_backward_params(std::span<const double> x, std::span<const double> dy,
                           std::span<double> dw, std::span<double> db, std::size_t batch,
                           std::size_t in, std::size_t out) {
  check_sizes(x.size(), dw.size(), dy.size(), batch, in, out);
  const double* xp = x.data();
  const double* dyp = dy.data();
  double* dwp = dw.data();
  double* dbp = db.data();
  const auto n_out = static_cast<std::int64_t>(out);
  // Each thread owns whole rows of dw; the batch sum runs in order.
#pragma omp parallel for schedule(static) if (batch * in * out > kParallelThreshold)
  for (std::int64_t o = 0; o < n_out; ++o) {
    double* dwo = dwp + o * in;
    double bias_acc = 0.0;
    for (std::size_t r = 0; r < batch; ++r) {
      const double g = dyp[r * out + o];
      if (g == 0.0) continue;
      const double* xr = xp + r * in;
      for (std::size_t i = 0; i < in; ++i) dwo[i] += g * xr[i];
      bias_acc += g;
    }
    dbp[o] += bias_acc;
  }
}

void tanh_inplace(std::span<double> v) {
  double* p = v.data();
  const auto n = static_cast<std::int64_t>(v.size());
#pragma omp parallel for schedule(static) if (v.size() > kParallelThreshold)
  for (std::int64_t i = 0; i < n; ++i) p[i] = std::tanh(p[i]);
}

void tanh_backward(std::span<const double> y, std::span<const double> dy, std::span<double> dz) {
  const auto n = static_cast<std::int64_t>(y.size());
#pragma omp parallel for schedule(static) if (y.size() > kParallelThreshold)
  for (std::int64_t i = 0; i < n; ++i) dz[i] = dy[i] * (1.0 - y[i] * y[i]);
}

namespace reference {

void dense_forward(std::span<const double> x, std::span<const double> w,
                   std::span<const double> b, std::span<double> y, std::size_t batch,
                   std::size_t in, std::size_t out) {
  check_sizes(x.size(), w.size(), y.size(), batch, in, out);
  for (std::size_t r = 0; r < batch; ++r) {
    for (std::size_t o = 0; o < out; ++o) {
      double acc = b[o];
      for (std::size_t i = 0; i < in; ++i) acc += x[r * in + i] * w[o * in + i];
      y[r * out + o] = acc;
    }
  }
}

void dense_backward_input(std::span<const double> dy, std::span<const double> w,
                          std::span<double> dx, std::size_t batch, std::size_t in,
                          std::size_t out) {
  check_sizes(dx.size(), w.size(), dy.size(), batch, in, out);
  for (std::size_t r = 0; r < batch; ++r) {
    for (std::size_t i = 0; i < in; ++i) dx[r * in + i] = 0.0;
    for (std::size_t o = 0; o < out; ++o) {
      for (std::size_t i = 0; i < in; ++i) dx[r * in + i] += dy[r * out + o] * w[o * in + i];
    }
  }
}

void dense_backward_params(std::span<const double> x, std::span<const double> dy,
                           std::span<double> dw, std::span<double> db, std::size_t batch,
                           std::size_t in, std::size_t out) {
  check_sizes(x.size(), dw.size(), dy.size(), batch, in, out);
  for (std::size_t o = 0; o < out; ++o) {
    double bias_acc = 0.0;
    for (std::size_t r = 0; r < batch; ++r) {
      const double g = dy[r * out + o];
      if (g == 0.0) continue;
      for (std::size_t i = 0; i < in; ++i) dw[o * in + i] += g * x[r * in + i];
      bias_acc += g;
    }
    db[o] += bias_acc;
  }
}

void tanh_inplace(std::span<double> v) {
  for (double& e : v) e = std::tanh(e);
}

void tanh_backward(std::span<const double> y, std::span<const double> dy, std::span<double> dz) {
  for (std::size_t i = 0; i < y.size(); ++i) dz[i] = dy[i] * (1.0 - y[i] * y[i]);
}

}  // namespace reference
}  // namespace coaching::kernels
