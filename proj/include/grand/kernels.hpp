#pragma once

#include <cstddef>
#include <span>

// Dense-layer kernels for the classifier. Weights are stored input-major
// (W[k * out + j] connects input k to output j); batches are row-major.
//
// The parallel variants split work by output row, and every output element
// is produced by one thread with the same operation order as the serial
// variant, so both give bit-identical results for any thread count.
namespace grand::kernels {

struct DenseShape {
    std::size_t batch;
    std::size_t in;
    std::size_t out;
};

namespace serial {

/// Y = X W + b
void dense_forward(DenseShape s, std::span<const double> x, std::span<const double> w,
                   std::span<const double> b, std::span<double> y);
/// dW += X^T dY, db += column sums of dY
void dense_backward_params(DenseShape s, std::span<const double> x, std::span<const double> dy,
                           std::span<double> dw, std::span<double> db);
/// dX = dY W^T
void dense_backward_input(DenseShape s, std::span<const double> dy, std::span<const double> w,
                          std::span<double> dx);

}  // namespace serial

namespace parallel {

void dense_forward(DenseShape s, std::span<const double> x, std::span<const double> w,
                   std::span<const double> b, std::span<double> y);
void dense_backward_params(DenseShape s, std::span<const double> x, std::span<const double> dy,
                           std::span<double> dw, std::span<double> db);
void dense_backward_input(DenseShape s, std::span<const double> dy, std::span<const double> w,
                          std::span<double> dx);

}  // namespace parallel

}  // namespace grand::kernels
