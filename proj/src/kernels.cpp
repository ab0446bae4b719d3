#include "grand/kernels.hpp"

#include <cstdint>

namespace grand::kernels {

namespace {

// Below this many multiply-adds a parallel region costs more than it saves.
constexpr std::size_t kParallelWork = 1 << 15;

inline void axpy(double a, const double* x, double* y, std::size_t n) {
#pragma omp simd
    for (std::size_t j = 0; j < n; ++j) y[j] += a * x[j];
}

inline double dot(const double* a, const double* b, std::size_t n) {
    double s = 0;
#pragma omp simd reduction(+ : s)
    for (std::size_t j = 0; j < n; ++j) s += a[j] * b[j];
    return s;
}

inline void forward_row(DenseShape s, const double* x, const double* w, const double* b,
                        double* y) {
    for (std::size_t j = 0; j < s.out; ++j) y[j] = b[j];
    for (std::size_t k = 0; k < s.in; ++k) {
        if (x[k] != 0.0) axpy(x[k], w + k * s.out, y, s.out);
    }
}

inline void param_row(DenseShape s, std::size_t k, const double* x, const double* dy, double* dw) {
    double* dst = dw + k * s.out;
    for (std::size_t i = 0; i < s.batch; ++i) {
        const double xi = x[i * s.in + k];
        if (xi != 0.0) axpy(xi, dy + i * s.out, dst, s.out);
    }
}

inline void input_row(DenseShape s, const double* dy, const double* w, double* dx) {
    for (std::size_t k = 0; k < s.in; ++k) dx[k] = dot(dy, w + k * s.out, s.out);
}

inline void bias_grad(DenseShape s, const double* dy, double* db) {
    for (std::size_t i = 0; i < s.batch; ++i) axpy(1.0, dy + i * s.out, db, s.out);
}

}  // namespace

namespace serial {

void dense_forward(DenseShape s, std::span<const double> x, std::span<const double> w,
                   std::span<const double> b, std::span<double> y) {
    for (std::size_t i = 0; i < s.batch; ++i)
        forward_row(s, x.data() + i * s.in, w.data(), b.data(), y.data() + i * s.out);
}

void dense_backward_params(DenseShape s, std::span<const double> x, std::span<const double> dy,
                           std::span<double> dw, std::span<double> db) {
    for (std::size_t k = 0; k < s.in; ++k) param_row(s, k, x.data(), dy.data(), dw.data());
    bias_grad(s, dy.data(), db.data());
}

void dense_backward_input(DenseShape s, std::span<const double> dy, std::span<const double> w,
                          std::span<double> dx) {
    for (std::size_t i = 0; i < s.batch; ++i)
        input_row(s, dy.data() + i * s.out, w.data(), dx.data() + i * s.in);
}

}  // namespace serial

namespace parallel {

void dense_forward(DenseShape s, std::span<const double> x, std::span<const double> w,
                   std::span<const double> b, std::span<double> y) {
    const auto n = static_cast<std::int64_t>(s.batch);
#pragma omp parallel for schedule(static) if (s.batch * s.in * s.out >= kParallelWork)
    for (std::int64_t i = 0; i < n; ++i)
        forward_row(s, x.data() + i * s.in, w.data(), b.data(), y.data() + i * s.out);
}

void dense_backward_params(DenseShape s, std::span<const double> x, std::span<const double> dy,
                           std::span<double> dw, std::span<double> db) {
    const auto n = static_cast<std::int64_t>(s.in);
#pragma omp parallel for schedule(static) if (s.batch * s.in * s.out >= kParallelWork)
    for (std::int64_t k = 0; k < n; ++k)
        param_row(s, static_cast<std::size_t>(k), x.data(), dy.data(), dw.data());
    bias_grad(s, dy.data(), db.data());
}

void dense_backward_input(DenseShape s, std::span<const double> dy, std::span<const double> w,
                          std::span<double> dx) {
    const auto n = static_cast<std::int64_t>(s.batch);
#pragma omp parallel for schedule(static) if (s.batch * s.in * s.out >= kParallelWork)
    for (std::int64_t i = 0; i < n; ++i)
        input_row(s, dy.data() + i * s.out, w.data(), dx.data() + i * s.in);
}

}  // namespace parallel

}  // namespace grand::kernels
