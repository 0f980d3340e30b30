#pragma once

#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "headsynth/errors.hpp"

namespace headsynth {

// Dense row-major double tensor. Training tensors are small (tens of KB), so
// this favours clarity over views; the hot matrix kernels below take raw
// pointers with leading dimensions.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> values;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> s) : shape(std::move(s)) {
        values.assign(numel_of(shape), 0.0);
    }

    static std::size_t numel_of(const std::vector<std::size_t>& s) {
        return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
    }

    static Tensor zeros(std::initializer_list<std::size_t> s) { return Tensor(std::vector<std::size_t>(s)); }

    std::size_t numel() const { return values.size(); }
    double* data() { return values.data(); }
    const double* data() const { return values.data(); }

    double& at(std::size_t i, std::size_t j) { return values[i * shape[1] + j]; }
    double at(std::size_t i, std::size_t j) const { return values[i * shape[1] + j]; }
    double& at(std::size_t i, std::size_t j, std::size_t k) {
        return values[(i * shape[1] + j) * shape[2] + k];
    }
    double at(std::size_t i, std::size_t j, std::size_t k) const {
        return values[(i * shape[1] + j) * shape[2] + k];
    }

    void fill(double v) { std::fill(values.begin(), values.end(), v); }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (!a.same_shape(b)) throw ArgumentError(std::string(what) + ": tensor shape mismatch");
}

// --- Matrix kernels. All row-major with explicit leading dimensions so gate
// slices of a packed buffer can be addressed in place.

// C[m x n] (+)= A[m x k] * B[k x n]; axpy over rows of B for contiguous FMA.
inline void gemm_nn(const double* a, std::size_t lda, const double* b, std::size_t ldb, double* c,
                    std::size_t ldc, std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c + i * ldc;
        if (!accumulate)
            for (std::size_t j = 0; j < n; ++j) crow[j] = 0.0;
        const double* arow = a + i * lda;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = arow[p];
            const double* brow = b + p * ldb;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// C[m x n] (+)= A[m x k] * B[n x k]^T; dot products of contiguous rows.
inline void gemm_nt(const double* a, std::size_t lda, const double* b, std::size_t ldb, double* c,
                    std::size_t ldc, std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * lda;
        double* crow = c + i * ldc;
        for (std::size_t j = 0; j < n; ++j) {
            const double* brow = b + j * ldb;
            double acc = 0.0;
            for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
            if (accumulate)
                crow[j] += acc;
            else
                crow[j] = acc;
        }
    }
}

// C[k x n] (+)= A[m x k]^T * B[m x n]; gradient accumulation kernel.
inline void gemm_tn(const double* a, std::size_t lda, const double* b, std::size_t ldb, double* c,
                    std::size_t ldc, std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
    if (!accumulate)
        for (std::size_t j = 0; j < k; ++j)
            for (std::size_t q = 0; q < n; ++q) c[j * ldc + q] = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * lda;
        const double* brow = b + i * ldb;
        for (std::size_t j = 0; j < k; ++j) {
            const double av = arow[j];
            double* crow = c + j * ldc;
            for (std::size_t q = 0; q < n; ++q) crow[q] += av * brow[q];
        }
    }
}

} // namespace headsynth
