#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "concord/error.hpp"

namespace concord {

// Shape-tagged row-major array of 64-bit reals. The single numeric currency
// of the library: once returned from an operation a Tensor is treated as an
// immutable value and may be shared freely across threads.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::vector<std::size_t> s, std::vector<double> d)
        : shape(std::move(s)), data(std::move(d)) {}

    static std::size_t count(const std::vector<std::size_t>& shape) {
        std::size_t n = 1;
        for (std::size_t d : shape) n *= d;
        return n;
    }

    static Tensor zeros(std::vector<std::size_t> shape) {
        std::size_t n = count(shape);
        return Tensor(std::move(shape), std::vector<double>(n, 0.0));
    }

    static Tensor full(std::vector<std::size_t> shape, double value) {
        std::size_t n = count(shape);
        return Tensor(std::move(shape), std::vector<double>(n, value));
    }

    static Tensor vector_of(std::vector<double> values) {
        std::size_t n = values.size();
        return Tensor({n}, std::move(values));
    }

    static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
        if (values.size() != rows * cols)
            throw DimensionError("matrix: " + std::to_string(values.size()) +
                                 " values for " + std::to_string(rows) + "x" +
                                 std::to_string(cols));
        return Tensor({rows, cols}, std::move(values));
    }

    static Tensor identity(std::size_t n) {
        Tensor t = zeros({n, n});
        for (std::size_t i = 0; i < n; ++i) t.data[i * n + i] = 1.0;
        return t;
    }

    std::size_t size() const { return data.size(); }
    bool is_vector() const { return shape.size() == 1; }
    bool is_matrix() const { return shape.size() == 2; }
    std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
    std::size_t cols() const { return shape.size() < 2 ? 0 : shape[1]; }

    double& at(std::size_t i, std::size_t j) { return data[i * shape[1] + j]; }
    double at(std::size_t i, std::size_t j) const { return data[i * shape[1] + j]; }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

inline std::string shape_str(const Tensor& t) {
    std::string s = "[";
    for (std::size_t i = 0; i < t.shape.size(); ++i) {
        if (i) s += "x";
        s += std::to_string(t.shape[i]);
    }
    return s + "]";
}

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b))
        throw DimensionError(std::string(op) + ": shapes differ " + shape_str(a) +
                             " vs " + shape_str(b));
}

// --------------------------- random numbers ---------------------------

// splitmix64. The recurrence is fixed so that seeded runs replay
// bit-identically on every platform; checkpoints depend on this.
struct Rng {
    std::uint64_t state = 0;

    explicit Rng(std::uint64_t seed = 0) : state(seed) {}

    std::uint64_t next_u64() {
        state += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0,1). Uses the top 53 bits so the result is exactly
    // representable and never rounds up to 1.0.
    double next_uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform in [lo, hi).
    double next_uniform(double lo, double hi) {
        return lo + (hi - lo) * next_uniform();
    }

    // Uniform integer in [0, n). n must be nonzero.
    std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }
};

// ------------------------- elementwise ops ----------------------------

template <typename F>
Tensor map(const Tensor& a, F f) {
    Tensor out = a;
    for (double& v : out.data) v = f(v);
    return out;
}

template <typename F>
Tensor zip(const Tensor& a, const Tensor& b, const char* op, F f) {
    require_same_shape(a, b, op);
    Tensor out = a;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = f(a.data[i], b.data[i]);
    return out;
}

inline Tensor add(const Tensor& a, const Tensor& b) {
    return zip(a, b, "add", [](double x, double y) { return x + y; });
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
    return zip(a, b, "sub", [](double x, double y) { return x - y; });
}

// Hadamard product.
inline Tensor mul(const Tensor& a, const Tensor& b) {
    return zip(a, b, "mul", [](double x, double y) { return x * y; });
}

inline Tensor scale(const Tensor& a, double s) {
    return map(a, [s](double x) { return x * s; });
}

inline Tensor sigmoid(const Tensor& a) {
    return map(a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); });
}

inline Tensor tanh(const Tensor& a) {
    return map(a, [](double x) { return std::tanh(x); });
}

inline Tensor relu(const Tensor& a) {
    return map(a, [](double x) { return x > 0.0 ? x : 0.0; });
}

inline void add_inplace(Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add_inplace");
    for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] += b.data[i];
}

// ------------------------- matrix algebra -----------------------------

inline Tensor matmul(const Tensor& a, const Tensor& b) {
    if (!a.is_matrix() || !b.is_matrix() || a.cols() != b.rows())
        throw DimensionError("matmul: incompatible shapes " + shape_str(a) + " and " +
                             shape_str(b));
    const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
    Tensor out = Tensor::zeros({n, m});
    // i-k-j order keeps the inner loop contiguous in both b and out.
    for (std::size_t i = 0; i < n; ++i) {
        const double* arow = &a.data[i * k];
        double* orow = &out.data[i * m];
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double av = arow[kk];
            if (av == 0.0) continue;
            const double* brow = &b.data[kk * m];
            for (std::size_t j = 0; j < m; ++j) orow[j] += av * brow[j];
        }
    }
    return out;
}

inline Tensor transpose(const Tensor& a) {
    if (!a.is_matrix()) throw DimensionError("transpose: need a matrix, got " + shape_str(a));
    Tensor out = Tensor::zeros({a.cols(), a.rows()});
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out.at(j, i) = a.at(i, j);
    return out;
}

// Row vector times matrix: v [k] x M [k x m] -> [m].
inline Tensor vecmat(const Tensor& v, const Tensor& m) {
    if (!v.is_vector() || !m.is_matrix() || v.size() != m.rows())
        throw DimensionError("vecmat: incompatible shapes " + shape_str(v) + " and " +
                             shape_str(m));
    const std::size_t k = v.size(), cols = m.cols();
    Tensor out = Tensor::zeros({cols});
    for (std::size_t kk = 0; kk < k; ++kk) {
        const double av = v.data[kk];
        if (av == 0.0) continue;
        const double* mrow = &m.data[kk * cols];
        for (std::size_t j = 0; j < cols; ++j) out.data[j] += av * mrow[j];
    }
    return out;
}

// Matrix times column vector: M [n x k] x v [k] -> [n].
inline Tensor matvec(const Tensor& m, const Tensor& v) {
    if (!m.is_matrix() || !v.is_vector() || m.cols() != v.size())
        throw DimensionError("matvec: incompatible shapes " + shape_str(m) + " and " +
                             shape_str(v));
    Tensor out = Tensor::zeros({m.rows()});
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const double* mrow = &m.data[i * m.cols()];
        double acc = 0.0;
        for (std::size_t j = 0; j < m.cols(); ++j) acc += mrow[j] * v.data[j];
        out.data[i] = acc;
    }
    return out;
}

// Outer product: a [n] x b [m] -> [n x m].
inline Tensor outer(const Tensor& a, const Tensor& b) {
    if (!a.is_vector() || !b.is_vector())
        throw DimensionError("outer: need vectors, got " + shape_str(a) + " and " +
                             shape_str(b));
    Tensor out = Tensor::zeros({a.size(), b.size()});
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) out.at(i, j) = a.data[i] * b.data[j];
    return out;
}

// Adds a bias row vector to every row of a matrix.
inline Tensor add_row_broadcast(const Tensor& m, const Tensor& bias) {
    if (!m.is_matrix() || !bias.is_vector() || m.cols() != bias.size())
        throw DimensionError("add_row_broadcast: incompatible shapes " + shape_str(m) +
                             " and " + shape_str(bias));
    Tensor out = m;
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) out.at(i, j) += bias.data[j];
    return out;
}

inline Tensor column_sums(const Tensor& m) {
    if (!m.is_matrix()) throw DimensionError("column_sums: need a matrix, got " + shape_str(m));
    Tensor out = Tensor::zeros({m.cols()});
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) out.data[j] += m.at(i, j);
    return out;
}

// --------------------------- softmax ----------------------------------

// Row-wise softmax with max subtraction; each row sums to 1 within 1e-12
// and never overflows on finite input.
inline Tensor softmax(const Tensor& logits) {
    if (!logits.is_matrix() || logits.cols() < 2)
        throw DimensionError("softmax: need [n x c] with c >= 2, got " + shape_str(logits));
    Tensor out = logits;
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        double mx = logits.at(i, 0);
        for (std::size_t j = 1; j < logits.cols(); ++j) mx = std::max(mx, logits.at(i, j));
        double sum = 0.0;
        for (std::size_t j = 0; j < logits.cols(); ++j) {
            double e = std::exp(logits.at(i, j) - mx);
            out.at(i, j) = e;
            sum += e;
        }
        for (std::size_t j = 0; j < logits.cols(); ++j) out.at(i, j) /= sum;
    }
    return out;
}

// ------------------------- initialization -----------------------------

// Uniform in [-L, L] with L = sqrt(6 / (fan_in + fan_out)), drawn in
// row-major order so a fixed seed gives an identical matrix everywhere.
inline Tensor glorot_uniform(Rng& rng, std::size_t fan_in, std::size_t fan_out) {
    if (fan_in == 0 || fan_out == 0)
        throw ConfigError("glorot_uniform: fans must be positive");
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor out = Tensor::zeros({fan_in, fan_out});
    for (double& v : out.data) v = rng.next_uniform(-limit, limit);
    return out;
}

}  // namespace concord
