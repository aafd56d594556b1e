#pragma once

// Dense LU with partial pivoting, real or complex. MNA systems here stay
// well under a hundred unknowns, so a flat row-major buffer is enough.

#include <cmath>
#include <complex>
#include <cstddef>
#include <utility>
#include <vector>

namespace anaflow::detail {

template <typename T>
class DenseMatrix {
public:
    explicit DenseMatrix(std::size_t n = 0) : n_(n), data_(n * n, T{}) {}

    std::size_t size() const { return n_; }
    T& operator()(std::size_t r, std::size_t c) { return data_[r * n_ + c]; }
    const T& operator()(std::size_t r, std::size_t c) const { return data_[r * n_ + c]; }
    void clear() { std::fill(data_.begin(), data_.end(), T{}); }

    std::vector<T> multiply(const std::vector<T>& x) const {
        std::vector<T> y(n_, T{});
        for (std::size_t r = 0; r < n_; ++r) {
            T acc{};
            for (std::size_t c = 0; c < n_; ++c) acc += (*this)(r, c) * x[c];
            y[r] = acc;
        }
        return y;
    }

private:
    std::size_t n_;
    std::vector<T> data_;
};

/// Factors A in place. Returns -1 on success or the column whose pivot fell
/// below 1e-15 times the largest entry.
template <typename T>
long lu_factor(DenseMatrix<T>& a, std::vector<std::size_t>& perm) {
    const std::size_t n = a.size();
    perm.resize(n);
    double scale = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        perm[r] = r;
        for (std::size_t c = 0; c < n; ++c) scale = std::max(scale, std::abs(a(r, c)));
    }
    const double tiny = 1e-15 * (scale > 0.0 ? scale : 1.0);
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t pivot = k;
        double best = std::abs(a(k, k));
        for (std::size_t r = k + 1; r < n; ++r) {
            const double m = std::abs(a(r, k));
            if (m > best) {
                best = m;
                pivot = r;
            }
        }
        if (best <= tiny) return static_cast<long>(k);
        if (pivot != k) {
            for (std::size_t c = 0; c < n; ++c) std::swap(a(k, c), a(pivot, c));
            std::swap(perm[k], perm[pivot]);
        }
        const T inv = T(1) / a(k, k);
        for (std::size_t r = k + 1; r < n; ++r) {
            const T f = a(r, k) * inv;
            if (f == T{}) continue;
            a(r, k) = f;
            for (std::size_t c = k + 1; c < n; ++c) a(r, c) -= f * a(k, c);
        }
    }
    return -1;
}

template <typename T>
std::vector<T> lu_solve(const DenseMatrix<T>& lu, const std::vector<std::size_t>& perm, const std::vector<T>& b) {
    const std::size_t n = lu.size();
    std::vector<T> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = b[perm[i]];
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < i; ++j) x[i] -= lu(i, j) * x[j];
    }
    for (std::size_t i = n; i-- > 0;) {
        for (std::size_t j = i + 1; j < n; ++j) x[i] -= lu(i, j) * x[j];
        x[i] /= lu(i, i);
    }
    return x;
}

}  // namespace anaflow::detail
