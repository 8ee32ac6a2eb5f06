#ifndef MBSC_TENSOR_HPP
#define MBSC_TENSOR_HPP

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace mbsc {

// Dense row-major matrix of doubles. Rows are channels, columns are time
// steps everywhere in this codebase.
struct Tensor {
    int rows = 0;
    int cols = 0;
    std::vector<double> v;

    Tensor() = default;
    Tensor(int r, int c) : rows(r), cols(c), v(static_cast<size_t>(r) * c, 0.0) {
        if (r < 0 || c < 0) throw std::invalid_argument("Tensor: negative shape");
    }

    double& at(int r, int c) { return v[static_cast<size_t>(r) * cols + c]; }
    double at(int r, int c) const { return v[static_cast<size_t>(r) * cols + c]; }

    double* row(int r) { return v.data() + static_cast<size_t>(r) * cols; }
    const double* row(int r) const { return v.data() + static_cast<size_t>(r) * cols; }

    size_t size() const { return v.size(); }
    bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }

    void fill(double x) { std::fill(v.begin(), v.end(), x); }

    bool finite() const {
        for (double x : v)
            if (!std::isfinite(x)) return false;
        return true;
    }
};

inline void add_inplace(Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("add_inplace: shape mismatch");
    for (size_t i = 0; i < a.v.size(); ++i) a.v[i] += b.v[i];
}

inline void scale_inplace(Tensor& a, double s) {
    for (double& x : a.v) x *= s;
}

inline Tensor operator-(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("Tensor subtraction: shape mismatch");
    Tensor out(a.rows, a.cols);
    for (size_t i = 0; i < a.v.size(); ++i) out.v[i] = a.v[i] - b.v[i];
    return out;
}

inline double dot(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("Tensor dot: shape mismatch");
    double s = 0.0;
    for (size_t i = 0; i < a.v.size(); ++i) s += a.v[i] * b.v[i];
    return s;
}

inline double squared_norm(const Tensor& a) {
    double s = 0.0;
    for (double x : a.v) s += x * x;
    return s;
}

} // namespace mbsc

#endif
