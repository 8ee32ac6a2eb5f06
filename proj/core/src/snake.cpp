#include "mbsc/snake.hpp"

#include <cmath>
#include <stdexcept>

namespace mbsc {

namespace {

void check_params(const SnakeParams& p, int channels) {
    if (static_cast<int>(p.alpha.size()) != channels ||
        static_cast<int>(p.beta.size()) != channels ||
        static_cast<int>(p.gamma.size()) != channels)
        throw std::invalid_argument("snake: parameter count does not match channel count");
    for (int c = 0; c < channels; ++c) {
        if (!(p.alpha[c] > 0.0) || !std::isfinite(p.alpha[c]))
            throw std::invalid_argument("snake: alpha must be positive and finite");
        if (!std::isfinite(p.beta[c]) || !std::isfinite(p.gamma[c]))
            throw std::invalid_argument("snake: beta/gamma must be finite");
    }
}

} // namespace

Tensor snake_forward(const Tensor& x, const SnakeParams& p) {
    check_params(p, x.rows);
    Tensor out(x.rows, x.cols);
    for (int r = 0; r < x.rows; ++r) {
        const double a = p.alpha[r], b = p.beta[r], g = p.gamma[r];
        const double* in = x.row(r);
        double* o = out.row(r);
        for (int c = 0; c < x.cols; ++c) o[c] = snake_scalar(in[c], a, b, g);
    }
    return out;
}

Tensor snake_derivative(const Tensor& x, const SnakeParams& p) {
    check_params(p, x.rows);
    Tensor out(x.rows, x.cols);
    for (int r = 0; r < x.rows; ++r) {
        const double a = p.alpha[r], b = p.beta[r];
        const double* in = x.row(r);
        double* o = out.row(r);
        for (int c = 0; c < x.cols; ++c) o[c] = snake_derivative_scalar(in[c], a, b);
    }
    return out;
}

double lipschitz_probe(const SnakeParams& p, double lo, double hi, long n_samples) {
    if (!(lo < hi)) throw std::invalid_argument("lipschitz_probe: degenerate interval");
    if (n_samples < 2) throw std::invalid_argument("lipschitz_probe: need at least two samples");
    check_params(p, static_cast<int>(p.alpha.size()));

    double max_slope = 0.0;
    const double step = (hi - lo) / static_cast<double>(n_samples - 1);
    for (size_t c = 0; c < p.alpha.size(); ++c) {
        const double a = p.alpha[c], b = p.beta[c], g = p.gamma[c];
        double prev_x = lo;
        double prev_f = snake_scalar(lo, a, b, g);
        for (long i = 1; i < n_samples; ++i) {
            const double x = lo + step * static_cast<double>(i);
            const double f = snake_scalar(x, a, b, g);
            const double slope = std::abs(f - prev_f) / (x - prev_x);
            if (slope > max_slope) max_slope = slope;
            prev_x = x;
            prev_f = f;
        }
    }
    return max_slope;
}

} // namespace mbsc
