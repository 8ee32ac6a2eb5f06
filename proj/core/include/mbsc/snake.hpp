#ifndef MBSC_SNAKE_HPP
#define MBSC_SNAKE_HPP

#include <vector>

#include "mbsc/tensor.hpp"

namespace mbsc {

// Per-channel parameters of f(x) = x + (beta/alpha) sin^2(alpha x) + gamma.
// beta = 1, gamma = 0 recovers the plain snake x + (1/alpha) sin^2(alpha x).
struct SnakeParams {
    std::vector<double> alpha;
    std::vector<double> beta;
    std::vector<double> gamma;

    static SnakeParams uniform(int channels, double a = 1.0, double b = 1.0, double g = 0.0) {
        return SnakeParams{std::vector<double>(channels, a), std::vector<double>(channels, b),
                           std::vector<double>(channels, g)};
    }
};

inline double snake_scalar(double x, double a, double b, double g) {
    const double s = std::sin(a * x);
    return x + (b / a) * s * s + g;
}

// d/dx of snake_scalar: 1 + beta sin(2 alpha x).
inline double snake_derivative_scalar(double x, double a, double b) {
    return 1.0 + b * std::sin(2.0 * a * x);
}

// Elementwise activation; row r of x uses channel-r parameters.
// Throws std::invalid_argument when any alpha <= 0, a parameter is not
// finite, or the channel count does not match x.rows.
Tensor snake_forward(const Tensor& x, const SnakeParams& p);

// Analytic elementwise derivative, same validation as snake_forward.
Tensor snake_derivative(const Tensor& x, const SnakeParams& p);

// Max secant slope |f(x1)-f(x2)| / |x1-x2| over n_samples evenly spaced
// points per channel on [lo, hi] (consecutive pairs). By the mean value
// theorem the result never exceeds 1 + max|beta|; dense sampling
// approaches it. Requires lo < hi and n_samples >= 2.
double lipschitz_probe(const SnakeParams& p, double lo, double hi, long n_samples);

} // namespace mbsc

#endif
