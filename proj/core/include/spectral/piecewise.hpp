#pragma once

#include <cstddef>
#include <functional>

#include "spectral/mat.hpp"

namespace spectral {

/// g(x) = constant + linear * x + sum_i coef[i] * relu(+-(x - knot[i])).
/// Right-facing terms use relu(x - t); left-facing terms use relu(t - x).
struct RidgeSum {
    double constant = 0.0;
    double linear = 0.0;
    Vec knots;
    Vec coefs;
    bool left_facing = false;

    double operator()(double x) const;
    std::size_t terms() const noexcept { return knots.size(); }
};

/// Continuous piecewise-linear interpolant through (x_i, y_i), x strictly increasing.
/// Outside [x_0, x_last] it continues with the end slopes.
class PiecewiseLinear {
public:
    PiecewiseLinear() = default;
    PiecewiseLinear(Vec x, Vec y);

    double operator()(double x) const;
    const Vec& xs() const noexcept { return x_; }
    const Vec& ys() const noexcept { return y_; }
    std::size_t segments() const noexcept { return x_.size() - 1; }
    double slope(std::size_t segment) const;

    /// constant + sum c_i relu(x - t_i); flat to the left of x_0.
    RidgeSum right_ridges() const;
    /// constant + linear*x + sum c_i relu(t_i - x); terms stay comparable in size to
    /// the result when the function blows up near the left end.
    RidgeSum left_ridges() const;

private:
    Vec x_;
    Vec y_;
};

Vec geometric_knots(double a, double b, std::size_t count);
Vec uniform_knots(double a, double b, std::size_t count);
PiecewiseLinear interpolate(const std::function<double(double)>& f, const Vec& knots);

struct ApproxError {
    double abs = 0.0;
    double rel = 0.0;
};

/// Dense-grid sup error of g against f on [a, b]: 64 samples per segment plus the knots.
ApproxError sup_error(const PiecewiseLinear& g, const std::function<double(double)>& f, double a, double b);

/// Coefficient table for 1/sqrt(x) on [a, b] in the form c0 + sum c_i relu(x - t_i).
struct RecipSqrtTable {
    double a = 0.0;
    double b = 0.0;
    PiecewiseLinear interp;
    RidgeSum ridges;
    ApproxError error;
};

/// Interpolates 1/sqrt(x) at `knots` geometrically spaced points of [a, b].
RecipSqrtTable relu_recip_sqrt(double a, double b, std::size_t knots);

enum class KnotSpacing { Geometric, Uniform };

struct Calibration {
    PiecewiseLinear interp;
    ApproxError error;
};

/// Smallest power-of-two segment count whose dense-grid error is <= eps (relative
/// when `relative`, absolute otherwise). Throws ConfigError past 2^20 segments.
Calibration calibrate(const std::function<double(double)>& f, double a, double b, double eps,
                      KnotSpacing spacing, bool relative);

/// Odd piecewise tanh on [0, limit], values clamped to 1 - 1e-9, flat beyond `limit`.
/// Returns the half-line interpolant; evaluate at -x as -g(x).
Calibration calibrate_tanh(double limit, double eps);

}  // namespace spectral
