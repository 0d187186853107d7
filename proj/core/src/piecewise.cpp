#include "spectral/piecewise.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "spectral/error.hpp"

namespace spectral {

double RidgeSum::operator()(double x) const {
    double s = constant + linear * x;
    for (std::size_t i = 0; i < knots.size(); ++i) {
        const double z = left_facing ? knots[i] - x : x - knots[i];
        if (z > 0.0) s += coefs[i] * z;
    }
    return s;
}

PiecewiseLinear::PiecewiseLinear(Vec x, Vec y) : x_(std::move(x)), y_(std::move(y)) {
    if (x_.size() < 2 || x_.size() != y_.size()) {
        throw Error(ErrorKind::BadInterval, "piecewise-linear needs >= 2 matching knots");
    }
    for (std::size_t i = 1; i < x_.size(); ++i) {
        if (!(x_[i] > x_[i - 1])) throw Error(ErrorKind::BadInterval, "knots must be strictly increasing");
    }
}

double PiecewiseLinear::slope(std::size_t s) const { return (y_[s + 1] - y_[s]) / (x_[s + 1] - x_[s]); }

double PiecewiseLinear::operator()(double x) const {
    std::size_t s = 0;
    if (x >= x_.back()) {
        s = segments() - 1;
    } else if (x > x_.front()) {
        s = static_cast<std::size_t>(std::upper_bound(x_.begin(), x_.end(), x) - x_.begin()) - 1;
    }
    return y_[s] + slope(s) * (x - x_[s]);
}

RidgeSum PiecewiseLinear::right_ridges() const {
    RidgeSum r;
    r.constant = y_.front();
    double prev = 0.0;
    for (std::size_t s = 0; s < segments(); ++s) {
        const double sl = slope(s);
        r.knots.push_back(x_[s]);
        r.coefs.push_back(sl - prev);
        prev = sl;
    }
    return r;
}

RidgeSum PiecewiseLinear::left_ridges() const {
    RidgeSum r;
    r.left_facing = true;
    const std::size_t last = segments() - 1;
    r.linear = slope(last);
    r.constant = y_.back() - r.linear * x_.back();
    for (std::size_t i = 1; i <= last; ++i) {
        r.knots.push_back(x_[i]);
        r.coefs.push_back(slope(i) - slope(i - 1));
    }
    return r;
}

namespace {

void check_interval(double a, double b) {
    if (!(a > 0.0) || !(b > a) || !std::isfinite(b)) {
        throw Error(ErrorKind::BadInterval, "need 0 < a < b, got [" + std::to_string(a) + ", " +
                                                std::to_string(b) + "]");
    }
}

}  // namespace

Vec geometric_knots(double a, double b, std::size_t count) {
    check_interval(a, b);
    if (count < 2) throw Error(ErrorKind::BadInterval, "need at least 2 knots");
    Vec t(count);
    const double la = std::log(a);
    const double step = (std::log(b) - la) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) t[i] = std::exp(la + step * static_cast<double>(i));
    t.front() = a;
    t.back() = b;
    return t;
}

Vec uniform_knots(double a, double b, std::size_t count) {
    if (!(b > a) || count < 2) throw Error(ErrorKind::BadInterval, "need a < b and at least 2 knots");
    Vec t(count);
    const double h = (b - a) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) t[i] = a + h * static_cast<double>(i);
    t.back() = b;
    return t;
}

PiecewiseLinear interpolate(const std::function<double(double)>& f, const Vec& knots) {
    Vec y(knots.size());
    for (std::size_t i = 0; i < knots.size(); ++i) y[i] = f(knots[i]);
    return PiecewiseLinear(knots, std::move(y));
}

ApproxError sup_error(const PiecewiseLinear& g, const std::function<double(double)>& f, double a, double b) {
    ApproxError e;
    auto probe = [&](double x) {
        const double fx = f(x);
        const double err = std::abs(g(x) - fx);
        e.abs = std::max(e.abs, err);
        if (fx != 0.0) e.rel = std::max(e.rel, err / std::abs(fx));
    };
    const Vec& xs = g.xs();
    for (std::size_t s = 0; s + 1 < xs.size(); ++s) {
        const double lo = std::max(xs[s], a);
        const double hi = std::min(xs[s + 1], b);
        if (hi < lo) continue;
        for (int j = 0; j <= 64; ++j) probe(lo + (hi - lo) * j / 64.0);
    }
    probe(a);
    probe(b);
    return e;
}

RecipSqrtTable relu_recip_sqrt(double a, double b, std::size_t knots) {
    check_interval(a, b);
    if (knots < 2) throw Error(ErrorKind::BadInterval, "relu_recip_sqrt needs at least 2 knots");
    auto f = [](double x) { return 1.0 / std::sqrt(x); };
    RecipSqrtTable t;
    t.a = a;
    t.b = b;
    t.interp = interpolate(f, geometric_knots(a, b, knots));
    t.ridges = t.interp.right_ridges();
    t.error = sup_error(t.interp, f, a, b);
    return t;
}

Calibration calibrate(const std::function<double(double)>& f, double a, double b, double eps,
                      KnotSpacing spacing, bool relative) {
    if (!(eps > 0.0)) throw Error(ErrorKind::ConfigError, "approximation tolerance must be positive");
    for (std::size_t segs = 1; segs <= (std::size_t{1} << 20); segs *= 2) {
        const Vec knots = spacing == KnotSpacing::Geometric ? geometric_knots(a, b, segs + 1)
                                                            : uniform_knots(a, b, segs + 1);
        Calibration c{interpolate(f, knots), {}};
        c.error = sup_error(c.interp, f, a, b);
        if ((relative ? c.error.rel : c.error.abs) <= eps) return c;
    }
    throw Error(ErrorKind::ConfigError, "tolerance " + std::to_string(eps) + " needs more than 2^20 segments");
}

Calibration calibrate_tanh(double limit, double eps) {
    constexpr double cap = 1.0 - 1e-9;
    auto f = [cap](double x) { return std::min(std::tanh(x), cap); };
    return calibrate(f, 0.0, limit, eps, KnotSpacing::Uniform, false);
}

}  // namespace spectral
