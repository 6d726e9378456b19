#pragma once

#include "entroflow/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace entroflow {

/// Uniform symmetric mesh on [-L, L] with an odd number of nodes, so y = 0 is a node.
class Grid {
public:
    Grid(double half_width, std::size_t n_points) : half_width_(half_width), n_(n_points) {
        if (!(half_width > 0.0) || !std::isfinite(half_width))
            throw Error(ErrorKind::argument, "grid half width must be positive and finite");
        if (n_points < 9 || n_points % 2 == 0)
            throw Error(ErrorKind::argument, "grid needs an odd point count >= 9, got " + std::to_string(n_points));
        spacing_ = 2.0 * half_width / static_cast<double>(n_points - 1);
    }

    double half_width() const noexcept { return half_width_; }
    std::size_t size() const noexcept { return n_; }
    double spacing() const noexcept { return spacing_; }

    // Nodes are generated from the centre outwards so that y_i = -y_{n-1-i} bit for bit.
    double node(std::size_t i) const noexcept {
        const auto mid = static_cast<std::ptrdiff_t>((n_ - 1) / 2);
        return static_cast<double>(static_cast<std::ptrdiff_t>(i) - mid) * spacing_;
    }

    std::vector<double> nodes() const {
        std::vector<double> y(n_);
        for (std::size_t i = 0; i < n_; ++i) y[i] = node(i);
        return y;
    }

    /// Trapezoid weight of node i.
    double weight(std::size_t i) const noexcept {
        return (i == 0 || i + 1 == n_) ? 0.5 * spacing_ : spacing_;
    }

    bool operator==(const Grid& other) const noexcept {
        return n_ == other.n_ && half_width_ == other.half_width_;
    }

private:
    double half_width_;
    std::size_t n_;
    double spacing_;
};

/// Nonnegative density sampled on a grid.
class DensityField {
public:
    DensityField(Grid grid, std::vector<double> values) : grid_(std::move(grid)), values_(std::move(values)) {
        if (values_.size() != grid_.size())
            throw Error(ErrorKind::argument, "field size does not match grid");
        for (double v : values_) {
            if (!std::isfinite(v)) throw Error(ErrorKind::invalid_field, "non-finite value in density");
            if (v < 0.0) throw Error(ErrorKind::invalid_field, "negative value in density");
        }
    }

    /// Samples `fn` at every node; negative samples are rejected.
    template <typename Fn>
    static DensityField sample(const Grid& grid, Fn&& fn) {
        std::vector<double> v(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) v[i] = fn(grid.node(i));
        return DensityField(grid, std::move(v));
    }

    const Grid& grid() const noexcept { return grid_; }
    std::span<const double> values() const noexcept { return values_; }
    double operator[](std::size_t i) const noexcept { return values_[i]; }
    std::size_t size() const noexcept { return values_.size(); }

    double max() const { return *std::max_element(values_.begin(), values_.end()); }

    DensityField scaled(double factor) const {
        std::vector<double> v(values_);
        for (double& x : v) x *= factor;
        return DensityField(grid_, std::move(v));
    }

private:
    Grid grid_;
    std::vector<double> values_;
};

/// Order p of the evolution family and initial second moment.
struct ModelParams {
    double p;
    double theta0;

    ModelParams(double order, double second_moment) : p(order), theta0(second_moment) {
        if (!(order >= 1.0 && order <= 1.5))
            throw Error(ErrorKind::argument, "order p must lie in [1, 3/2], got " + std::to_string(order));
        if (!(second_moment > 0.0))
            throw Error(ErrorKind::argument, "second moment theta0 must be positive");
    }
};

/// Composite trapezoid rule for arbitrary samples on `grid`.
inline double trapezoid(const Grid& grid, std::span<const double> samples) {
    if (samples.size() != grid.size()) throw Error(ErrorKind::argument, "sample count does not match grid");
    double sum = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (!std::isfinite(samples[i])) throw Error(ErrorKind::invalid_field, "non-finite sample in quadrature");
        sum += grid.weight(i) * samples[i];
    }
    return sum;
}

inline double integrate(const DensityField& f) { return trapezoid(f.grid(), f.values()); }

/// k-th moment, k in {0, 1, 2}.
inline double moment(const DensityField& f, int k) {
    if (k < 0 || k > 2) throw Error(ErrorKind::argument, "moment order must be 0, 1 or 2");
    const Grid& g = f.grid();
    std::vector<double> w(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double y = g.node(i);
        w[i] = f[i] * (k == 0 ? 1.0 : (k == 1 ? y : y * y));
    }
    return trapezoid(g, w);
}

/// Second-order finite differences: central in the interior, one-sided at the two ends.
inline std::vector<double> derivative(const Grid& grid, std::span<const double> f, int order) {
    if (order != 1 && order != 2) throw Error(ErrorKind::argument, "derivative order must be 1 or 2");
    if (f.size() != grid.size()) throw Error(ErrorKind::argument, "sample count does not match grid");
    const std::size_t n = f.size();
    const double h = grid.spacing();
    std::vector<double> d(n);
    if (order == 1) {
        for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
        d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
        d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
    } else {
        const double h2 = h * h;
        for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) / h2;
        d[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / h2;
        d[n - 1] = (2.0 * f[n - 1] - 5.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4]) / h2;
    }
    return d;
}

/// First derivative with the five-point fourth-order stencil in the interior, falling back to the
/// second-order stencils of `derivative` on the two outermost nodes at each end. Used where
/// quadratures of squared gradients must be accurate enough to resolve near-equilibrium identities.
inline std::vector<double> gradient_fourth_order(const Grid& grid, std::span<const double> f) {
    std::vector<double> d = derivative(grid, f, 1);
    const std::size_t n = f.size();
    const double h = grid.spacing();
    for (std::size_t i = 2; i + 2 < n; ++i) d[i] = (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) / (12.0 * h);
    return d;
}

inline double l1_distance(const DensityField& f, const DensityField& g) {
    if (!(f.grid() == g.grid())) throw Error(ErrorKind::argument, "l1_distance on mismatched grids");
    std::vector<double> d(f.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = std::abs(f[i] - g[i]);
    return trapezoid(f.grid(), d);
}

/// Piecewise-linear interpolation of nodal samples, zero outside [-L, L].
inline double interpolate(const Grid& grid, std::span<const double> f, double y) {
    const double L = grid.half_width();
    if (y < -L || y > L) return 0.0;
    const double s = (y + L) / grid.spacing();
    auto i = static_cast<std::size_t>(std::floor(s));
    if (i >= grid.size() - 1) return f[grid.size() - 1];
    const double t = s - static_cast<double>(i);
    return (1.0 - t) * f[i] + t * f[i + 1];
}

/// Dilation f_lambda(y) = lambda^{-1/2} f(y lambda^{-1/2}), resampled by linear interpolation.
/// Scales the second moment by lambda and preserves mass up to interpolation error.
inline DensityField dilate(const DensityField& f, double lambda) {
    if (!(lambda > 0.0)) throw Error(ErrorKind::argument, "dilation factor must be positive");
    const Grid& g = f.grid();
    const double s = 1.0 / std::sqrt(lambda);
    std::vector<double> v(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) v[i] = s * interpolate(g, f.values(), g.node(i) * s);
    return DensityField(g, std::move(v));
}

} // namespace entroflow
