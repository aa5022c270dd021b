#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <vector>

#include "parreg/errors.hpp"

namespace parreg {

/// Half-open node index range [lo, hi]: covers cells lo..hi-1 and nodes lo..hi.
struct NodeRange {
    std::size_t lo = 0;
    std::size_t hi = 0;
    std::size_t cells() const { return hi - lo; }
};

/// Partition 0 = t_0 < t_1 < ... < t_m = T of a time interval.
///
/// Weight masses int_cell t^kappa dt are closed-form, so the singular weight
/// carries no quadrature error. Graded grids cluster nodes at t = 0 via
/// t_j = T (j/m)^g.
class TimeGrid {
public:
    static TimeGrid graded(double T, std::size_t m, double grading = 3.0) {
        if (!(T > 0.0) || !std::isfinite(T)) throw ParameterError("horizon T must be positive");
        if (m < 2) throw ParameterError("grid needs at least 2 cells");
        if (!(grading >= 1.0)) throw ParameterError("grading exponent must be >= 1");
        std::vector<double> t(m + 1);
        for (std::size_t j = 0; j <= m; ++j)
            t[j] = T * std::pow(static_cast<double>(j) / static_cast<double>(m), grading);
        t[m] = T;
        return TimeGrid(std::move(t));
    }

    static TimeGrid from_nodes(std::vector<double> nodes) { return TimeGrid(std::move(nodes)); }

    explicit TimeGrid(std::vector<double> nodes) : t_(std::move(nodes)) {
        if (t_.size() < 2) throw InvalidInputError("grid needs at least 2 nodes");
        if (t_.front() != 0.0) throw InvalidInputError("grid must start at t = 0");
        for (std::size_t j = 0; j + 1 < t_.size(); ++j) {
            if (!std::isfinite(t_[j + 1]) || !(t_[j] < t_[j + 1]))
                throw InvalidInputError("grid nodes must be strictly increasing and finite");
        }
    }

    std::size_t cells() const { return t_.size() - 1; }
    std::size_t nodes() const { return t_.size(); }
    double T() const { return t_.back(); }
    double node(std::size_t j) const { return t_[j]; }
    const std::vector<double>& raw() const { return t_; }
    NodeRange full() const { return {0, cells()}; }

    double cell_width(std::size_t j) const { return t_[j + 1] - t_[j]; }

    /// Index of the cell containing t (clamped to the boundary cells).
    std::size_t locate(double t) const {
        if (t <= t_.front()) return 0;
        if (t >= t_.back()) return cells() - 1;
        const auto it = std::upper_bound(t_.begin(), t_.end(), t);
        return static_cast<std::size_t>(it - t_.begin()) - 1;
    }

    /// Exact int_{t_j}^{t_{j+1}} t^kappa dt, kappa > -1.
    double weight_mass(std::size_t j, double kappa) const {
        return weight_mass_between(t_[j], t_[j + 1], kappa);
    }

    static double weight_mass_between(double a, double b, double kappa) {
        if (!(kappa > -1.0)) throw ParameterError("weight exponent must exceed -1");
        if (kappa == 0.0) return b - a;
        const double e = kappa + 1.0;
        return (std::pow(b, e) - std::pow(a, e)) / e;
    }

    /// Three-point Gauss abscissas of the cell (all strictly interior).
    std::array<double, 3> gauss_points(std::size_t j) const {
        const double c = 0.5 * (t_[j] + t_[j + 1]);
        const double h = 0.5 * (t_[j + 1] - t_[j]);
        const double r = std::sqrt(0.6);
        return {c - h * r, c, c + h * r};
    }

    static constexpr std::array<double, 3> gauss_weights() {
        return {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
    }

    /// Midpoint-split refinement (every cell halved); shares all parent nodes.
    TimeGrid refined() const {
        std::vector<double> t;
        t.reserve(2 * cells() + 1);
        for (std::size_t j = 0; j < cells(); ++j) {
            t.push_back(t_[j]);
            t.push_back(0.5 * (t_[j] + t_[j + 1]));
        }
        t.push_back(t_.back());
        return TimeGrid(std::move(t));
    }

    /// Union with extra nodes; near-duplicates (relative snap tolerance) collapse.
    TimeGrid with_nodes(const std::vector<double>& extra) const {
        std::vector<double> t = t_;
        t.insert(t.end(), extra.begin(), extra.end());
        std::sort(t.begin(), t.end());
        const double snap = 1e-12 * T();
        std::vector<double> out;
        out.reserve(t.size());
        for (double v : t) {
            if (v < 0.0 || v > T()) throw InvalidInputError("inserted node outside [0, T]");
            if (out.empty() || v - out.back() > snap) out.push_back(v);
        }
        out.front() = 0.0;
        out.back() = T();
        return TimeGrid(std::move(out));
    }

    /// Node index whose coordinate matches t exactly up to snap tolerance.
    std::size_t index_of(double t) const {
        const std::size_t j = locate(t);
        const double snap = 1e-10 * T();
        if (std::abs(t_[j] - t) <= snap) return j;
        if (std::abs(t_[j + 1] - t) <= snap) return j + 1;
        throw InvalidInputError("time is not a grid node");
    }

private:
    std::vector<double> t_;
};

using GridPtr = std::shared_ptr<const TimeGrid>;

inline GridPtr make_time_grid(double T, std::size_t m, double grading = 3.0) {
    return std::make_shared<const TimeGrid>(TimeGrid::graded(T, m, grading));
}

inline GridPtr share(TimeGrid g) { return std::make_shared<const TimeGrid>(std::move(g)); }

/// Vector-valued function known at grid nodes, piecewise linear in between.
class GridFunction {
public:
    GridFunction(GridPtr grid, std::size_t dim)
        : grid_(std::move(grid)),
          vals_(grid_->nodes(), Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim))) {}

    static GridFunction sample(GridPtr grid, const std::function<Eigen::VectorXd(double)>& f) {
        GridFunction u(grid, static_cast<std::size_t>(f(grid->node(0)).size()));
        for (std::size_t j = 0; j < grid->nodes(); ++j) u.set(j, f(grid->node(j)));
        return u;
    }

    static GridFunction sample_scalar(GridPtr grid, const std::function<double(double)>& f) {
        return sample(std::move(grid), [&](double t) {
            Eigen::VectorXd v(1);
            v[0] = f(t);
            return v;
        });
    }

    const TimeGrid& grid() const { return *grid_; }
    const GridPtr& grid_ptr() const { return grid_; }
    std::size_t dim() const { return static_cast<std::size_t>(vals_.front().size()); }

    const Eigen::VectorXd& value(std::size_t j) const { return vals_[j]; }

    void set(std::size_t j, const Eigen::VectorXd& v) {
        if (static_cast<std::size_t>(v.size()) != dim())
            throw InvalidInputError("grid function value has wrong dimension");
        if (!v.allFinite()) throw InvalidInputError("grid function value must be finite");
        vals_[j] = v;
    }

    /// Piecewise-linear evaluation; clamps to [0, T].
    Eigen::VectorXd eval(double t) const {
        const std::size_t j = grid_->locate(t);
        const double a = grid_->node(j), b = grid_->node(j + 1);
        const double s = std::clamp((t - a) / (b - a), 0.0, 1.0);
        return (1.0 - s) * vals_[j] + s * vals_[j + 1];
    }

    /// Backward difference quotient on cell j (constant on the cell).
    Eigen::VectorXd cell_derivative(std::size_t j) const {
        return (vals_[j + 1] - vals_[j]) / grid_->cell_width(j);
    }

    GridFunction& operator+=(const GridFunction& o) { return axpy(1.0, o); }
    GridFunction& operator-=(const GridFunction& o) { return axpy(-1.0, o); }

    GridFunction& axpy(double a, const GridFunction& o) {
        require_same_grid(o);
        for (std::size_t j = 0; j < vals_.size(); ++j) vals_[j] += a * o.vals_[j];
        return *this;
    }

    GridFunction& scale_by(double a) {
        for (auto& v : vals_) v *= a;
        return *this;
    }

    /// Resamples onto another grid (exact at shared nodes).
    GridFunction on_grid(const GridPtr& g) const {
        GridFunction out(g, dim());
        for (std::size_t j = 0; j < g->nodes(); ++j) out.vals_[j] = eval(g->node(j));
        return out;
    }

    void require_same_grid(const GridFunction& o) const {
        if (grid_ != o.grid_ && grid_->raw() != o.grid_->raw())
            throw InvalidInputError("grid functions live on different grids");
    }

private:
    GridPtr grid_;
    std::vector<Eigen::VectorXd> vals_;
};

} // namespace parreg
