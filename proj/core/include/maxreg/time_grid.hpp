#pragma once

#include <string>
#include <vector>

#include "maxreg/linalg.hpp"

namespace maxreg {

/// Strictly increasing nodes 0 = t_0 < … < t_N = τ.
class TimeGrid {
public:
    enum class Grading { Uniform, Graded, Custom };

    static TimeGrid uniform(double horizon, int cells);
    /// t_k = τ (k/N)^γ, clustering toward t = 0 for γ > 1.
    static TimeGrid graded(double horizon, int cells, double gamma);
    static TimeGrid from_nodes(std::vector<double> nodes);

    /// Splits every cell into `factor` equal cells.
    TimeGrid refine(int factor) const;

    int cells() const { return static_cast<int>(nodes_.size()) - 1; }
    int size() const { return static_cast<int>(nodes_.size()); }
    double horizon() const { return nodes_.back(); }
    double node(int k) const { return nodes_[k]; }
    double width(int k) const { return nodes_[k + 1] - nodes_[k]; }
    const std::vector<double>& nodes() const { return nodes_; }
    Grading grading() const { return grading_; }
    double gamma() const { return gamma_; }

    /// Index k of the cell [t_k, t_{k+1}) containing t (last cell for t = τ).
    int locate(double t) const;
    /// Index of the node equal to t within 1e-12 τ, or −1.
    int find_node(double t) const;

private:
    std::vector<double> nodes_;
    Grading grading_ = Grading::Custom;
    double gamma_ = 1.0;
};

/// H-valued function sampled at the nodes of a grid; column k holds the value at t_k.
/// For quadrature the value at t_k stands for the cell [t_k, t_{k+1}).
class GridFunction {
public:
    GridFunction() = default;
    GridFunction(TimeGrid grid, int dim);
    GridFunction(TimeGrid grid, Mat values);

    const TimeGrid& grid() const { return grid_; }
    int dim() const { return static_cast<int>(values_.rows()); }
    int size() const { return static_cast<int>(values_.cols()); }
    const Mat& values() const { return values_; }
    Mat& values() { return values_; }
    Vec at(int k) const { return values_.col(k); }
    void set(int k, const Vec& v) { values_.col(k) = v; }

    /// Value of the piecewise-constant model at time t.
    Vec evaluate(double t) const;

    /// Samples g at cell midpoints (value k stands for [t_k, t_{k+1})); the last node repeats.
    template <class F>
    static GridFunction sample_midpoints(const TimeGrid& grid, int dim, F&& g) {
        GridFunction out(grid, dim);
        for (int k = 0; k < grid.cells(); ++k) out.set(k, g(0.5 * (grid.node(k) + grid.node(k + 1))));
        out.set(grid.cells(), out.at(grid.cells() - 1));
        return out;
    }

    /// Samples g at the nodes.
    template <class F>
    static GridFunction sample_nodes(const TimeGrid& grid, int dim, F&& g) {
        GridFunction out(grid, dim);
        for (int k = 0; k < grid.size(); ++k) out.set(k, g(grid.node(k)));
        return out;
    }

    /// Values at the nodes of `coarse`, which must be a subset of this grid's nodes.
    GridFunction restrict_to(const TimeGrid& coarse) const;

    GridFunction operator+(const GridFunction& o) const;
    GridFunction operator-(const GridFunction& o) const;
    GridFunction operator*(cplx c) const;

private:
    TimeGrid grid_;
    Mat values_;
};

}  // namespace maxreg
