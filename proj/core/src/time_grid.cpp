#include "maxreg/time_grid.hpp"

#include <algorithm>
#include <cmath>

#include "maxreg/errors.hpp"

namespace maxreg {

TimeGrid TimeGrid::uniform(double horizon, int cells) {
    if (cells < 1) throw ConfigurationError("time grid needs at least one cell");
    if (!(horizon > 0.0)) throw ConfigurationError("horizon τ must be positive");
    std::vector<double> t(cells + 1);
    for (int k = 0; k <= cells; ++k) t[k] = horizon * k / cells;
    t.back() = horizon;
    TimeGrid g = from_nodes(std::move(t));
    g.grading_ = Grading::Uniform;
    return g;
}

TimeGrid TimeGrid::graded(double horizon, int cells, double gamma) {
    if (cells < 1) throw ConfigurationError("time grid needs at least one cell");
    if (!(gamma >= 1.0)) throw ConfigurationError("grading exponent must be ≥ 1");
    std::vector<double> t(cells + 1);
    for (int k = 0; k <= cells; ++k) t[k] = horizon * std::pow(static_cast<double>(k) / cells, gamma);
    t.back() = horizon;
    TimeGrid g = from_nodes(std::move(t));
    g.grading_ = Grading::Graded;
    g.gamma_ = gamma;
    return g;
}

TimeGrid TimeGrid::from_nodes(std::vector<double> nodes) {
    if (nodes.size() < 2) throw ConfigurationError("time grid needs at least two nodes");
    if (nodes.front() != 0.0) throw ConfigurationError("time grid must start at 0");
    for (std::size_t k = 1; k < nodes.size(); ++k)
        if (!(nodes[k] > nodes[k - 1])) throw ConfigurationError("time grid nodes must increase strictly");
    TimeGrid g;
    g.nodes_ = std::move(nodes);
    return g;
}

TimeGrid TimeGrid::refine(int factor) const {
    if (factor < 1) throw ConfigurationError("refinement factor must be positive");
    std::vector<double> t;
    t.reserve(static_cast<std::size_t>(cells()) * factor + 1);
    for (int k = 0; k < cells(); ++k)
        for (int j = 0; j < factor; ++j) t.push_back(nodes_[k] + width(k) * j / factor);
    t.push_back(nodes_.back());
    TimeGrid g = from_nodes(std::move(t));
    g.grading_ = grading_ == Grading::Uniform ? Grading::Uniform : Grading::Custom;
    return g;
}

int TimeGrid::locate(double t) const {
    if (t <= nodes_.front()) return 0;
    if (t >= nodes_.back()) return cells() - 1;
    const auto it = std::upper_bound(nodes_.begin(), nodes_.end(), t);
    return static_cast<int>(it - nodes_.begin()) - 1;
}

int TimeGrid::find_node(double t) const {
    const double tol = 1e-12 * horizon();
    const auto it = std::lower_bound(nodes_.begin(), nodes_.end(), t - tol);
    if (it != nodes_.end() && std::abs(*it - t) <= tol) return static_cast<int>(it - nodes_.begin());
    return -1;
}

GridFunction::GridFunction(TimeGrid grid, int dim) : grid_(std::move(grid)), values_(Mat::Zero(dim, grid_.size())) {}

GridFunction::GridFunction(TimeGrid grid, Mat values) : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.cols() != grid_.size())
        throw ConfigurationError("grid function needs one value per node");
}

Vec GridFunction::evaluate(double t) const { return values_.col(grid_.locate(t)); }

GridFunction GridFunction::restrict_to(const TimeGrid& coarse) const {
    GridFunction out(coarse, dim());
    for (int k = 0; k < coarse.size(); ++k) {
        const int j = grid_.find_node(coarse.node(k));
        if (j < 0) throw ConfigurationError("coarse grid is not a subset of the fine grid");
        out.set(k, at(j));
    }
    return out;
}

GridFunction GridFunction::operator+(const GridFunction& o) const { return GridFunction(grid_, values_ + o.values_); }
GridFunction GridFunction::operator-(const GridFunction& o) const { return GridFunction(grid_, values_ - o.values_); }
GridFunction GridFunction::operator*(cplx c) const { return GridFunction(grid_, values_ * c); }

}  // namespace maxreg
