#pragma once

// The computation grid, sparse weight rows assembled from (abstract) ray
// legs, and the Kaczmarz row-action solver for W f = P.
//
// A cell's weight for one element ray is the length the element's path cuts
// in the cell. A cell cut by several different element rays of the same row
// takes the average of the per-element weights, so the solver always sees at
// most one entry per (row, cell). Cells inside the obstacle are never cut by
// a valid ray, and the grid's bounding square coincides with the observation
// square, so excluded regions simply receive no entries and stay at the
// start vector's value.

#include "brt/field.hpp"
#include "brt/geometry.hpp"
#include "brt/rays.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace brt {

/// N×N cells of size d over the bounding square; row-major cell layout,
/// index = iy·N + ix with ix along +x.
struct Grid {
    int n = 0;
    double cell_size = 0.0;
    Point2 origin{};

    static Grid over(const DomainSpec& dom, int n) {
        if (n < 1) throw std::invalid_argument("Grid: need at least one cell per side");
        return {n, dom.side / n, dom.origin};
    }

    int cells() const { return n * n; }
    Box box() const {
        const double side = n * cell_size;
        return {origin.x, origin.y, origin.x + side, origin.y + side};
    }
    int cell_index(int ix, int iy) const { return iy * n + ix; }
    Point2 cell_center(int idx) const {
        const int ix = idx % n, iy = idx / n;
        return {origin.x + (ix + 0.5) * cell_size, origin.y + (iy + 0.5) * cell_size};
    }
    Box cell_box(int idx) const {
        const int ix = idx % n, iy = idx / n;
        return {origin.x + ix * cell_size, origin.y + iy * cell_size,
                origin.x + (ix + 1) * cell_size, origin.y + (iy + 1) * cell_size};
    }
};

/// Unknown per-cell field values, length N², row-major.
using GridVector = std::vector<double>;

struct CellSpan {
    std::uint32_t cell;
    double length;
};

/// Exact parametric traversal of a segment through the grid: the cells it
/// cuts, in traversal order, with the chord length per cell. Lengths sum to
/// the (clipped) segment length.
inline std::vector<CellSpan> cell_traversal(const Segment& seg, const Grid& grid) {
    if (seg.a == seg.b) throw std::invalid_argument("cell_traversal: degenerate segment");
    const auto clip = clip_to_box(seg, grid.box());
    std::vector<CellSpan> out;
    if (!clip) return out;
    const auto [tmin, tmax] = *clip;
    if (!(tmax > tmin)) return out;
    const double len = seg.length();

    // breakpoints at every grid-line crossing inside (tmin, tmax)
    std::vector<double> ts;
    ts.reserve(2 * grid.n + 4);
    ts.push_back(tmin);
    ts.push_back(tmax);
    const double d[2] = {seg.b.x - seg.a.x, seg.b.y - seg.a.y};
    const double p[2] = {seg.a.x, seg.a.y};
    const double o[2] = {grid.origin.x, grid.origin.y};
    for (int ax = 0; ax < 2; ++ax) {
        if (d[ax] == 0.0) continue;
        const double ga = (p[ax] + tmin * d[ax] - o[ax]) / grid.cell_size;
        const double gb = (p[ax] + tmax * d[ax] - o[ax]) / grid.cell_size;
        const long klo = static_cast<long>(std::ceil(std::min(ga, gb)));
        const long khi = static_cast<long>(std::floor(std::max(ga, gb)));
        for (long k = klo; k <= khi; ++k) {
            const double line = o[ax] + k * grid.cell_size;
            const double t = (line - p[ax]) / d[ax];
            if (t > tmin && t < tmax) ts.push_back(t);
        }
    }
    std::sort(ts.begin(), ts.end());

    const double min_dt = 1e-12;
    for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
        const double dt = ts[i + 1] - ts[i];
        if (dt <= min_dt) continue;
        const Point2 mid = seg.at(0.5 * (ts[i] + ts[i + 1]));
        auto clamp_idx = [&grid](double v) {
            auto idx = static_cast<long>(std::floor(v));
            if (idx < 0) idx = 0;
            if (idx >= grid.n) idx = grid.n - 1;
            return static_cast<int>(idx);
        };
        const int ix = clamp_idx((mid.x - grid.origin.x) / grid.cell_size);
        const int iy = clamp_idx((mid.y - grid.origin.y) / grid.cell_size);
        const auto cell = static_cast<std::uint32_t>(grid.cell_index(ix, iy));
        const double length = dt * len;
        if (!out.empty() && out.back().cell == cell)
            out.back().length += length;
        else
            out.push_back({cell, length});
    }
    return out;
}

/// Sparse rows of (cell, weight) with the right-hand side travel time.
/// Stored CSR-style; cell indices are strictly increasing within a row.
class WeightMatrix {
  public:
    struct RowView {
        std::span<const std::uint32_t> cells;
        std::span<const double> weights;
        double rhs;
    };

    explicit WeightMatrix(std::size_t n_cells = 0) : n_cells_(n_cells) { row_start_.push_back(0); }

    std::size_t rows() const { return rhs_.size(); }
    std::size_t n_cells() const { return n_cells_; }
    std::size_t entries() const { return cells_.size(); }

    RowView row(std::size_t j) const {
        const std::size_t b = row_start_[j], e = row_start_[j + 1];
        return {std::span(cells_).subspan(b, e - b), std::span(weights_).subspan(b, e - b),
                rhs_[j]};
    }

    /// Appends a row; entries must be sorted by cell with positive weights.
    void append_row(std::span<const std::uint32_t> cells, std::span<const double> weights,
                    double rhs) {
        if (cells.empty() || cells.size() != weights.size())
            throw std::invalid_argument("WeightMatrix: row must have matching nonempty entries");
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (cells[i] >= n_cells_)
                throw std::invalid_argument("WeightMatrix: cell index out of range");
            if (i > 0 && cells[i] <= cells[i - 1])
                throw std::invalid_argument("WeightMatrix: cells must be strictly increasing");
            if (!(weights[i] > 0.0))
                throw std::invalid_argument("WeightMatrix: weights must be positive");
        }
        cells_.insert(cells_.end(), cells.begin(), cells.end());
        weights_.insert(weights_.end(), weights.begin(), weights.end());
        rhs_.push_back(rhs);
        row_start_.push_back(cells_.size());
    }

    std::span<const double> rhs() const { return rhs_; }

  private:
    std::size_t n_cells_;
    std::vector<std::size_t> row_start_;
    std::vector<std::uint32_t> cells_;
    std::vector<double> weights_;
    std::vector<double> rhs_;
};

namespace detail {

struct RowContribution {
    std::uint32_t cell;
    std::uint32_t element;  // which element ray of the row produced it
    double length;
};

/// One row from the gathered contributions of a row's element rays. A cell's
/// weight is the length the element's path cuts in it (legs of one element
/// sum); a cell cut by several different elements takes the average of the
/// per-element weights.
inline void append_assembled_row(WeightMatrix& w, std::vector<RowContribution>& scratch,
                                 double rhs) {
    if (scratch.empty())
        throw std::invalid_argument("assemble: ray produced an empty row");
    std::sort(scratch.begin(), scratch.end(), [](const RowContribution& a, const RowContribution& b) {
        return a.cell != b.cell ? a.cell < b.cell : a.element < b.element;
    });
    static thread_local std::vector<std::uint32_t> cells;
    static thread_local std::vector<double> weights;
    cells.clear();
    weights.clear();
    std::size_t i = 0;
    while (i < scratch.size()) {
        std::size_t j = i;
        double sum = 0.0;
        std::size_t elements = 0;
        while (j < scratch.size() && scratch[j].cell == scratch[i].cell) {
            double elem_sum = 0.0;
            const std::uint32_t elem = scratch[j].element;
            while (j < scratch.size() && scratch[j].cell == scratch[i].cell &&
                   scratch[j].element == elem) {
                elem_sum += scratch[j].length;
                ++j;
            }
            sum += elem_sum;
            ++elements;
        }
        cells.push_back(scratch[i].cell);
        weights.push_back(sum / static_cast<double>(elements));
        i = j;
    }
    w.append_row(cells, weights, rhs);
}

inline void gather_legs(std::vector<RowContribution>& scratch, const Ray& ray,
                        std::uint32_t element, const Grid& grid) {
    for (int leg = 0; leg < ray.leg_count(); ++leg)
        for (const auto& span : cell_traversal(ray.leg(leg), grid))
            scratch.push_back({span.cell, element, span.length});
}

}  // namespace detail

/// One row per ray: Σᵢ w[j][i] f[i] = P_j.
inline WeightMatrix assemble(const RaySet& set, std::span<const double> times, const Grid& grid,
                             const Obstacle& obs, const DomainSpec& dom) {
    (void)obs;
    (void)dom;
    if (times.size() != set.rays.size())
        throw std::invalid_argument("assemble: times misaligned with rays");
    WeightMatrix w(static_cast<std::size_t>(grid.cells()));
    std::vector<detail::RowContribution> scratch;
    for (std::size_t j = 0; j < set.rays.size(); ++j) {
        scratch.clear();
        detail::gather_legs(scratch, set.rays[j], 0, grid);
        detail::append_assembled_row(w, scratch, times[j]);
    }
    return w;
}

/// One row per abstract ray, over all legs of all its elements.
inline WeightMatrix assemble(const AbstractRaySet& abstract, const RaySet& source,
                             std::span<const double> abstract_times, const Grid& grid,
                             const Obstacle& obs, const DomainSpec& dom) {
    (void)obs;
    (void)dom;
    if (abstract_times.size() != abstract.rays.size())
        throw std::invalid_argument("assemble: times misaligned with abstract rays");
    WeightMatrix w(static_cast<std::size_t>(grid.cells()));
    std::vector<detail::RowContribution> scratch;
    for (std::size_t j = 0; j < abstract.rays.size(); ++j) {
        scratch.clear();
        std::uint32_t element = 0;
        for (std::uint32_t idx : abstract.rays[j].elements) {
            if (idx >= source.rays.size())
                throw std::invalid_argument("assemble: abstract element index out of range");
            detail::gather_legs(scratch, source.rays[idx], element++, grid);
        }
        detail::append_assembled_row(w, scratch, abstract_times[j]);
    }
    return w;
}

struct SolveReport {
    std::size_t iterations = 0;        // row updates performed
    double final_update_norm = 0.0;    // ‖last correction‖
    double residual_norm = 0.0;        // ‖W f − P‖ at exit
};

struct KaczmarzOptions {
    double tol = 1e-10;           // stop once a full window of corrections stays below
    std::size_t max_updates = 0;  // 0 → one full sweep over the rows
    std::vector<std::uint32_t> order{};  // cyclic row order; empty → natural order
};

/// Seeded row permutation for the cyclic schedule.
inline std::vector<std::uint32_t> kaczmarz_order(std::size_t rows, std::uint64_t seed) {
    std::vector<std::uint32_t> order(rows);
    for (std::size_t i = 0; i < rows; ++i) order[i] = static_cast<std::uint32_t>(i);
    std::mt19937_64 rng(seed);
    for (std::size_t i = rows; i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
    return order;
}

inline double residual_norm(const WeightMatrix& w, const GridVector& f) {
    if (f.size() != w.n_cells())
        throw std::invalid_argument("residual_norm: vector length mismatch");
    double sum = 0.0;
    for (std::size_t j = 0; j < w.rows(); ++j) {
        const auto row = w.row(j);
        double dot = 0.0;
        for (std::size_t i = 0; i < row.cells.size(); ++i) dot += row.weights[i] * f[row.cells[i]];
        const double r = dot - row.rhs;
        sum += r * r;
    }
    return std::sqrt(sum);
}

/// Kaczmarz iteration  f ← f + ((P_h − w_h·f) / (w_h·w_h)) w_h  with rows
/// taken cyclically in the given order. Stops when every correction in a
/// window of min(rows, 4096) consecutive updates has norm below tol, or at
/// max_updates (default: one pass over the rows; on slightly inconsistent
/// travel-time data, further passes converge toward a noise floor rather
/// than a solution). Reported iterations count all row updates performed.
inline std::pair<GridVector, SolveReport> kaczmarz_solve(const WeightMatrix& w, GridVector x0,
                                                         const KaczmarzOptions& opt = {}) {
    const std::size_t rows = w.rows();
    if (rows == 0) throw std::invalid_argument("kaczmarz_solve: empty system");
    if (x0.size() != w.n_cells())
        throw std::invalid_argument("kaczmarz_solve: start vector length mismatch");
    if (!opt.order.empty() && opt.order.size() != rows)
        throw std::invalid_argument("kaczmarz_solve: order length mismatch");

    std::vector<double> inv_norm2(rows), norm(rows);
    for (std::size_t j = 0; j < rows; ++j) {
        const auto row = w.row(j);
        double n2 = 0.0;
        for (double v : row.weights) n2 += v * v;
        if (!(n2 > 0.0)) throw std::invalid_argument("kaczmarz_solve: zero-norm row");
        inv_norm2[j] = 1.0 / n2;
        norm[j] = std::sqrt(n2);
    }

    GridVector x = std::move(x0);
    const std::size_t window = std::min<std::size_t>(rows, 4096);
    const std::size_t max_updates = opt.max_updates != 0 ? opt.max_updates : rows;

    SolveReport report;
    std::size_t calm = 0;
    while (report.iterations < max_updates) {
        const std::size_t slot = report.iterations % rows;
        const std::size_t h = opt.order.empty() ? slot : opt.order[slot];
        const auto row = w.row(h);
        double dot = 0.0;
        for (std::size_t i = 0; i < row.cells.size(); ++i) dot += row.weights[i] * x[row.cells[i]];
        const double alpha = (row.rhs - dot) * inv_norm2[h];
        for (std::size_t i = 0; i < row.cells.size(); ++i)
            x[row.cells[i]] += alpha * row.weights[i];
        ++report.iterations;
        report.final_update_norm = std::abs(alpha) * norm[h];
        if (report.final_update_norm < opt.tol) {
            if (++calm >= window) break;
        } else {
            calm = 0;
        }
    }
    report.residual_norm = residual_norm(w, x);
    return {std::move(x), report};
}

}  // namespace brt
