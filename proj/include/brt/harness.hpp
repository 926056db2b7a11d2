#pragma once

// Experiment orchestration: boundary transceiver layouts, synthetic travel
// times, reconstruction, the error metric, and the sweep presets table1..4.
//
// Default geometry: a 512-unit square observed on a 64×64 grid (4096 cells,
// cell size 8), transceivers at the midpoint of each boundary cell side
// (4N = 256 of them), an axis-aligned square obstacle centered in the
// domain, and a requested budget of 126050 rays split evenly between broken
// and unbroken. Requests beyond what the finite layout can supply saturate
// at the exhaustive maximum and the shortfall is reported.

#include "brt/field.hpp"
#include "brt/geometry.hpp"
#include "brt/io.hpp"
#include "brt/linsys.hpp"
#include "brt/rays.hpp"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace brt {

/// Default spacing of reflection points along the obstacle boundary: one
/// point per grid-cell side length, the same density the boundary
/// transceivers get, so the discrete point sets approximate the continuous
/// boundaries at matched resolution.
inline constexpr double kDefaultObstacleSpacing = 8.0;
/// Default requested ray total and split.
inline constexpr std::size_t kDefaultRayTotal = 126050;

enum class ExperimentModel : std::uint8_t { lambertian, specular, art };

inline const char* to_string(ExperimentModel m) {
    switch (m) {
        case ExperimentModel::lambertian: return "lambertian";
        case ExperimentModel::specular: return "specular";
        case ExperimentModel::art: return "art";
    }
    return "lambertian";
}

inline ExperimentModel experiment_model_from_string(std::string_view s) {
    if (s == "lambertian") return ExperimentModel::lambertian;
    if (s == "specular") return ExperimentModel::specular;
    if (s == "art") return ExperimentModel::art;
    throw std::invalid_argument("unknown model '" + std::string(s) + "'");
}

struct ExperimentConfig {
    int grid_n = 64;
    double domain_side = 512.0;
    double obstacle_side = 234.0;
    int transceiver_density = 1;  // boundary points per grid cell side
    double obstacle_spacing = kDefaultObstacleSpacing;
    bool exclude_vertices = true;
    std::size_t n_b = kDefaultRayTotal / 2;
    std::size_t n_u = kDefaultRayTotal - kDefaultRayTotal / 2;
    ExperimentModel model = ExperimentModel::lambertian;
    int function_id = 0;
    double field_slope = kDefaultFieldSlope;
    std::uint64_t seed = 1;
    AbstractMode abstract_mode = AbstractMode::off;
    bool specular_chaining = false;
    std::size_t free_group_cap = 4;
    std::size_t free_scan_window = 64;
    double angle_tol = kDefaultAngleTol;
    int quadrature_points = kDefaultQuadraturePointsPerUnit;
    double solver_tol = 1e-10;
    std::size_t max_updates = 0;  // 0 → solver default of 20 sweeps

    std::size_t total_rays() const { return n_b + n_u; }
    double unbroken_fraction() const {
        return total_rays() == 0 ? 0.0 : static_cast<double>(n_u) / total_rays();
    }

    void set_ray_budget(std::size_t total, double fraction) {
        if (fraction < 0.0 || fraction > 1.0)
            throw std::invalid_argument("unbroken fraction must lie in [0,1]");
        n_u = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(total)));
        n_b = total - n_u;
    }

    DomainSpec domain() const { return {domain_side, {0.0, 0.0}}; }
    Obstacle obstacle() const { return {domain().center(), obstacle_side}; }

    void validate() const {
        domain().validate();
        obstacle().validate(domain());
        if (grid_n < 1) throw std::invalid_argument("grid_n must be at least 1");
        if (total_rays() == 0) throw std::invalid_argument("n_b + n_u must be positive");
        if (function_id < 0 || function_id >= kNumTestFunctions)
            throw std::invalid_argument("function id must be in 0..12");
        if (transceiver_density < 1)
            throw std::invalid_argument("transceiver_density must be at least 1");
        if (!(obstacle_spacing > 0.0) || obstacle_spacing >= obstacle_side)
            throw std::invalid_argument("obstacle_spacing must lie in (0, obstacle_side)");
        if (quadrature_points < 1) throw std::invalid_argument("quadrature must be at least 1");
        if (!(solver_tol >= 0.0)) throw std::invalid_argument("tol must be nonnegative");
    }
};

/// Transceivers at evenly spaced positions on each boundary cell side
/// (density per side; 1 → the midpoint). Every point acts as both
/// transmitter and receiver. Reflection points sample ∂Ω₁.
inline TransceiverLayout make_transceiver_layout(const ExperimentConfig& cfg) {
    const DomainSpec dom = cfg.domain();
    const double cell = dom.side / cfg.grid_n;
    std::vector<Point2> boundary;
    boundary.reserve(4 * static_cast<std::size_t>(cfg.grid_n) * cfg.transceiver_density);
    auto emit_side = [&](Point2 start, Point2 step_dir) {
        for (int k = 0; k < cfg.grid_n; ++k) {
            for (int j = 1; j <= cfg.transceiver_density; ++j) {
                const double offset =
                    (k + static_cast<double>(j) / (cfg.transceiver_density + 1)) * cell;
                boundary.push_back(start + step_dir * offset);
            }
        }
    };
    const Box b = dom.box();
    emit_side({b.xmin, b.ymin}, {1.0, 0.0});  // bottom
    emit_side({b.xmax, b.ymin}, {0.0, 1.0});  // right
    emit_side({b.xmin, b.ymax}, {1.0, 0.0});  // top
    emit_side({b.xmin, b.ymin}, {0.0, 1.0});  // left
    TransceiverLayout layout;
    layout.receivers = boundary;
    layout.transmitters = std::move(boundary);
    layout.obstacle_points =
        obstacle_boundary_points(cfg.obstacle(), cfg.obstacle_spacing, cfg.exclude_vertices);
    return layout;
}

/// Field values at cell centers, row-major.
inline GridVector field_on_grid(const ScalarField& field, const Grid& grid) {
    GridVector out(static_cast<std::size_t>(grid.cells()));
    for (int i = 0; i < grid.cells(); ++i) out[i] = field(grid.cell_center(i));
    return out;
}

/// Cells whose closed square does not meet the closed obstacle. The masked
/// region is where reconstructions are compared.
inline std::vector<bool> default_error_mask(const Grid& grid, const Obstacle& obs) {
    std::vector<bool> mask(static_cast<std::size_t>(grid.cells()));
    const Box ob = obs.box();
    for (int i = 0; i < grid.cells(); ++i) {
        const Box cb = grid.cell_box(i);
        const bool overlaps =
            cb.xmin < ob.xmax && cb.xmax > ob.xmin && cb.ymin < ob.ymax && cb.ymax > ob.ymin;
        mask[i] = !overlaps;
    }
    return mask;
}

/// Mean absolute per-cell difference over the masked cells.
inline double reconstruction_error(const GridVector& reconstructed, const GridVector& truth,
                                   const std::vector<bool>& mask) {
    if (reconstructed.size() != truth.size() || mask.size() != truth.size())
        throw std::invalid_argument("reconstruction_error: length mismatch");
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!mask[i]) continue;
        sum += std::abs(reconstructed[i] - truth[i]);
        ++count;
    }
    if (count == 0) throw std::invalid_argument("reconstruction_error: empty mask");
    return sum / static_cast<double>(count);
}

struct ExperimentReport {
    double error = 0.0;
    std::size_t iterations = 0;
    std::size_t n_broken = 0;    // realized counts
    std::size_t n_unbroken = 0;
    std::size_t requested_broken = 0;
    std::size_t requested_unbroken = 0;
    std::size_t reduced_rows = 0;  // rows actually solved
    double residual_norm = 0.0;
    double wall_time_seconds = 0.0;
    ExperimentConfig config;
};

/// Full pipeline products, for callers that also want the data.
struct ExperimentArtifacts {
    ExperimentReport report;
    RaySet rays;
    std::vector<double> times;
    AbstractRaySet abstract;  // empty when abstract_mode == off
    GridVector reconstruction;
    GridVector truth;
};

inline ExperimentArtifacts run_experiment_full(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto start = std::chrono::steady_clock::now();

    const DomainSpec dom = cfg.domain();
    const Obstacle obs = cfg.obstacle();
    const Grid grid = Grid::over(dom, cfg.grid_n);
    const TransceiverLayout layout = make_transceiver_layout(cfg);

    // the ART baseline runs the identical pipeline with the same total ray
    // budget, all unbroken
    const bool art = cfg.model == ExperimentModel::art;
    const std::size_t want_b = art ? 0 : cfg.n_b;
    const std::size_t want_u = art ? cfg.total_rays() : cfg.n_u;
    const ReflectionModel reflection = cfg.model == ExperimentModel::specular
                                           ? ReflectionModel::specular
                                           : ReflectionModel::lambertian;

    ExperimentArtifacts out;
    auto built = build_ray_set(layout, dom, obs, want_b, want_u, reflection, cfg.seed,
                               cfg.angle_tol);
    out.rays = std::move(built.set);

    const auto field = ScalarField::test_function(cfg.function_id, dom, cfg.field_slope);
    out.times = travel_times(out.rays, field, cfg.quadrature_points);

    KaczmarzOptions solver;
    solver.tol = cfg.solver_tol;
    // one row update per measurement by default, whether or not the
    // equations were compressed into abstract rays
    solver.max_updates = cfg.max_updates != 0 ? cfg.max_updates : out.rays.rays.size();

    WeightMatrix w(0);
    if (cfg.abstract_mode != AbstractMode::off) {
        PartitionOptions popt;
        popt.specular_chaining = cfg.specular_chaining;
        popt.angle_tol = cfg.angle_tol;
        popt.free_group_cap = cfg.free_group_cap;
        popt.free_scan_window = cfg.free_scan_window;
        if (cfg.abstract_mode == AbstractMode::free) {
            // grid-disjoint grouping keeps the reduced rows exact
            popt.footprint = [&grid](const Ray& ray) {
                std::vector<std::uint32_t> cells;
                for (int i = 0; i < ray.leg_count(); ++i)
                    for (const auto& span : cell_traversal(ray.leg(i), grid))
                        cells.push_back(span.cell);
                std::sort(cells.begin(), cells.end());
                cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
                return cells;
            };
            popt.footprint_cells = static_cast<std::size_t>(grid.cells());
        }
        out.abstract = partition_abstract_rays(out.rays, cfg.abstract_mode, dom, popt);
        const auto reduced_times = abstract_travel_times(out.abstract, out.times);
        w = assemble(out.abstract, out.rays, reduced_times, grid, obs, dom);
    } else {
        w = assemble(out.rays, out.times, grid, obs, dom);
    }

    auto [reconstruction, solve_report] =
        kaczmarz_solve(w, GridVector(static_cast<std::size_t>(grid.cells()), 0.0), solver);
    out.reconstruction = std::move(reconstruction);
    out.truth = field_on_grid(field, grid);

    ExperimentReport& report = out.report;
    report.error = reconstruction_error(out.reconstruction, out.truth,
                                        default_error_mask(grid, obs));
    report.iterations = solve_report.iterations;
    report.n_broken = built.broken_generated;
    report.n_unbroken = built.unbroken_generated;
    report.requested_broken = want_b;
    report.requested_unbroken = want_u;
    report.reduced_rows = w.rows();
    report.residual_norm = solve_report.residual_norm;
    report.config = cfg;
    report.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

inline ExperimentReport run_experiment(const ExperimentConfig& cfg) {
    return run_experiment_full(cfg).report;
}

// ---------------------------------------------------------------------------
// sweeps
// ---------------------------------------------------------------------------

struct SweepResult {
    std::vector<ResultRow> rows;          // one per sweep point (+ average rows)
    std::vector<ExperimentReport> reports;
};

inline ResultRow to_result_row(std::string key, const ExperimentReport& report) {
    return {std::move(key), report.error, static_cast<double>(report.iterations),
            static_cast<double>(report.reduced_rows), report.wall_time_seconds};
}

/// Mean over rows, labeled `Average` (optionally suffixed by a group key).
inline ResultRow average_row(std::span<const ResultRow> rows, std::string label = "Average") {
    if (rows.empty()) throw std::invalid_argument("average_row: no rows");
    ResultRow avg{std::move(label), 0.0, 0.0, 0.0, 0.0};
    for (const auto& row : rows) {
        avg.error += row.error;
        avg.iterations += row.iterations;
        avg.reduced_rows += row.reduced_rows;
        avg.wall_time += row.wall_time;
    }
    const auto n = static_cast<double>(rows.size());
    avg.error /= n;
    avg.iterations /= n;
    avg.reduced_rows /= n;
    avg.wall_time /= n;
    return avg;
}

namespace detail {

template <typename MakeConfig>
SweepResult run_sweep(std::size_t points, MakeConfig&& make) {
    SweepResult result;
    for (std::size_t i = 0; i < points; ++i) {
        auto [key, cfg] = make(i);
        result.reports.push_back(run_experiment(cfg));
        result.rows.push_back(to_result_row(std::move(key), result.reports.back()));
    }
    result.rows.push_back(average_row(result.rows));
    return result;
}

}  // namespace detail

/// Repeats the same configuration with seeds base, base+1, ...
inline SweepResult run_repeat_sweep(const ExperimentConfig& base, std::size_t repeats) {
    if (repeats == 0) throw std::invalid_argument("run_repeat_sweep: empty sweep");
    return detail::run_sweep(repeats, [&](std::size_t i) {
        ExperimentConfig cfg = base;
        cfg.seed = base.seed + i;
        return std::make_pair(std::to_string(i + 1), cfg);
    });
}

inline SweepResult run_obstacle_side_sweep(const ExperimentConfig& base,
                                           std::span<const double> sides) {
    if (sides.empty()) throw std::invalid_argument("run_obstacle_side_sweep: empty sweep");
    return detail::run_sweep(sides.size(), [&](std::size_t i) {
        ExperimentConfig cfg = base;
        cfg.obstacle_side = sides[i];
        cfg.seed = base.seed + i;
        return std::make_pair(format_double(sides[i]), cfg);
    });
}

inline SweepResult run_fraction_sweep(const ExperimentConfig& base,
                                      std::span<const double> fractions) {
    if (fractions.empty()) throw std::invalid_argument("run_fraction_sweep: empty sweep");
    return detail::run_sweep(fractions.size(), [&](std::size_t i) {
        ExperimentConfig cfg = base;
        cfg.set_ray_budget(base.total_rays(), fractions[i]);
        return std::make_pair(format_double(fractions[i]), cfg);
    });
}

inline SweepResult run_function_sweep(const ExperimentConfig& base, std::span<const int> ids) {
    if (ids.empty()) throw std::invalid_argument("run_function_sweep: empty sweep");
    return detail::run_sweep(ids.size(), [&](std::size_t i) {
        ExperimentConfig cfg = base;
        cfg.function_id = ids[i];
        return std::make_pair("f" + std::to_string(ids[i]), cfg);
    });
}

// ---------------------------------------------------------------------------
// table presets
// ---------------------------------------------------------------------------

enum class TablePreset : std::uint8_t { table1, table2, table3, table4 };

inline const std::vector<double>& table2_obstacle_sides() {
    static const std::vector<double> sides{130, 156, 182, 208, 234, 260, 286, 312, 338, 364};
    return sides;
}

inline const std::vector<double>& table3_fractions() {
    static const std::vector<double> fractions{0.50, 0.55, 0.60, 0.65, 0.70,
                                               0.75, 0.80, 0.85, 0.90, 0.95};
    return fractions;
}

namespace detail {

/// Interleaves a baseline (ART) run with the method run at each sweep point;
/// both share the point's seed.
template <typename MakeConfig>
SweepResult run_paired_sweep(std::size_t points, MakeConfig&& make) {
    SweepResult result;
    std::vector<ResultRow> art_rows, method_rows;
    for (std::size_t i = 0; i < points; ++i) {
        auto [key, cfg] = make(i);
        ExperimentConfig art_cfg = cfg;
        art_cfg.model = ExperimentModel::art;
        result.reports.push_back(run_experiment(art_cfg));
        art_rows.push_back(to_result_row(key + "/art", result.reports.back()));
        result.rows.push_back(art_rows.back());
        result.reports.push_back(run_experiment(cfg));
        method_rows.push_back(to_result_row(key + "/" + to_string(cfg.model),
                                            result.reports.back()));
        result.rows.push_back(method_rows.back());
    }
    result.rows.push_back(average_row(art_rows, "Average/art"));
    result.rows.push_back(average_row(method_rows, "Average/method"));
    return result;
}

}  // namespace detail

/// table1: ten repeats of ART vs the configured reflection model.
/// table2: the obstacle-side sweep, ART-paired.
/// table3: the unbroken-fraction sweep (single model).
/// table4: all thirteen test functions, ART-paired.
inline SweepResult run_table(const ExperimentConfig& base, TablePreset preset) {
    switch (preset) {
        case TablePreset::table1:
            return detail::run_paired_sweep(10, [&](std::size_t i) {
                ExperimentConfig cfg = base;
                cfg.seed = base.seed + i;
                return std::make_pair(std::to_string(i + 1), cfg);
            });
        case TablePreset::table2: {
            const auto& sides = table2_obstacle_sides();
            return detail::run_paired_sweep(sides.size(), [&](std::size_t i) {
                ExperimentConfig cfg = base;
                cfg.obstacle_side = sides[i];
                cfg.seed = base.seed + i;
                return std::make_pair(format_double(sides[i]), cfg);
            });
        }
        case TablePreset::table3:
            return run_fraction_sweep(base, table3_fractions());
        case TablePreset::table4: {
            std::vector<int> ids(kNumTestFunctions);
            for (int i = 0; i < kNumTestFunctions; ++i) ids[i] = i;
            return detail::run_paired_sweep(ids.size(), [&](std::size_t i) {
                ExperimentConfig cfg = base;
                cfg.function_id = ids[i];
                return std::make_pair("f" + std::to_string(ids[i]), cfg);
            });
        }
    }
    throw std::invalid_argument("run_table: unknown preset");
}

// ---------------------------------------------------------------------------
// configuration files
// ---------------------------------------------------------------------------

inline std::string serialize_config(const ExperimentConfig& cfg) {
    std::string s;
    auto kv = [&s](std::string_view key, const std::string& value) {
        if (!s.empty()) s += ' ';
        s += key;
        s += '=';
        s += value;
    };
    kv("grid_n", std::to_string(cfg.grid_n));
    kv("domain_side", format_double(cfg.domain_side));
    kv("obstacle_side", format_double(cfg.obstacle_side));
    kv("transceiver_density", std::to_string(cfg.transceiver_density));
    kv("obstacle_spacing", format_double(cfg.obstacle_spacing));
    kv("exclude_vertices", cfg.exclude_vertices ? "true" : "false");
    kv("n_b", std::to_string(cfg.n_b));
    kv("n_u", std::to_string(cfg.n_u));
    kv("model", to_string(cfg.model));
    kv("function", std::to_string(cfg.function_id));
    kv("field_slope", format_double(cfg.field_slope));
    kv("seed", std::to_string(cfg.seed));
    kv("abstract_mode", to_string(cfg.abstract_mode));
    kv("specular_chaining", cfg.specular_chaining ? "true" : "false");
    kv("free_group_cap", std::to_string(cfg.free_group_cap));
    kv("free_scan_window", std::to_string(cfg.free_scan_window));
    kv("angle_tol", format_double(cfg.angle_tol));
    kv("quadrature", std::to_string(cfg.quadrature_points));
    kv("tol", format_double(cfg.solver_tol));
    kv("max_updates", std::to_string(cfg.max_updates));
    return s;
}

namespace detail {

inline bool parse_bool(std::string_view v, const std::string& context) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw std::invalid_argument(context + ": bad boolean '" + std::string(v) + "'");
}

}  // namespace detail

/// Applies one key=value setting. `rays` and `unbroken_fraction` rebalance
/// the current budget in application order. Unknown keys are a hard error.
inline void apply_config_setting(ExperimentConfig& cfg, std::string_view key,
                                 std::string_view value, const std::string& context) {
    const std::string v(value);
    if (key == "grid_n") cfg.grid_n = static_cast<int>(detail::parse_uint(value, context));
    else if (key == "domain_side") cfg.domain_side = detail::parse_double(value, context);
    else if (key == "obstacle_side") cfg.obstacle_side = detail::parse_double(value, context);
    else if (key == "transceiver_density")
        cfg.transceiver_density = static_cast<int>(detail::parse_uint(value, context));
    else if (key == "obstacle_spacing") cfg.obstacle_spacing = detail::parse_double(value, context);
    else if (key == "exclude_vertices") cfg.exclude_vertices = detail::parse_bool(value, context);
    else if (key == "n_b") cfg.n_b = detail::parse_uint(value, context);
    else if (key == "n_u") cfg.n_u = detail::parse_uint(value, context);
    else if (key == "rays") cfg.set_ray_budget(detail::parse_uint(value, context),
                                               cfg.unbroken_fraction());
    else if (key == "unbroken_fraction")
        cfg.set_ray_budget(cfg.total_rays(), detail::parse_double(value, context));
    else if (key == "model") cfg.model = experiment_model_from_string(v);
    else if (key == "function") cfg.function_id = static_cast<int>(detail::parse_uint(value, context));
    else if (key == "field_slope" || key == "k") cfg.field_slope = detail::parse_double(value, context);
    else if (key == "seed") cfg.seed = detail::parse_uint(value, context);
    else if (key == "abstract_mode") cfg.abstract_mode = abstract_mode_from_string(v);
    else if (key == "specular_chaining")
        cfg.specular_chaining = detail::parse_bool(value, context);
    else if (key == "free_group_cap") cfg.free_group_cap = detail::parse_uint(value, context);
    else if (key == "free_scan_window") cfg.free_scan_window = detail::parse_uint(value, context);
    else if (key == "angle_tol") cfg.angle_tol = detail::parse_double(value, context);
    else if (key == "quadrature")
        cfg.quadrature_points = static_cast<int>(detail::parse_uint(value, context));
    else if (key == "tol") cfg.solver_tol = detail::parse_double(value, context);
    else if (key == "max_updates") cfg.max_updates = detail::parse_uint(value, context);
    else throw std::invalid_argument(context + ": unknown configuration key '" +
                                     std::string(key) + "'");
}

/// Line-oriented `key=value` file with `#` comments, applied over cfg.
inline void apply_config_file(ExperimentConfig& cfg, const std::filesystem::path& path) {
    auto in = detail::open_in(path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view view(line);
        while (!view.empty() && (view.front() == ' ' || view.front() == '\t')) view.remove_prefix(1);
        while (!view.empty() &&
               (view.back() == ' ' || view.back() == '\t' || view.back() == '\r'))
            view.remove_suffix(1);
        if (view.empty() || view.front() == '#') continue;
        const auto eq = view.find('=');
        const std::string context = path.string() + ":" + std::to_string(lineno);
        if (eq == std::string_view::npos)
            throw std::invalid_argument(context + ": expected key=value");
        apply_config_setting(cfg, view.substr(0, eq), view.substr(eq + 1), context);
    }
}

}  // namespace brt
