// Command-line interface for the broken-ray tomography toolkit.
//
// Subcommands: gen-rays, travel-times, reduce, reconstruct, experiment,
// table1..table4. Exit codes: 0 success, 1 invalid input, 2 I/O failure.

#include "brt/brt.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace brt;

struct CommonOptions {
    std::optional<std::string> config;
    std::optional<std::uint64_t> seed;
    std::optional<int> grid_n;
    std::optional<double> obstacle_side;
    std::optional<double> obstacle_spacing;
    std::optional<std::size_t> rays;
    std::optional<double> unbroken_fraction;
    std::optional<std::string> model;
    std::optional<int> function_id;
    std::optional<double> field_slope;
    std::optional<std::string> abstract_mode;
    std::optional<double> angle_tol;
    std::optional<int> quadrature;
    std::optional<double> tol;
    std::optional<std::size_t> max_updates;
};

void add_common_options(CLI::App& cmd, CommonOptions& opt) {
    cmd.add_option("--config", opt.config, "key=value configuration file");
    cmd.add_option("--seed", opt.seed, "random seed");
    cmd.add_option("--grid-n", opt.grid_n, "cells per grid side");
    cmd.add_option("--obstacle-side", opt.obstacle_side, "obstacle side length");
    cmd.add_option("--obstacle-spacing", opt.obstacle_spacing,
                   "reflection point spacing on the obstacle boundary");
    cmd.add_option("--rays", opt.rays, "total requested rays");
    cmd.add_option("--unbroken-fraction", opt.unbroken_fraction,
                   "fraction of the ray budget that is unbroken");
    cmd.add_option("--model", opt.model, "lambertian | specular | art");
    cmd.add_option("--function", opt.function_id, "test function id (0..12)");
    cmd.add_option("--k", opt.field_slope, "field slope K");
    cmd.add_option("--abstract-mode", opt.abstract_mode, "off | chained | free");
    cmd.add_option("--angle-tol", opt.angle_tol, "specular angle tolerance (radians)");
    cmd.add_option("--quadrature", opt.quadrature, "quadrature nodes per length-unit");
    cmd.add_option("--tol", opt.tol, "solver stopping tolerance");
    cmd.add_option("--max-updates", opt.max_updates, "solver row-update budget (0 = default)");
}

ExperimentConfig resolve_config(const CommonOptions& opt) {
    ExperimentConfig cfg;
    if (opt.config) apply_config_file(cfg, *opt.config);
    if (opt.seed) cfg.seed = *opt.seed;
    if (opt.grid_n) cfg.grid_n = *opt.grid_n;
    if (opt.obstacle_side) cfg.obstacle_side = *opt.obstacle_side;
    if (opt.obstacle_spacing) cfg.obstacle_spacing = *opt.obstacle_spacing;
    if (opt.rays || opt.unbroken_fraction) {
        const std::size_t total = opt.rays.value_or(cfg.total_rays());
        const double fraction = opt.unbroken_fraction.value_or(cfg.unbroken_fraction());
        cfg.set_ray_budget(total, fraction);
    }
    if (opt.model) cfg.model = experiment_model_from_string(*opt.model);
    if (opt.function_id) cfg.function_id = *opt.function_id;
    if (opt.field_slope) cfg.field_slope = *opt.field_slope;
    if (opt.abstract_mode) cfg.abstract_mode = abstract_mode_from_string(*opt.abstract_mode);
    if (opt.angle_tol) cfg.angle_tol = *opt.angle_tol;
    if (opt.quadrature) cfg.quadrature_points = *opt.quadrature;
    if (opt.tol) cfg.solver_tol = *opt.tol;
    if (opt.max_updates) cfg.max_updates = *opt.max_updates;
    return cfg;
}

std::vector<std::string> config_comment(const ExperimentConfig& cfg) {
    return {"config: " + serialize_config(cfg)};
}

int cmd_gen_rays(const CommonOptions& opt, const std::string& out) {
    ExperimentConfig cfg = resolve_config(opt);
    cfg.validate();
    const auto layout = make_transceiver_layout(cfg);
    const bool art = cfg.model == ExperimentModel::art;
    const auto built = build_ray_set(
        layout, cfg.domain(), cfg.obstacle(), art ? 0 : cfg.n_b,
        art ? cfg.total_rays() : cfg.n_u,
        cfg.model == ExperimentModel::specular ? ReflectionModel::specular
                                               : ReflectionModel::lambertian,
        cfg.seed, cfg.angle_tol);
    std::vector<std::string> comments = config_comment(cfg);
    comments.push_back("broken=" + std::to_string(built.broken_generated) + " of " +
                       std::to_string(built.broken_requested) + " requested");
    comments.push_back("unbroken=" + std::to_string(built.unbroken_generated) + " of " +
                       std::to_string(built.unbroken_requested) + " requested");
    if (built.broken_shortfall() || built.unbroken_shortfall())
        comments.push_back("shortfall: layout exhausted before the request was met");
    write_ray_set(out, built.set, comments);
    std::printf("wrote %zu rays (%zu broken, %zu unbroken) to %s\n", built.set.rays.size(),
                built.broken_generated, built.unbroken_generated, out.c_str());
    return 0;
}

int cmd_travel_times(const CommonOptions& opt, const std::string& in, const std::string& out) {
    const ExperimentConfig cfg = resolve_config(opt);
    const auto set = read_ray_set(in);
    const auto field = ScalarField::test_function(cfg.function_id, cfg.domain(), cfg.field_slope);
    const auto times = travel_times(set, field, cfg.quadrature_points);
    write_travel_times(out, times);
    std::printf("wrote %zu travel times to %s\n", times.size(), out.c_str());
    return 0;
}

int cmd_reduce(const CommonOptions& opt, const std::string& in, const std::string& out) {
    ExperimentConfig cfg = resolve_config(opt);
    if (cfg.abstract_mode == AbstractMode::off) cfg.abstract_mode = AbstractMode::free;
    const auto set = read_ray_set(in);
    const Grid grid = Grid::over(cfg.domain(), cfg.grid_n);
    PartitionOptions popt;
    popt.specular_chaining = cfg.specular_chaining;
    popt.angle_tol = cfg.angle_tol;
    popt.free_group_cap = cfg.free_group_cap;
    popt.free_scan_window = cfg.free_scan_window;
    if (cfg.abstract_mode == AbstractMode::free) {
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
    const auto abstract = partition_abstract_rays(set, cfg.abstract_mode, cfg.domain(), popt);
    write_abstract_ray_set(out, abstract);
    std::printf("reduced %zu rays to %zu abstract rays (%s mode) -> %s\n", set.rays.size(),
                abstract.rays.size(), to_string(abstract.mode), out.c_str());
    return 0;
}

int cmd_reconstruct(const CommonOptions& opt, const std::string& in, const std::string& times_path,
                    const std::string& abstract_path, const std::string& matrix_in,
                    const std::string& matrix_out, const std::string& out) {
    const ExperimentConfig cfg = resolve_config(opt);
    WeightMatrix w(0);
    Grid grid = Grid::over(cfg.domain(), cfg.grid_n);
    std::size_t measurements = 0;
    if (!matrix_in.empty()) {
        auto loaded = read_weight_matrix(matrix_in);
        grid = Grid{loaded.grid_n, loaded.cell_size, {0.0, 0.0}};
        w = std::move(loaded.matrix);
    } else {
        const auto set = read_ray_set(in);
        const auto times = read_travel_times(times_path);
        measurements = times.size();
        if (!abstract_path.empty()) {
            const auto abstract = read_abstract_ray_set(abstract_path);
            const auto reduced = abstract_travel_times(abstract, times);
            w = assemble(abstract, set, reduced, grid, cfg.obstacle(), cfg.domain());
        } else {
            w = assemble(set, times, grid, cfg.obstacle(), cfg.domain());
        }
    }
    if (!matrix_out.empty()) write_weight_matrix(matrix_out, w, grid);
    KaczmarzOptions solver;
    solver.tol = cfg.solver_tol;
    // budget follows the measurement count, like the experiment pipeline
    solver.max_updates = cfg.max_updates != 0 ? cfg.max_updates : measurements;
    const auto [f, report] =
        kaczmarz_solve(w, GridVector(static_cast<std::size_t>(grid.cells()), 0.0), solver);
    write_grid_vector(out, f, grid);
    std::printf("solved %zu rows in %zu updates (residual %.6e) -> %s\n", w.rows(),
                report.iterations, report.residual_norm, out.c_str());
    return 0;
}

int cmd_experiment(const CommonOptions& opt, const std::string& out,
                   const std::string& field_out, ResultsFormat format, bool timings) {
    const ExperimentConfig cfg = resolve_config(opt);
    const auto artifacts = run_experiment_full(cfg);
    const auto& report = artifacts.report;
    const std::vector<ResultRow> rows{to_result_row(to_string(cfg.model), report)};
    emit_results(out, rows, format, timings, config_comment(cfg));
    if (!field_out.empty()) {
        const Grid grid = Grid::over(cfg.domain(), cfg.grid_n);
        write_grid_vector(field_out, artifacts.reconstruction, grid);
    }
    std::printf("error=%.6e iterations=%zu rays=%zu+%zu rows=%zu -> %s\n", report.error,
                report.iterations, report.n_broken, report.n_unbroken, report.reduced_rows,
                out.c_str());
    return 0;
}

int cmd_table(const CommonOptions& opt, TablePreset preset, const std::string& out,
              ResultsFormat format, bool timings) {
    const ExperimentConfig cfg = resolve_config(opt);
    const auto sweep = run_table(cfg, preset);
    emit_results(out, sweep.rows, format, timings, config_comment(cfg));
    std::printf("wrote %zu result rows to %s\n", sweep.rows.size(), out.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"broken-ray travel-time tomography toolkit"};
    app.require_subcommand(1);

    CommonOptions opt;
    std::string in, out, times_path, abstract_path, matrix_in, matrix_out, field_out;
    std::string format_name = "table";
    bool timings = false;

    auto* gen = app.add_subcommand("gen-rays", "generate a ray-set file");
    add_common_options(*gen, opt);
    gen->add_option("--out", out, "output ray-set file")->required();

    auto* tt = app.add_subcommand("travel-times", "integrate travel times for a ray set");
    add_common_options(*tt, opt);
    tt->add_option("--in", in, "input ray-set file")->required();
    tt->add_option("--out", out, "output travel-times file")->required();

    auto* red = app.add_subcommand("reduce", "partition a ray set into abstract rays");
    add_common_options(*red, opt);
    red->add_option("--in", in, "input ray-set file")->required();
    red->add_option("--out", out, "output abstract-ray-set file")->required();

    auto* rec = app.add_subcommand("reconstruct", "assemble and solve the linear system");
    add_common_options(*rec, opt);
    rec->add_option("--in", in, "input ray-set file");
    rec->add_option("--times", times_path, "travel-times file");
    rec->add_option("--abstract", abstract_path, "abstract-ray-set file (optional)");
    rec->add_option("--matrix-in", matrix_in, "solve a stored weight-matrix container instead");
    rec->add_option("--matrix-out", matrix_out, "also write the assembled weight matrix");
    rec->add_option("--out", out, "output grid-vector file")->required();

    auto* exp = app.add_subcommand("experiment", "run one end-to-end experiment");
    add_common_options(*exp, opt);
    exp->add_option("--out", out, "output results file")->required();
    exp->add_option("--field-out", field_out, "also write the reconstructed grid vector");
    exp->add_option("--format", format_name, "table | csv");
    exp->add_flag("--timings", timings, "include wall-time column");

    CLI::App* tables[4];
    const char* table_names[4] = {"table1", "table2", "table3", "table4"};
    const char* table_help[4] = {
        "ten ART/BRTL repeats", "obstacle-side sweep, ART-paired",
        "unbroken-fraction sweep", "all thirteen test functions, ART-paired"};
    for (int i = 0; i < 4; ++i) {
        tables[i] = app.add_subcommand(table_names[i], table_help[i]);
        add_common_options(*tables[i], opt);
        tables[i]->add_option("--out", out, "output results file")->required();
        tables[i]->add_option("--format", format_name, "table | csv");
        tables[i]->add_flag("--timings", timings, "include wall-time column");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        const ResultsFormat format = results_format_from_string(format_name);
        if (gen->parsed()) return cmd_gen_rays(opt, out);
        if (tt->parsed()) return cmd_travel_times(opt, in, out);
        if (red->parsed()) return cmd_reduce(opt, in, out);
        if (rec->parsed()) {
            if (matrix_in.empty() && (in.empty() || times_path.empty()))
                throw std::invalid_argument("reconstruct needs --in and --times, or --matrix-in");
            return cmd_reconstruct(opt, in, times_path, abstract_path, matrix_in, matrix_out, out);
        }
        if (exp->parsed()) return cmd_experiment(opt, out, field_out, format, timings);
        for (int i = 0; i < 4; ++i)
            if (tables[i]->parsed())
                return cmd_table(opt, static_cast<TablePreset>(i), out, format, timings);
        std::fprintf(stderr, "no subcommand\n");
        return 1;
    } catch (const brt::io_error& e) {
        std::fprintf(stderr, "i/o error: %s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "invalid input: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
