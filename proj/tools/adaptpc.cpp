// adaptpc: command-line front end for basis adaptation of Hermite chaos expansions.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "adaptpc/adaptpc.hpp"

namespace fs = std::filesystem;
using namespace adaptpc;

namespace {

struct Common {
    std::uint64_t seed = 1;
    int order = 3;
    int dmax = 1;
    std::string epsilon = "auto";
    int restarts = 10;
    std::string config_file;
};

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--seed", c.seed, "Seed for all randomized steps")->capture_default_str();
    sub->add_option("--order", c.order, "Total polynomial order Q")->capture_default_str()->check(CLI::Range(0, 64));
    sub->add_option("--dmax", c.dmax, "Largest reduced dimension")->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_option("--epsilon", c.epsilon, "BPDN tolerance, or 'auto' for cross-validation")->capture_default_str();
    sub->add_option("--restarts", c.restarts, "Random starts per reduced dimension")->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_option("--config", c.config_file, "File of key=value solver settings")->check(CLI::ExistingFile);
}

// defaults, then the config file, then explicit flags
AdaptConfig build_config(const Common& c, const CLI::App* sub) {
    AdaptConfig cfg;
    if (!c.config_file.empty()) apply_settings_text(cfg, read_file(c.config_file), c.config_file);
    if (sub->count("--seed")) cfg.seed = c.seed;
    if (sub->count("--restarts")) cfg.restarts = c.restarts;
    if (sub->count("--epsilon")) apply_setting(cfg, "epsilon", c.epsilon);
    return cfg;
}

Dataset load_data(const std::string& path, const std::string& ranges_path) {
    if (ranges_path.empty()) return read_dataset_csv(path);
    return read_dataset_csv(path, CsvSchema{read_ranges_csv(ranges_path)});
}

std::string join_path(const fs::path& base, const std::string& p) {
    const fs::path q(p);
    return q.is_absolute() ? q.string() : (base / q).lexically_normal().string();
}

void write_crossval_csv(const CrossValReport& r, const fs::path& path) {
    std::string out = "epsilon,validation_error,skipped\n";
    for (std::size_t k = 0; k < r.epsilon_grid.size(); ++k)
        out += format_real(r.epsilon_grid[k]) + "," + (r.skipped[k] ? std::string("nan") : format_real(r.validation_errors[k])) + "," +
               (r.skipped[k] ? "1" : "0") + "\n";
    write_file_atomic(path, out);
}

void write_run(const RunManifest& manifest, const std::vector<AdaptedExpansion>& results, const fs::path& dir) {
    fs::create_directories(dir);
    std::string table = "reduced_dimension,l2_residual,fit_epsilon,used_ols,outer_iterations,converged,restart\n";
    for (const auto& a : results) {
        const int k = a.reduced_dimension();
        write_expansion(a, dir / ("d" + std::to_string(k) + ".json"));
        if (a.crossval) write_crossval_csv(*a.crossval, dir / ("crossval_d" + std::to_string(k) + ".csv"));
        table += std::to_string(k) + "," + format_real(a.l2_residual) + "," + format_real(a.fit_epsilon) + "," + (a.used_ols ? "1" : "0") +
                 "," + std::to_string(a.outer_iterations) + "," + (a.converged ? "1" : "0") + "," + std::to_string(a.restart) + "\n";
    }
    write_file_atomic(dir / "residuals.csv", table);
    write_manifest(manifest, dir / "manifest.json");
}

void print_results(const std::vector<AdaptedExpansion>& results) {
    for (const auto& a : results)
        std::printf("d'=%d  residual=%.6g  %s=%.6g  iterations=%d%s\n", a.reduced_dimension(), a.l2_residual, a.used_ols ? "ols" : "epsilon",
                    a.fit_epsilon, a.outer_iterations, a.converged ? "" : "  (not converged)");
}

int run_generate(const std::string& testbed, int dim, Eigen::Index n, std::uint64_t seed, const std::string& forcing_case, int nx, int nt,
                 const std::string& ranges_path, const std::string& out) {
    TestbedSpec spec;
    if (testbed == "ridge") {
        spec = RidgeSpec{dim > 0 ? dim : 12};
    } else {
        BurgersSpec b;
        if (dim > 0) b.forcing_terms = dim;
        b.forcing = forcing_case == "ii" ? ForcingCase::Uniform : ForcingCase::Decaying;
        b.nx = nx;
        b.nt = nt;
        spec = b;
    }
    const auto data = generate_dataset(spec, n, seed);
    if (ranges_path.empty()) write_dataset_csv(data, out);
    else write_physical_dataset_csv(data, read_ranges_csv(ranges_path), out);
    std::printf("wrote %lld x %lld samples to %s\n", static_cast<long long>(data.size()), static_cast<long long>(data.dimension() + 1),
                out.c_str());
    return 0;
}

int run_adapt(const Common& c, const CLI::App* sub, const std::string& data_path, const std::string& ranges_path, const std::string& out) {
    const auto cfg = build_config(c, sub);
    const auto data = load_data(data_path, ranges_path);
    const auto results = adapt_successive(data, c.dmax, c.order, cfg);

    RunManifest m;
    const fs::path out_dir(out);
    // paths are stored relative to the run directory so the run can be moved with its inputs
    m.data_path = fs::proximate(fs::absolute(data_path), fs::absolute(out_dir)).string();
    m.data_digest = fnv1a_digest(read_file(data_path));
    m.rows = data.size();
    m.columns = data.dimension() + 1;
    if (!ranges_path.empty()) {
        m.ranges_path = fs::proximate(fs::absolute(ranges_path), fs::absolute(out_dir)).string();
        m.ranges_digest = fnv1a_digest(read_file(ranges_path));
    }
    m.order = c.order;
    m.max_dim = c.dmax;
    m.settings = config_snapshot(cfg);
    for (const auto& a : results) m.results.push_back({"d" + std::to_string(a.reduced_dimension()) + ".json", a});
    write_run(m, results, out_dir);
    print_results(results);
    return 0;
}

int run_replay(const std::string& manifest_path, const std::string& out) {
    const auto m = read_manifest(manifest_path);
    const fs::path base = fs::path(manifest_path).parent_path();
    const auto data_path = join_path(base, m.data_path);
    if (fnv1a_digest(read_file(data_path)) != m.data_digest) throw Error("replay: dataset " + data_path + " does not match the manifest digest");
    std::string ranges_path;
    if (!m.ranges_path.empty()) {
        ranges_path = join_path(base, m.ranges_path);
        if (fnv1a_digest(read_file(ranges_path)) != m.ranges_digest)
            throw Error("replay: ranges file " + ranges_path + " does not match the manifest digest");
    }
    if (m.tool_version != tool_version) warn("replay: manifest written by version " + m.tool_version + ", running " + tool_version);

    const auto data = load_data(data_path, ranges_path);
    const auto results = adapt_successive(data, m.max_dim, m.order, config_from_snapshot(m.settings));
    if (results.size() != m.results.size()) throw Error("replay: result count differs from the manifest");
    for (std::size_t k = 0; k < results.size(); ++k) {
        const auto diff = compare_results(results[k], m.results[k].result);
        if (!diff.empty()) throw Error("replay: d'=" + std::to_string(k + 1) + " " + diff + " differs from the manifest");
    }
    if (!out.empty()) {
        RunManifest copy = m;
        const fs::path out_dir(out);
        copy.data_path = fs::proximate(fs::absolute(data_path), fs::absolute(out_dir)).string();
        if (!ranges_path.empty()) copy.ranges_path = fs::proximate(fs::absolute(ranges_path), fs::absolute(out_dir)).string();
        write_run(copy, results, out_dir);
    }
    print_results(results);
    std::printf("replay matches the manifest bit for bit\n");
    return 0;
}

int run_crossval(const Common& c, const CLI::App* sub, const std::string& data_path, const std::string& ranges_path, const std::string& expansion,
                 const std::string& out) {
    const auto cfg = build_config(c, sub);
    const auto data = load_data(data_path, ranges_path);
    Eigen::MatrixXd w;
    int order = c.order;
    if (!expansion.empty()) {
        const auto a = read_expansion(expansion);
        w = a.projection.w;
        if (!sub->count("--order")) order = a.order;
        if (w.cols() != data.dimension()) throw ArgumentError("crossval: expansion input dimension does not match the data");
    } else {
        if (c.dmax > data.dimension()) throw ArgumentError("crossval: --dmax exceeds the data dimension");
        w = random_stiefel(static_cast<int>(data.dimension()), c.dmax, std::nullopt, cfg.seed).w;
    }
    const auto report = detail::crossval_at(data, w, MultiIndexSet(static_cast<int>(w.rows()), order), cfg, cfg.seed);
    write_crossval_csv(report, out);
    std::printf("selected epsilon %.17g (min validation error %.6g at training tolerance %.6g, N_tr=%lld)\n", report.selected_epsilon,
                report.min_validation_error, report.argmin_grid_value, static_cast<long long>(report.n_train));
    return 0;
}

int run_density(const std::string& expansion, Eigen::Index samples, int grid, const std::string& bandwidth, std::uint64_t seed,
                const std::string& out) {
    const auto a = read_expansion(expansion);
    // W has orthonormal rows, so eta = W xi is standard normal in the reduced variables
    const Eigen::VectorXd u = sample_expansion(a.expansion, static_cast<std::size_t>(samples), seed);
    std::optional<double> h;
    if (bandwidth != "auto") h = detail::to_real("bandwidth", bandwidth);
    const auto curve = kde_density(u, grid, h);
    std::string text = "x,pdf\n";
    for (std::size_t k = 0; k < curve.abscissae.size(); ++k) text += format_real(curve.abscissae[k]) + "," + format_real(curve.pdf_values[k]) + "\n";
    write_file_atomic(out, text);
    std::printf("bandwidth %.6g, integral %.6f\n", curve.bandwidth, curve.integral());
    return 0;
}

int run_evaluate(const std::string& expansion, const std::string& points, const std::string& ranges_path, const std::string& out) {
    const auto a = read_expansion(expansion);
    Eigen::MatrixXd xi = read_points_csv(points);
    if (xi.cols() != a.input_dimension())
        throw ArgumentError("evaluate: points have " + std::to_string(xi.cols()) + " columns, expansion expects " +
                            std::to_string(a.input_dimension()));
    if (!ranges_path.empty()) {
        const auto ranges = read_ranges_csv(ranges_path);
        for (Eigen::Index i = 0; i < xi.rows(); ++i) xi.row(i) = uniform_to_gaussian(xi.row(i).transpose(), ranges).transpose();
    }
    const Eigen::VectorXd u = evaluate_adapted_rows(a, xi);
    const Dataset result(xi, u);
    if (out.empty()) std::fputs(dataset_csv_text(result).c_str(), stdout);
    else write_file_atomic(out, dataset_csv_text(result));
    return 0;
}

int run_report(const std::string& run_dir, const std::string& out) {
    const auto m = read_manifest(fs::path(run_dir) / "manifest.json");
    std::vector<AdaptedExpansion> results;
    for (const auto& e : m.results) results.push_back(e.result);
    print_results(results);
    std::string text = "from_dim,to_dim,multi_index,previous,current,new_term\n";
    for (const auto& pair : coefficient_carryover_report(results)) {
        std::printf("d'=%d -> %d: shared-term change %.3g, new-term norm %.3g, total norm %.3g\n", pair.from_dim, pair.to_dim,
                    pair.shared_difference_norm, pair.new_terms_norm, pair.current_norm);
        for (const auto& row : pair.rows) {
            std::string idx;
            for (std::size_t k = 0; k < row.index.entries.size(); ++k) idx += (k ? " " : "") + std::to_string(row.index.entries[k]);
            text += std::to_string(pair.from_dim) + "," + std::to_string(pair.to_dim) + "," + idx + "," + format_real(row.previous) + "," +
                    format_real(row.current) + "," + (row.new_term ? "1" : "0") + "\n";
        }
    }
    write_file_atomic(out.empty() ? fs::path(run_dir) / "carryover.csv" : fs::path(out), text);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Compressive-sensing basis adaptation for Hermite polynomial chaos"};
    app.set_version_flag("--version", tool_version);
    app.require_subcommand(1);

    Common common;
    std::string out, data_path, ranges_path, expansion, manifest, points, run_dir;

    auto* gen = app.add_subcommand("generate", "Sample a testbed and write a dataset CSV");
    std::string testbed = "ridge", forcing_case = "i";
    int dim = 0, nx = 128, nt = 128;
    Eigen::Index n = 180;
    gen->add_option("--testbed", testbed, "ridge or burgers")->capture_default_str()->check(CLI::IsMember({"ridge", "burgers"}));
    gen->add_option("--dim", dim, "Input dimension (forcing terms for burgers)")->check(CLI::PositiveNumber);
    gen->add_option("--n", n, "Number of samples")->capture_default_str()->check(CLI::PositiveNumber);
    gen->add_option("--seed", common.seed, "Sampling seed")->capture_default_str();
    gen->add_option("--case", forcing_case, "Burgers forcing weights: i (1/sqrt(l)) or ii (1/M)")->capture_default_str()->check(CLI::IsMember({"i", "ii"}));
    gen->add_option("--nx", nx, "Burgers spatial intervals")->capture_default_str()->check(CLI::Range(16, 1 << 20));
    gen->add_option("--nt", nt, "Burgers time steps")->capture_default_str()->check(CLI::Range(16, 1 << 20));
    gen->add_option("--ranges", ranges_path, "Write physical values for these parameter ranges")->check(CLI::ExistingFile);
    gen->add_option("-o,--output", out, "Output CSV")->required();

    auto* adapt = app.add_subcommand("adapt", "Learn projections and sparse coefficients for d' = 1..dmax");
    add_common(adapt, common);
    auto* data_opt = adapt->add_option("--data", data_path, "Dataset CSV")->check(CLI::ExistingFile);
    adapt->add_option("--ranges", ranges_path, "Parameter ranges for physical-space data")->check(CLI::ExistingFile);
    auto* manifest_opt = adapt->add_option("--manifest", manifest, "Replay the run recorded in this manifest")->check(CLI::ExistingFile);
    manifest_opt->excludes(data_opt);
    adapt->add_option("-o,--output", out, "Run directory");

    auto* cv = app.add_subcommand("crossval", "Cross-validate the BPDN tolerance at a fixed projection");
    add_common(cv, common);
    cv->add_option("--data", data_path, "Dataset CSV")->required()->check(CLI::ExistingFile);
    cv->add_option("--ranges", ranges_path, "Parameter ranges for physical-space data")->check(CLI::ExistingFile);
    cv->add_option("--expansion", expansion, "Take the projection from this expansion (default: random, dmax rows)")->check(CLI::ExistingFile);
    cv->add_option("-o,--output", out, "Output CSV")->required();

    auto* dens = app.add_subcommand("density", "Kernel density of an expansion under standard normal inputs");
    Eigen::Index samples = 100000;
    int grid = 512;
    std::string bandwidth = "auto";
    dens->add_option("--expansion", expansion, "Expansion JSON")->required()->check(CLI::ExistingFile);
    dens->add_option("--samples", samples, "Monte Carlo samples")->capture_default_str()->check(CLI::Range(Eigen::Index{10}, Eigen::Index{1} << 40));
    dens->add_option("--grid", grid, "Grid points")->capture_default_str()->check(CLI::Range(2, 1 << 24));
    dens->add_option("--bandwidth", bandwidth, "Kernel bandwidth or 'auto'")->capture_default_str();
    dens->add_option("--seed", common.seed, "Sampling seed")->capture_default_str();
    dens->add_option("-o,--output", out, "Output CSV")->required();

    auto* eval = app.add_subcommand("evaluate", "Evaluate an expansion at points");
    eval->add_option("--expansion", expansion, "Expansion JSON")->required()->check(CLI::ExistingFile);
    eval->add_option("--points", points, "CSV of input points")->required()->check(CLI::ExistingFile);
    eval->add_option("--ranges", ranges_path, "Points are physical values in these ranges")->check(CLI::ExistingFile);
    eval->add_option("-o,--output", out, "Output CSV (default stdout)");

    auto* rep = app.add_subcommand("report", "Residuals and coefficient carryover of a run");
    rep->add_option("--run", run_dir, "Run directory")->required()->check(CLI::ExistingDirectory);
    rep->add_option("-o,--output", out, "Carryover CSV (default <run>/carryover.csv)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*gen) return run_generate(testbed, dim, n, common.seed, forcing_case, nx, nt, ranges_path, out);
        if (*adapt) {
            if (!manifest.empty()) return run_replay(manifest, out);
            if (data_path.empty() || out.empty()) {
                std::cerr << "adapt: --data and -o are required unless --manifest is given\n";
                return 2;
            }
            return run_adapt(common, adapt, data_path, ranges_path, out);
        }
        if (*cv) return run_crossval(common, cv, data_path, ranges_path, expansion, out);
        if (*dens) return run_density(expansion, samples, grid, bandwidth, common.seed, out);
        if (*eval) return run_evaluate(expansion, points, ranges_path, out);
        if (*rep) return run_report(run_dir, out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
