#include "mpsim/plot_data.hpp"
#include "mpsim/simulation.hpp"
#include "mpsim/sweep.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace mpsim;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

void write_file(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << text;
}

int cmd_run(const std::string& config_path, const std::string& out_dir, std::optional<std::uint64_t> seed)
{
    ScenarioConfig config = load_scenario(config_path);
    if (seed)
        config.seed = *seed;
    RunResult r = run_scenario(config);

    fs::create_directories(out_dir);
    {
        std::ofstream t(fs::path(out_dir) / "trace.csv", std::ios::binary);
        r.trace.write_csv(t);
    }
    write_file(fs::path(out_dir) / "metrics.json", to_json(r.metrics).dump(2) + "\n");
    {
        std::ofstream c(fs::path(out_dir) / "cycle_cdf.csv", std::ios::binary);
        write_plot_data(c, r.trace, PlotMetric::cycle_cdf);
    }

    const MetricsReport& m = r.metrics;
    std::cout << m.scenario << ": " << m.cycles << " cycles, " << format_number(m.duration_s) << " s, "
              << (m.all_complete ? "complete" : "incomplete");
    if (!m.latency.empty())
        std::cout << ", latency mean " << format_number(m.latency.mean_us) << " us";
    for (const RobotMetrics& rm : m.robots)
        if (!rm.cross_track.series.empty())
            std::cout << ", robot " << int{rm.robot} << " rms " << format_number(rm.cross_track.rms_m) << " m";
    if (m.follower)
        std::cout << ", follower rms " << format_number(m.follower->deviation.rms_m) << " m, min gap "
                  << format_number(m.follower->min_gap_m) << " m";
    std::cout << "\n";
    return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& grid_path, const std::string& out_dir,
              unsigned jobs)
{
    const ScenarioConfig base = load_scenario(config_path);
    const SweepGrid grid = load_grid(grid_path);
    const auto rows = sweep(base, grid, fs::path(out_dir), jobs);

    std::ofstream csv(fs::path(out_dir) / "sweep.csv", std::ios::binary);
    write_sweep_csv(csv, rows);
    nlohmann::json all = nlohmann::json::array();
    for (const SweepRow& r : rows) {
        nlohmann::json j = to_json(r.metrics);
        j["per"] = r.point.per ? nlohmann::json(*r.point.per) : nlohmann::json();
        j["retx_slots"] = r.point.retx_slots;
        all.push_back(j);
    }
    write_file(fs::path(out_dir) / "sweep.json", all.dump(2) + "\n");
    std::cout << rows.size() << " runs written to " << out_dir << "\n";
    return 0;
}

int cmd_plot(const std::string& trace_path, const std::string& metric_name, const std::string& out_path)
{
    const auto metric = plot_metric_from_string(metric_name);
    std::ifstream in(trace_path);
    if (!in)
        throw std::runtime_error("cannot open trace " + trace_path);
    const Trace trace = Trace::read_csv(in);
    if (out_path.empty()) {
        write_plot_data(std::cout, trace, *metric);
    } else {
        std::ofstream out(out_path, std::ios::binary);
        write_plot_data(out, trace, *metric);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Co-simulation of wirelessly controlled mobile robots"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
    auto* run = app.add_subcommand("run", "Run one scenario and write trace.csv, metrics.json and cycle_cdf.csv");
    run->add_option("config", config_path, "Scenario JSON")->required()->check(CLI::ExistingFile);
    run->add_option("--out", out_dir, "Output directory");
    run->add_option("--seed", seed, "Override the scenario seed");

    std::string grid_path;
    unsigned jobs = 0;
    auto* sw = app.add_subcommand("sweep", "Run a parameter grid and aggregate metrics");
    sw->add_option("config", config_path, "Scenario JSON template")->required()->check(CLI::ExistingFile);
    sw->add_option("--grid", grid_path, "Grid JSON with per, seeds and retx_slots axes")
        ->required()
        ->check(CLI::ExistingFile);
    sw->add_option("--out", out_dir, "Output directory");
    sw->add_option("--jobs", jobs, "Concurrent runs (0 = all cores)");

    std::string trace_path;
    std::string metric;
    std::string plot_out;
    auto* plot = app.add_subcommand("plot-data", "Extract plot-ready CSV from a trace");
    plot->add_option("trace", trace_path, "Trace CSV")->required()->check(CLI::ExistingFile);
    plot->add_option("--metric", metric, "cycle-cdf, path or gap")
        ->required()
        ->check(CLI::IsMember({"cycle-cdf", "path", "gap"}));
    plot->add_option("--out", plot_out, "Output file (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run)
            return cmd_run(config_path, out_dir, seed);
        if (*sw)
            return cmd_sweep(config_path, grid_path, out_dir, jobs);
        return cmd_plot(trace_path, metric, plot_out);
    } catch (const ConfigError& e) {
        std::cerr << "config rejected: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}
