#include "mpsim/sweep.hpp"

#include "mpsim/simulation.hpp"

#include <atomic>
#include <fstream>
#include <ostream>
#include <thread>

namespace mpsim {

SweepGrid parse_grid(const nlohmann::json& doc)
{
    if (!doc.is_object())
        throw ConfigError("grid: must be an object");
    SweepGrid g;
    try {
        if (doc.contains("per"))
            g.per = doc.at("per").get<std::vector<double>>();
        if (doc.contains("seeds"))
            g.seeds = doc.at("seeds").get<std::vector<std::uint64_t>>();
        if (doc.contains("retx_slots"))
            g.retx_slots = doc.at("retx_slots").get<std::vector<std::uint32_t>>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("grid: ") + e.what());
    }
    for (double p : g.per)
        if (!(p >= 0.0 && p <= 1.0))
            throw ConfigError("grid.per: values must be in [0,1]");
    for (const auto& [key, value] : doc.items())
        if (key != "per" && key != "seeds" && key != "retx_slots")
            throw ConfigError("grid: unknown axis '" + key + "'");
    if (g.per.empty() && g.seeds.empty() && g.retx_slots.empty())
        throw ConfigError("grid: at least one axis needs values");
    return g;
}

SweepGrid load_grid(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open grid file " + path.string());
    try {
        return parse_grid(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

std::vector<SweepPoint> expand_grid(const SweepGrid& grid, const ScenarioConfig& base)
{
    std::vector<std::optional<double>> pers;
    for (double p : grid.per)
        pers.emplace_back(p);
    if (pers.empty())
        pers.emplace_back(std::nullopt);
    std::vector<std::uint32_t> retx = grid.retx_slots;
    if (retx.empty())
        retx.push_back(base.mac.schedule.retx_slots);
    std::vector<std::uint64_t> seeds = grid.seeds;
    if (seeds.empty())
        seeds.push_back(base.seed);

    std::vector<SweepPoint> out;
    for (const auto& p : pers)
        for (std::uint32_t r : retx)
            for (std::uint64_t s : seeds)
                out.push_back(SweepPoint{out.size(), p, s, r});
    return out;
}

ScenarioConfig apply_point(const ScenarioConfig& base, const SweepPoint& point)
{
    ScenarioConfig c = base;
    c.seed = point.seed;
    c.mac.schedule.retx_slots = point.retx_slots;
    if (point.per)
        c.set_uniform_per(*point.per);
    validate(c);
    return c;
}

std::vector<SweepRow> sweep(const ScenarioConfig& base, const SweepGrid& grid,
                            const std::optional<std::filesystem::path>& out_dir, unsigned workers)
{
    const auto points = expand_grid(grid, base);
    std::vector<ScenarioConfig> configs;
    for (const SweepPoint& p : points)
        configs.push_back(apply_point(base, p));

    std::vector<SweepRow> rows(points.size());
    std::vector<std::exception_ptr> errors(points.size());
    std::atomic<std::size_t> next{0};

    auto work = [&] {
        for (std::size_t i = next++; i < points.size(); i = next++) {
            try {
                RunResult r = run_scenario(configs[i]);
                if (out_dir) {
                    const auto dir = *out_dir / ("run_" + std::to_string(i));
                    std::filesystem::create_directories(dir);
                    std::ofstream t(dir / "trace.csv");
                    r.trace.write_csv(t);
                    std::ofstream m(dir / "metrics.json");
                    m << to_json(r.metrics).dump(2) << '\n';
                }
                rows[i] = SweepRow{points[i], std::move(r.metrics)};
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };

    if (workers == 0)
        workers = std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, points.size()));
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < workers; ++w)
        pool.emplace_back(work);
    work();
    for (std::thread& t : pool)
        t.join();

    for (const auto& e : errors)
        if (e)
            std::rethrow_exception(e);
    return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows)
{
    out << "run,per,retx_slots,seed,cycles,duration_s,all_complete,cmd_delivery,fb_delivery,"
           "latency_min_us,latency_mean_us,latency_p99_us,latency_max_us,max_rms_m\n";
    for (const SweepRow& r : rows) {
        const MetricsReport& m = r.metrics;
        double worst_rms = 0.0;
        for (const RobotMetrics& rm : m.robots)
            worst_rms = std::max(worst_rms, rm.cross_track.rms_m);
        if (m.follower)
            worst_rms = std::max(worst_rms, m.follower->deviation.rms_m);
        out << r.point.index << ',' << (r.point.per ? format_number(*r.point.per) : "") << ','
            << r.point.retx_slots << ',' << r.point.seed << ',' << m.cycles << ',' << format_number(m.duration_s)
            << ',' << (m.all_complete ? 1 : 0) << ',' << format_number(m.command_delivery.ratio()) << ','
            << format_number(m.feedback_delivery.ratio()) << ',';
        if (m.latency.empty())
            out << ",,,,";
        else
            out << format_number(m.latency.min_us) << ',' << format_number(m.latency.mean_us) << ','
                << format_number(m.latency.p99_us) << ',' << format_number(m.latency.max_us) << ',';
        out << format_number(worst_rms) << '\n';
    }
}

}  // namespace mpsim
