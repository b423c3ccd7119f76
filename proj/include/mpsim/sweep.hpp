#pragma once

#include "mpsim/metrics.hpp"
#include "mpsim/scenario.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

namespace mpsim {

/// Axes left empty keep the template's value.
struct SweepGrid
{
    std::vector<double> per;
    std::vector<std::uint64_t> seeds;
    std::vector<std::uint32_t> retx_slots;
};

struct SweepPoint
{
    std::size_t index = 0;
    std::optional<double> per;
    std::uint64_t seed = 0;
    std::uint32_t retx_slots = 0;
};

struct SweepRow
{
    SweepPoint point;
    MetricsReport metrics;
};

SweepGrid parse_grid(const nlohmann::json& doc);
SweepGrid load_grid(const std::filesystem::path& path);

/// Cartesian product in (per, retx, seed) order.
std::vector<SweepPoint> expand_grid(const SweepGrid& grid, const ScenarioConfig& base);
ScenarioConfig apply_point(const ScenarioConfig& base, const SweepPoint& point);

/// Runs every grid point, up to `workers` at a time (0 = hardware
/// concurrency). When `out_dir` is set each run writes trace.csv and
/// metrics.json into its own subdirectory. Rows come back in grid order.
std::vector<SweepRow> sweep(const ScenarioConfig& base, const SweepGrid& grid,
                            const std::optional<std::filesystem::path>& out_dir = std::nullopt,
                            unsigned workers = 0);

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

}  // namespace mpsim
