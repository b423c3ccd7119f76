#pragma once

#include "mpsim/trace.hpp"

#include <iosfwd>
#include <optional>
#include <string_view>

namespace mpsim {

enum class PlotMetric : std::uint8_t
{
    cycle_cdf,  // value_us,fraction
    path,       // time_us,node,x_m,y_m
    gap,        // time_us,node,gap_m (distance to the controller-hosting robot)
};

std::optional<PlotMetric> plot_metric_from_string(std::string_view s);

void write_plot_data(std::ostream& out, const Trace& trace, PlotMetric metric);

}  // namespace mpsim
