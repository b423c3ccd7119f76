#include "mpsim/plot_data.hpp"

#include "mpsim/kinematics.hpp"
#include "mpsim/metrics.hpp"

#include <map>
#include <ostream>

namespace mpsim {

std::optional<PlotMetric> plot_metric_from_string(std::string_view s)
{
    if (s == "cycle-cdf")
        return PlotMetric::cycle_cdf;
    if (s == "path")
        return PlotMetric::path;
    if (s == "gap")
        return PlotMetric::gap;
    return std::nullopt;
}

void write_plot_data(std::ostream& out, const Trace& trace, PlotMetric metric)
{
    switch (metric) {
    case PlotMetric::cycle_cdf: {
        out << "value_us,fraction\n";
        for (const auto& [v, f] : cycle_time_metric(trace).cdf)
            out << format_number(v) << ',' << format_number(f) << '\n';
        break;
    }
    case PlotMetric::path:
        out << "time_us,node,x_m,y_m\n";
        for (const TraceRow& r : trace.rows())
            if (r.kind == TraceKind::pose)
                out << r.time.ticks << ',' << int{r.node} << ',' << format_number(r.f[0]) << ','
                    << format_number(r.f[1]) << '\n';
        break;
    case PlotMetric::gap: {
        out << "time_us,node,gap_m\n";
        std::optional<NodeId> master;
        for (const TraceRow& r : trace.rows())
            if (r.kind == TraceKind::cycle) {
                master = r.node;
                break;
            }
        if (!master)
            break;
        // Poses of one cycle share a timestamp; pair each robot with the master's.
        std::map<NodeId, Point> at_time;
        SimTime current{};
        auto flush = [&] {
            auto m = at_time.find(*master);
            if (m != at_time.end())
                for (const auto& [n, p] : at_time)
                    if (n != *master)
                        out << current.ticks << ',' << int{n} << ',' << format_number(distance(p, m->second))
                            << '\n';
            at_time.clear();
        };
        for (const TraceRow& r : trace.rows()) {
            if (r.kind != TraceKind::pose)
                continue;
            if (r.time != current)
                flush();
            current = r.time;
            at_time[r.node] = Point{r.f[0], r.f[1]};
        }
        flush();
        break;
    }
    }
}

}  // namespace mpsim
