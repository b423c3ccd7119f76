#include "mpsim/metrics.hpp"

#include "mpsim/channel.hpp"
#include "mpsim/frame.hpp"
#include "mpsim/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mpsim {

namespace {

bool is_type(const TraceRow& r, MsgType t) { return r.has(0) && r.f[0] == static_cast<double>(t); }

std::optional<NodeId> master_node(const Trace& trace)
{
    for (const TraceRow& r : trace.rows())
        if (r.kind == TraceKind::cycle)
            return r.node;
    return std::nullopt;
}

double rms(const std::vector<std::pair<SimTime, double>>& series)
{
    if (series.empty())
        return 0.0;
    double acc = 0.0;
    for (const auto& [t, e] : series)
        acc += e * e;
    return std::sqrt(acc / static_cast<double>(series.size()));
}

double seg_distance(const Point& p, const Point& a, const Point& b)
{
    const double dx = b.x - a.x;
    const double dy = b.y - a.y;
    const double len2 = dx * dx + dy * dy;
    double t = 0.0;
    if (len2 > 0.0)
        t = std::clamp(((p.x - a.x) * dx + (p.y - a.y) * dy) / len2, 0.0, 1.0);
    return std::hypot(p.x - (a.x + t * dx), p.y - (a.y + t * dy));
}

}  // namespace

LatencyStats cycle_time_metric(const Trace& trace)
{
    LatencyStats s;
    std::map<std::pair<int, std::int64_t>, double> informing;
    std::vector<double> values;

    for (const TraceRow& r : trace.rows()) {
        switch (r.kind) {
        case TraceKind::cycle:
            if (s.cycle_length_us == 0 && r.has(0))
                s.cycle_length_us = static_cast<std::uint32_t>(r.f[0]);
            break;
        case TraceKind::decision:
            if (r.peer == r.node)
                break;  // actuated locally, no radio in the loop
            ++s.decisions;
            if (r.has(4))
                informing[{r.peer, r.seq}] = r.f[4];
            else
                informing.erase({r.peer, r.seq});
            break;
        case TraceKind::apply: {
            if (r.f[4] != 0.0 || r.f[3] != 1.0)
                break;
            auto it = informing.find({r.node, r.seq});
            if (it == informing.end())
                break;
            values.push_back(static_cast<double>(r.time.ticks) - it->second);
            break;
        }
        default:
            break;
        }
    }

    if (values.empty())
        return s;
    std::sort(values.begin(), values.end());
    s.count = values.size();
    s.min_us = values.front();
    s.max_us = values.back();
    s.mean_us = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    const auto rank = static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(values.size())));
    s.p99_us = values[std::max<std::size_t>(rank, 1) - 1];
    for (std::size_t i = 0; i < values.size(); ++i) {
        ++s.histogram[static_cast<std::int64_t>(std::llround(values[i]))];
        if (i + 1 == values.size() || values[i + 1] != values[i])
            s.cdf.emplace_back(values[i], static_cast<double>(i + 1) / static_cast<double>(values.size()));
    }
    return s;
}

double distance_to_polyline(const Point& p, std::span<const Point> polyline)
{
    if (polyline.empty())
        return 0.0;
    if (polyline.size() == 1)
        return distance(p, polyline.front());
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < polyline.size(); ++i)
        best = std::min(best, seg_distance(p, polyline[i], polyline[i + 1]));
    return best;
}

CrossTrack cross_track_metric(const Trace& trace, NodeId robot, std::span<const Point> polyline, SimTime from)
{
    CrossTrack ct;
    for (const TraceRow& r : trace.rows()) {
        if (r.kind != TraceKind::pose || r.node != robot || r.time < from)
            continue;
        const double e = distance_to_polyline(Point{r.f[0], r.f[1]}, polyline);
        ct.series.emplace_back(r.time, e);
        ct.max_m = std::max(ct.max_m, e);
    }
    ct.rms_m = rms(ct.series);
    return ct;
}

std::vector<Point> traced_path(const Trace& trace, NodeId robot)
{
    std::vector<Point> out;
    for (const TraceRow& r : trace.rows()) {
        if (r.kind != TraceKind::pose || r.node != robot)
            continue;
        const Point p{r.f[0], r.f[1]};
        if (out.empty() || out.back().x != p.x || out.back().y != p.y)
            out.push_back(p);
    }
    return out;
}

MetricsReport compute_metrics(const Trace& trace, const ScenarioConfig& config)
{
    MetricsReport m;
    m.scenario = config.name;
    m.seed = config.seed;
    m.latency = cycle_time_metric(trace);
    if (!trace.empty())
        m.duration_s = trace.rows().back().time.seconds();

    const NodeId master = master_node(trace).value_or(config.controller_node());
    std::map<NodeId, double> completed;
    for (const TraceRow& r : trace.rows()) {
        switch (r.kind) {
        case TraceKind::cycle:
            m.cycles = r.cycle + 1;
            break;
        case TraceKind::decision:
            if (r.peer != r.node)
                ++m.command_delivery.attempted;
            break;
        case TraceKind::apply:
            if (r.f[4] == 0.0)
                ++m.command_delivery.delivered;
            break;
        case TraceKind::fb_sample:
            if (r.f[3] == 0.0)
                ++m.feedback_delivery.attempted;
            break;
        case TraceKind::rx:
            if (r.node == master && is_type(r, MsgType::feedback)) {
                if (r.f[1] == static_cast<double>(ReceptionCause::delivered))
                    ++m.feedback_delivery.delivered;
                else if (r.f[1] == static_cast<double>(ReceptionCause::no_transmitter))
                    ++m.feedback_delivery.attempted;
            }
            break;
        case TraceKind::complete:
            completed.emplace(static_cast<NodeId>(r.peer), r.time.seconds());
            break;
        default:
            break;
        }
    }

    for (const NodeConfig& n : config.nodes) {
        if (!n.is_robot())
            continue;
        RobotMetrics rm;
        rm.robot = n.id;
        if (!n.path.empty()) {
            std::vector<Point> poly{Point{n.initial.x, n.initial.y}};
            poly.insert(poly.end(), n.path.begin(), n.path.end());
            rm.cross_track = cross_track_metric(trace, n.id, poly);
        }
        if (auto it = completed.find(n.id); it != completed.end())
            rm.completion_time_s = it->second;
        m.robots.push_back(std::move(rm));
    }
    m.all_complete = !m.robots.empty() && std::all_of(m.robots.begin(), m.robots.end(), [](const RobotMetrics& r) {
        return r.completion_time_s.has_value();
    });

    if (config.kind == ScenarioKind::leader_follower) {
        FollowerMetrics fm;
        fm.leader = *config.hosted_robot();
        fm.follower = config.radio_robot_ids().front();
        for (const TraceRow& r : trace.rows()) {
            if (r.kind == TraceKind::decision && r.peer == fm.follower && r.f[3] >= 1.0) {
                fm.converged_at = r.time;
                break;
            }
        }
        if (fm.converged_at) {
            const auto leader_path = traced_path(trace, fm.leader);
            fm.deviation = cross_track_metric(trace, fm.follower, leader_path, *fm.converged_at);

            std::map<std::uint64_t, Point> leader_at;
            for (const TraceRow& r : trace.rows())
                if (r.kind == TraceKind::pose && r.node == fm.leader)
                    leader_at[r.time.ticks] = Point{r.f[0], r.f[1]};
            fm.min_gap_m = std::numeric_limits<double>::infinity();
            for (const TraceRow& r : trace.rows()) {
                if (r.kind != TraceKind::pose || r.node != fm.follower || r.time < *fm.converged_at)
                    continue;
                auto it = leader_at.find(r.time.ticks);
                if (it == leader_at.end())
                    continue;
                const double gap = distance(Point{r.f[0], r.f[1]}, it->second);
                if (gap < fm.min_gap_m) {
                    fm.min_gap_m = gap;
                    fm.min_gap_at = r.time;
                }
            }
            if (!fm.min_gap_at)
                fm.min_gap_m = 0.0;
        }
        m.follower = fm;
    }

    // Emergency stop: trigger on the first true reading below threshold.
    const std::size_t robot_count = config.robot_ids().size();
    std::optional<EstopMetrics> es;
    std::map<std::uint64_t, std::pair<std::size_t, bool>> still;  // time -> (poses seen, all stationary)
    for (const TraceRow& r : trace.rows()) {
        if (!es && r.kind == TraceKind::pose && r.has(5) && r.f[5] < config.controller.estop_threshold_mm) {
            es.emplace();
            es->trigger = r.time;
            es->trigger_cycle = r.cycle;
            for (const TraceRow& q : trace.rows())
                if (q.kind == TraceKind::pose && q.time == r.time)
                    es->speed_at_trigger_mms =
                        std::max({es->speed_at_trigger_mms, std::abs(q.f[3]), std::abs(q.f[4])});
        }
        if (!es)
            continue;
        if (r.kind == TraceKind::estop && !es->latch_cycle)
            es->latch_cycle = r.cycle;
        if (r.kind == TraceKind::estop_apply)
            es->apply_cycle.emplace(r.node, r.cycle);
        if (r.kind == TraceKind::pose && es->latch_cycle && !es->stationary_at) {
            auto& [seen, all_still] = still.try_emplace(r.time.ticks, 0, true).first->second;
            ++seen;
            all_still = all_still && r.f[3] == 0.0 && r.f[4] == 0.0;
            if (seen == robot_count && all_still && es->apply_cycle.size() == robot_count) {
                es->stationary_at = r.time;
                es->latency_us = static_cast<double>(r.time.ticks - es->trigger.ticks);
            }
        }
    }
    m.estop = es;
    return m;
}

nlohmann::json to_json(const LatencyStats& s)
{
    nlohmann::json j;
    j["decisions"] = s.decisions;
    j["count"] = s.count;
    j["cycle_length_us"] = s.cycle_length_us;
    if (!s.empty()) {
        j["min_us"] = s.min_us;
        j["mean_us"] = s.mean_us;
        j["p99_us"] = s.p99_us;
        j["max_us"] = s.max_us;
    }
    j["cdf"] = nlohmann::json::array();
    for (const auto& [v, f] : s.cdf)
        j["cdf"].push_back({v, f});
    j["histogram"] = nlohmann::json::object();
    for (const auto& [v, n] : s.histogram)
        j["histogram"][std::to_string(v)] = n;
    return j;
}

namespace {

nlohmann::json delivery_json(const DeliveryStats& d)
{
    return {{"attempted", d.attempted}, {"delivered", d.delivered}, {"ratio", d.ratio()}};
}

nlohmann::json cross_track_json(const CrossTrack& c)
{
    return {{"samples", c.series.size()}, {"rms_m", c.rms_m}, {"max_m", c.max_m}};
}

}  // namespace

nlohmann::json to_json(const MetricsReport& m)
{
    nlohmann::json j;
    j["scenario"] = m.scenario;
    j["seed"] = m.seed;
    j["duration_s"] = m.duration_s;
    j["cycles"] = m.cycles;
    j["all_complete"] = m.all_complete;
    j["latency"] = to_json(m.latency);
    j["command_delivery"] = delivery_json(m.command_delivery);
    j["feedback_delivery"] = delivery_json(m.feedback_delivery);
    j["robots"] = nlohmann::json::array();
    for (const RobotMetrics& r : m.robots) {
        nlohmann::json rj{{"robot", r.robot}, {"cross_track", cross_track_json(r.cross_track)}};
        rj["completion_time_s"] = r.completion_time_s ? nlohmann::json(*r.completion_time_s) : nlohmann::json();
        j["robots"].push_back(rj);
    }
    if (m.follower) {
        const FollowerMetrics& f = *m.follower;
        nlohmann::json fj{{"follower", f.follower}, {"leader", f.leader}};
        fj["converged_at_s"] = f.converged_at ? nlohmann::json(f.converged_at->seconds()) : nlohmann::json();
        fj["deviation"] = cross_track_json(f.deviation);
        fj["min_gap_m"] = f.min_gap_m;
        j["follower"] = fj;
    }
    if (m.estop) {
        const EstopMetrics& e = *m.estop;
        nlohmann::json ej{{"trigger_s", e.trigger.seconds()},
                          {"trigger_cycle", e.trigger_cycle},
                          {"speed_at_trigger_mms", e.speed_at_trigger_mms}};
        ej["latch_cycle"] = e.latch_cycle ? nlohmann::json(*e.latch_cycle) : nlohmann::json();
        ej["latency_us"] = e.latency_us ? nlohmann::json(*e.latency_us) : nlohmann::json();
        ej["apply_cycle"] = nlohmann::json::object();
        for (const auto& [n, c] : e.apply_cycle)
            ej["apply_cycle"][std::to_string(n)] = c;
        j["estop"] = ej;
    }
    return j;
}

}  // namespace mpsim
