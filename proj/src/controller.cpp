#include "mpsim/controller.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mpsim {

Pose dead_reckon(const Pose& estimate, std::int32_t delta_left_ticks, std::int32_t delta_right_ticks,
                 const RobotParams& robot)
{
    const double q = robot.tick_quantum_m();
    const double sl = delta_left_ticks * q;
    const double sr = delta_right_ticks * q;
    const double ds = 0.5 * (sl + sr);
    const double dtheta = (sr - sl) / robot.track_width_m;
    return advance_arc(estimate, ds, std::abs(dtheta) < 1e-12 ? 0.0 : dtheta);
}

Point to_robot_frame(const Pose& pose, const Point& target)
{
    const double dx = target.x - pose.x;
    const double dy = target.y - pose.y;
    const double c = std::cos(pose.theta);
    const double s = std::sin(pose.theta);
    return Point{c * dx + s * dy, -s * dx + c * dy};
}

Deviation deviation_error(const Pose& estimate, const Point& target)
{
    const Point local = to_robot_frame(estimate, target);
    const double d = distance(estimate, target);
    const double bearing = d == 0.0 ? 0.0 : normalize_angle(std::atan2(local.y, local.x));
    return Deviation{d, bearing};
}

std::optional<double> requested_curvature(const Point& t, const ControllerParams& params)
{
    if (t.x <= params.x_min_m)
        return std::nullopt;
    if (params.curve == CurveModel::circular_arc)
        return 2.0 * t.y / (t.x * t.x + t.y * t.y);
    return 2.0 * t.y / (t.x * t.x);
}

WheelPair quadratic_curve_speeds(const Pose& estimate, const Point& target, double v_nom_mms,
                                 const ControllerParams& params, const RobotParams& robot,
                                 std::optional<double> taper_distance_m)
{
    const Point local = to_robot_frame(estimate, target);
    const double half_track = 0.5 * robot.track_width_m;

    auto rotate = [&]() {
        const double w = params.omega_turn * half_track * 1000.0;
        const double sign = local.y >= 0.0 ? 1.0 : -1.0;
        return WheelPair{-sign * w, sign * w};
    };

    std::optional<double> kappa = requested_curvature(local, params);
    if (!kappa)
        return rotate();
    if (std::abs(*kappa) > params.kappa_max) {
        if (params.curvature_limit == CurvatureLimit::rotate_in_place)
            return rotate();
        *kappa = std::clamp(*kappa, -params.kappa_max, params.kappa_max);
    }

    const double dist = taper_distance_m.value_or(distance(estimate, target));
    const double v = std::min(v_nom_mms, params.k_slow * dist * 1000.0);
    WheelPair w{v * (1.0 - *kappa * half_track), v * (1.0 + *kappa * half_track)};

    const double peak = std::max(std::abs(w.left), std::abs(w.right));
    const double limit = robot.max_wheel_speed_mms;
    if (peak > limit) {
        const double scale = limit / peak;
        w.left *= scale;
        w.right *= scale;
    }
    return w;
}

ReferenceStatus advance_reference(std::size_t& index, const Pose& estimate, const ReferencePath& path)
{
    while (index < path.points.size() && distance(estimate, path.points[index]) < path.tolerance_m)
        ++index;
    return index >= path.points.size() ? ReferenceStatus::complete : ReferenceStatus::tracking;
}

bool FollowerQueue::update(const Pose& leader)
{
    const Point p{leader.x, leader.y};
    if (last_appended_ && distance(*last_appended_, p) < min_spacing_)
        return false;
    points_.push_back(p);
    last_appended_ = p;
    return true;
}

bool estop_decision(std::span<const std::uint16_t> distances_mm, std::uint16_t threshold_mm)
{
    return std::any_of(distances_mm.begin(), distances_mm.end(),
                       [&](std::uint16_t d) { return d != kNoDistanceReading && d < threshold_mm; });
}

PathController::PathController(NodeId self, ControllerParams params) : self_(self), params_(params) {}

void PathController::add_path_robot(NodeId robot, const RobotParams& params, const Pose& initial,
                                    ReferencePath path)
{
    if (path.points.empty() || !(path.tolerance_m > 0.0))
        throw std::invalid_argument("reference path of robot " + std::to_string(robot) +
                                    " needs at least one point and a positive tolerance");
    Track t;
    t.robot = robot;
    t.params = params;
    t.estimate = initial;
    t.path = std::move(path);
    tracks_[robot] = std::move(t);
}

void PathController::add_follower(NodeId robot, const RobotParams& params, const Pose& initial, NodeId leader)
{
    if (tracks_.count(leader) == 0)
        throw std::invalid_argument("follower " + std::to_string(robot) + " references unknown leader " +
                                    std::to_string(leader));
    Track t;
    t.robot = robot;
    t.params = params;
    t.estimate = initial;
    t.leader = leader;
    t.queue.emplace(params_.follower_min_spacing_m, params_.follower_standoff_m);
    tracks_[robot] = std::move(t);
}

PathController::Track& PathController::track(NodeId robot)
{
    auto it = tracks_.find(robot);
    if (it == tracks_.end())
        throw std::out_of_range("controller has no robot " + std::to_string(robot));
    return it->second;
}

const PathController::Track& PathController::track(NodeId robot) const
{
    auto it = tracks_.find(robot);
    if (it == tracks_.end())
        throw std::out_of_range("controller has no robot " + std::to_string(robot));
    return it->second;
}

bool PathController::all_complete() const
{
    return std::all_of(tracks_.begin(), tracks_.end(), [](const auto& kv) { return kv.second.complete; });
}

bool PathController::complete(NodeId robot) const { return track(robot).complete; }
const Pose& PathController::estimate(NodeId robot) const { return track(robot).estimate; }
std::size_t PathController::reference_index(NodeId robot) const { return track(robot).index; }

const FollowerQueue* PathController::follower_queue(NodeId robot) const
{
    const Track& t = track(robot);
    return t.queue ? &*t.queue : nullptr;
}

std::vector<NodeId> PathController::robots() const
{
    std::vector<NodeId> out;
    for (const auto& kv : tracks_)
        out.push_back(kv.first);
    return out;
}

void PathController::ingest(Track& t, const FeedbackSample& fb)
{
    t.estimate = dead_reckon(t.estimate, tick_delta(fb.left_ticks, t.last_left), tick_delta(fb.right_ticks, t.last_right),
                             t.params);
    t.last_left = fb.left_ticks;
    t.last_right = fb.right_ticks;
    t.last_sample = fb.sampled_at;
    t.last_distance = fb.distance_mm;
}

WheelPair PathController::steer_path(Track& t, bool& just_completed)
{
    if (t.complete)
        return WheelPair{};
    if (advance_reference(t.index, t.estimate, *t.path) == ReferenceStatus::complete) {
        t.complete = true;
        just_completed = true;
        return WheelPair{};
    }
    return quadratic_curve_speeds(t.estimate, t.path->points[t.index], params_.v_nom_mms, params_, t.params);
}

WheelPair PathController::steer_follower(Track& t, bool& just_completed)
{
    const Track& lead = track(*t.leader);
    FollowerQueue& q = *t.queue;
    q.update(lead.estimate);

    while (!q.empty() && distance(t.estimate, q.front()) < params_.tolerance_m) {
        q.pop();
        ++t.index;
    }

    const double gap = distance(t.estimate, Point{lead.estimate.x, lead.estimate.y});
    const bool holding = gap < q.standoff() || q.empty();
    if (holding) {
        if (lead.complete && !t.complete) {
            t.complete = true;
            just_completed = true;
        }
        return WheelPair{};
    }
    // Slow down on the spare gap, not on the (closely spaced) queue points.
    // The tolerance keeps a creep speed so the standoff is actually reached.
    const double spare = gap - q.standoff() + params_.tolerance_m;
    return quadratic_curve_speeds(t.estimate, q.front(), params_.v_nom_mms, params_, t.params, spare);
}

ControllerOutput PathController::controller_cycle(std::span<const FeedbackSample> received)
{
    ControllerOutput out;

    std::vector<std::uint16_t> readings;
    for (const FeedbackSample& fb : received) {
        Track& t = track(fb.robot);
        ingest(t, fb);
        readings.push_back(fb.distance_mm);
    }

    if (!estop_latched_ && estop_decision(readings, params_.estop_threshold_mm)) {
        estop_latched_ = true;
        for (const FeedbackSample& fb : received) {
            if (fb.distance_mm != kNoDistanceReading && fb.distance_mm < params_.estop_threshold_mm) {
                out.estop_trigger = fb.robot;
                out.estop_trigger_distance_mm = fb.distance_mm;
                break;
            }
        }
    }

    std::vector<Track*> order;
    for (auto& kv : tracks_)
        if (!kv.second.leader)
            order.push_back(&kv.second);
    for (auto& kv : tracks_)
        if (kv.second.leader)
            order.push_back(&kv.second);

    for (Track* t : order) {
        bool just_completed = false;
        WheelPair speeds;
        if (!estop_latched_)
            speeds = t->leader ? steer_follower(*t, just_completed) : steer_path(*t, just_completed);
        if (just_completed)
            out.newly_complete.push_back(t->robot);

        const auto left = static_cast<std::int16_t>(std::lround(speeds.left));
        const auto right = static_cast<std::int16_t>(std::lround(speeds.right));
        const std::uint8_t flags = estop_latched_ ? kFlagEstop : 0;
        const std::uint16_t seq = t->seq++;
        out.commands.push_back(CommandDecision{t->robot, make_command(self_, t->robot, seq, left, right, flags),
                                               WheelPair{static_cast<double>(left), static_cast<double>(right)},
                                               t->estimate, t->index, t->complete, t->last_sample});
    }

    if (estop_latched_)
        out.estop_broadcast = make_estop(self_, estop_seq_++);
    return out;
}

}  // namespace mpsim
