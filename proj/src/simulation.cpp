#include "mpsim/simulation.hpp"

#include <algorithm>

namespace mpsim {

namespace {

Channel make_channel(const ScenarioConfig& config, RngStreams& rng)
{
    Channel ch(config.channel_count(), rng);
    for (RadioLinkModel& m : config.link_models())
        ch.add_link(std::move(m));
    return ch;
}

CycleSchedule make_schedule(const ScenarioConfig& config, RngStreams& rng)
{
    const auto loops = config.loops();
    const auto ids = config.node_ids();
    HopSequence hop = make_hop_sequence(config.mac.schedule.channels_per_band,
                                        rng.stream(config.controller_node(), RngPurpose::hop_sequence));
    return build_schedule(loops, config.mac.schedule, std::move(hop), ids);
}

const ScenarioConfig& validated(const ScenarioConfig& c)
{
    validate(c);
    return c;
}

}  // namespace

Simulation::Simulation(ScenarioConfig config)
    : config_(validated(config)),
      rng_(config_.seed),
      clocks_(config_.mac.max_drift_ppm),
      channel_(make_channel(config_, rng_)),
      schedule_(make_schedule(config_, rng_)),
      controller_(config_.controller_node(), config_.controller),
      controller_node_(config_.controller_node()),
      hosted_(config_.hosted_robot())
{
    for (const NodeConfig& n : config_.nodes)
        if (n.is_robot())
            robots_.emplace(n.id, Robot(n.id, n.params, n.initial, config_.watchdog_cycles));

    for (const NodeConfig& n : config_.nodes)
        if (n.role == NodeRole::robot || n.role == NodeRole::leader)
            controller_.add_path_robot(n.id, n.params, n.initial, ReferencePath{n.path, config_.controller.tolerance_m});
    for (const NodeConfig& n : config_.nodes)
        if (n.role == NodeRole::follower)
            controller_.add_follower(n.id, n.params, n.initial, *hosted_);

    mac_ = std::make_unique<MacNetwork>(engine_, channel_, rng_, clocks_, schedule_, config_.loops(),
                                        config_.node_ids(), config_.mac, *this, &trace_);
    for (const BeaconLossFault& f : config_.beacon_loss)
        mac_->force_beacon_loss(f.node, f.from_cycle, f.cycles);
    dt_s_ = mac_->cycle_length_us() * 1e-6;
}

void Simulation::run()
{
    mac_->start(SimTime{});
    // One extra cycle lets the last scheduled cycle drain.
    const SimTime end = SimTime::from_seconds(config_.max_duration_s) + mac_->cycle_length_us();
    engine_.run_until(end);
}

std::uint16_t Simulation::sense(const Robot& r, SimTime now) const
{
    std::vector<Segment> active;
    for (const Segment& s : config_.obstacles)
        if (s.appear_at <= now)
            active.push_back(s);
    return read_distance(r.pose(), active, r.params().sensor_max_range_mm);
}

void Simulation::on_cycle_start(std::uint32_t cycle, SimTime now)
{
    cycle_start_ = now;
    for (auto& [id, r] : robots_) {
        if (cycle > 0) {
            const bool was_expired = r.watchdog_expired();
            r.tick(dt_s_);
            if (r.watchdog_expired() && !was_expired)
                record(TraceRow{now, cycle, id, TraceKind::watchdog});
        }
        TraceRow row{now, cycle, id, TraceKind::pose};
        row.f = {r.pose().x, r.pose().y, r.pose().theta, r.wheels().actual.left, r.wheels().actual.right,
                 static_cast<double>(sense(r, now))};
        record(row);
    }

    const bool all_stationary =
        std::all_of(robots_.begin(), robots_.end(), [](const auto& kv) { return kv.second.stationary(); });
    const bool done = (controller_.all_complete() || controller_.estop_latched()) && all_stationary;
    const bool out_of_time = (now + mac_->cycle_length_us()).seconds() > config_.max_duration_s;
    if (done || out_of_time) {
        finished_ = done;
        mac_->stop();
    }
}

std::optional<Frame> Simulation::sample_uplink(NodeId plant, std::uint32_t cycle, SimTime now)
{
    auto it = robots_.find(plant);
    if (it == robots_.end())
        return std::nullopt;
    const Robot& r = it->second;
    const std::uint16_t seq = fb_seq_[plant]++;
    const std::uint16_t dist = sense(r, now);
    TraceRow row{now, cycle, plant, TraceKind::fb_sample};
    row.seq = seq;
    row.f[0] = r.wheels().left_ticks;
    row.f[1] = r.wheels().right_ticks;
    row.f[2] = dist;
    row.f[3] = 0;
    record(row);
    return make_feedback(plant, controller_node_, seq, r.wheels().left_ticks, r.wheels().right_ticks, dist);
}

DownlinkPlan Simulation::compute(std::uint32_t cycle, std::span<const Frame> uplink, SimTime now)
{
    std::vector<FeedbackSample> samples;
    for (const Frame& f : uplink) {
        const auto& fb = f.as<FeedbackBody>();
        const auto loop = config_.loops();
        std::optional<std::size_t> pos;
        for (const LoopSpec& l : loop)
            if (l.plant == f.src)
                pos = schedule_.position_of(SlotKind::uplink, l.loop_id);
        const SimTime sampled = pos ? cycle_start_ + schedule_.slot_offset_us(*pos) : now;
        samples.push_back(FeedbackSample{f.src, fb.left_ticks, fb.right_ticks, fb.distance_mm, sampled});
    }
    if (hosted_) {
        const Robot& r = robots_.at(*hosted_);
        const std::uint16_t seq = fb_seq_[*hosted_]++;
        const std::uint16_t dist = sense(r, now);
        TraceRow row{now, cycle, *hosted_, TraceKind::fb_sample};
        row.seq = seq;
        row.f[0] = r.wheels().left_ticks;
        row.f[1] = r.wheels().right_ticks;
        row.f[2] = dist;
        row.f[3] = 1;
        record(row);
        samples.push_back(FeedbackSample{*hosted_, r.wheels().left_ticks, r.wheels().right_ticks, dist, now});
    }
    std::sort(samples.begin(), samples.end(),
              [](const FeedbackSample& a, const FeedbackSample& b) { return a.robot < b.robot; });

    ControllerOutput out = controller_.controller_cycle(samples);

    for (NodeId id : controller_.robots()) {
        const Pose& e = controller_.estimate(id);
        TraceRow row{now, cycle, controller_node_, TraceKind::estimate};
        row.peer = id;
        row.f[0] = e.x;
        row.f[1] = e.y;
        row.f[2] = e.theta;
        record(row);
    }
    if (out.estop_trigger) {
        TraceRow row{now, cycle, controller_node_, TraceKind::estop};
        row.peer = *out.estop_trigger;
        row.f[0] = out.estop_trigger_distance_mm;
        record(row);
    }

    DownlinkPlan plan;
    for (const CommandDecision& d : out.commands) {
        const auto& body = d.frame.as<CommandBody>();
        TraceRow row{now, cycle, controller_node_, TraceKind::decision};
        row.peer = d.robot;
        row.seq = d.frame.seq;
        row.f[0] = body.left_mms;
        row.f[1] = body.right_mms;
        row.f[2] = body.flags;
        row.f[3] = static_cast<double>(d.reference_index);
        if (d.informing_sample)
            row.f[4] = static_cast<double>(d.informing_sample->ticks);
        row.f[5] = d.complete ? 1 : 0;
        record(row);

        if (hosted_ && d.robot == *hosted_) {
            // Local actuation at the end of the compute slot.
            const SimTime at = now + (config_.mac.schedule.slot_duration_us + config_.mac.schedule.compute_gap_us);
            const Frame frame = d.frame;
            engine_.schedule(at, "apply-local", [this, frame, cycle, at] {
                apply(robots_.at(frame.dst), frame, cycle, at, true);
            });
        } else {
            plan.commands.push_back(d.frame);
        }
    }
    for (NodeId id : out.newly_complete) {
        TraceRow row{now, cycle, controller_node_, TraceKind::complete};
        row.peer = id;
        record(row);
    }
    if (out.estop_broadcast) {
        if (hosted_) {
            const SimTime at = now + (config_.mac.schedule.slot_duration_us + config_.mac.schedule.compute_gap_us);
            const Frame frame = *out.estop_broadcast;
            const NodeId self = *hosted_;
            engine_.schedule(at, "estop-local", [this, frame, self, cycle, at] {
                apply(robots_.at(self), frame, cycle, at, true);
            });
        }
        plan.broadcast = out.estop_broadcast;
    }
    return plan;
}

void Simulation::apply(Robot& r, const Frame& frame, std::uint32_t cycle, SimTime now, bool local)
{
    const bool was_latched = r.estop_latched();
    if (frame.type() == MsgType::command) {
        const auto& body = frame.as<CommandBody>();
        const bool applied = r.apply_command(body, frame.seq);
        TraceRow row{now, cycle, r.id(), TraceKind::apply};
        row.peer = frame.src;
        row.seq = frame.seq;
        row.f[0] = body.left_mms;
        row.f[1] = body.right_mms;
        row.f[2] = body.flags;
        row.f[3] = applied ? 1 : 0;
        row.f[4] = local ? 1 : 0;
        record(row);
    } else if (frame.type() == MsgType::estop) {
        r.apply_estop();
    } else {
        return;
    }
    if (r.estop_latched() && !was_latched) {
        TraceRow row{now, cycle, r.id(), TraceKind::estop_apply};
        row.peer = frame.src;
        row.seq = frame.seq;
        record(row);
    }
}

void Simulation::on_receive(NodeId receiver, const Frame& frame, std::uint32_t cycle, SimTime now)
{
    auto it = robots_.find(receiver);
    if (it == robots_.end())
        return;
    apply(it->second, frame, cycle, now, false);
}

RunResult run_scenario(const ScenarioConfig& config)
{
    Simulation sim(config);
    sim.run();
    RunResult out;
    out.trace = sim.take_trace();
    out.metrics = compute_metrics(out.trace, sim.config());
    return out;
}

}  // namespace mpsim
