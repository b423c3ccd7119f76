#include "mpsim/mac.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mpsim {

MacNetwork::MacNetwork(Engine& engine, Channel& channel, RngStreams& rng, ClockSet& clocks, CycleSchedule schedule,
                       std::vector<LoopSpec> loops, std::vector<NodeId> nodes, MacParams params, MacClient& client,
                       Trace* trace)
    : engine_(engine),
      channel_(channel),
      rng_(rng),
      clocks_(clocks),
      schedule_(std::move(schedule)),
      current_(schedule_),
      loops_(std::move(loops)),
      nodes_(std::move(nodes)),
      params_(params),
      client_(client),
      trace_(trace),
      master_(schedule_.controller())
{
    std::sort(loops_.begin(), loops_.end(), [](const LoopSpec& a, const LoopSpec& b) { return a.loop_id < b.loop_id; });
    std::sort(nodes_.begin(), nodes_.end());
    nodes_.erase(std::unique(nodes_.begin(), nodes_.end()), nodes_.end());
    if (std::find(nodes_.begin(), nodes_.end(), master_) == nodes_.end())
        throw std::invalid_argument("controller node is not in the node list");
    if (params_.schedule.slot_duration_us < params_.phy.airtime_us())
        throw std::invalid_argument("slot duration is shorter than the frame airtime");
    for (NodeId n : nodes_)
        sync_[n] = SyncState{n, n == master_, 0, 0.0};
}

const SyncState& MacNetwork::sync_state(NodeId node) const
{
    auto it = sync_.find(node);
    if (it == sync_.end())
        throw std::out_of_range("no MAC state for node " + std::to_string(node));
    return it->second;
}

void MacNetwork::force_beacon_loss(NodeId node, std::uint32_t from_cycle, std::uint32_t cycles)
{
    beacon_loss_[node].emplace_back(from_cycle, from_cycle + cycles);
}

bool MacNetwork::beacon_blocked(NodeId node, std::uint32_t cycle) const
{
    auto it = beacon_loss_.find(node);
    if (it == beacon_loss_.end())
        return false;
    return std::any_of(it->second.begin(), it->second.end(),
                       [&](const auto& w) { return cycle >= w.first && cycle < w.second; });
}

bool MacNetwork::aligned(NodeId node, SimTime at) const
{
    if (node == master_)
        return true;
    const SyncState& s = sync_state(node);
    return s.synced && std::abs(clocks_.clock(node).error_us(at)) <= params_.guard_us();
}

std::vector<NodeId> MacNetwork::listeners(NodeId except, SimTime at) const
{
    std::vector<NodeId> out;
    for (NodeId n : nodes_)
        if (n != except && aligned(n, at))
            out.push_back(n);
    return out;
}

void MacNetwork::record(TraceRow row)
{
    if (trace_)
        trace_->append(row);
}

void MacNetwork::start(SimTime at)
{
    for (NodeId n : nodes_) {
        if (clocks_.contains(n))
            continue;
        const double drift =
            n == master_ ? 0.0
                         : rng_.stream(n, RngPurpose::drift).uniform(-params_.max_drift_ppm, params_.max_drift_ppm);
        clocks_.add(n, drift);
    }
    engine_.schedule(at, "cycle", [this, at] { begin_cycle(0, at); });
}

void MacNetwork::begin_cycle(std::uint32_t cycle, SimTime start)
{
    cycle_ = cycle;
    current_ = schedule_.for_cycle(cycle);
    uplink_received_.clear();
    pending_.clear();
    broadcast_index_.reset();

    TraceRow row{start, cycle, master_, TraceKind::cycle};
    row.f[0] = current_.cycle_length_us();
    record(row);

    client_.on_cycle_start(cycle, start);
    run_sync_beacon(cycle);

    std::uint32_t retx_number = 0;
    for (std::size_t pos = 1; pos < current_.slots().size(); ++pos) {
        const Slot slot = current_.slots()[pos];
        const SimTime at = start + current_.slot_offset_us(pos);
        switch (slot.kind) {
        case SlotKind::uplink:
            engine_.schedule(at, "uplink", [this, cycle, slot, at] { run_uplink(cycle, slot, at); });
            break;
        case SlotKind::compute:
            engine_.schedule(at, "compute", [this, cycle, at] { run_compute(cycle, at); });
            break;
        case SlotKind::downlink:
            engine_.schedule(at, "downlink", [this, cycle, slot, at] { run_downlink(cycle, slot, at); });
            break;
        case SlotKind::retx: {
            const std::uint32_t k = retx_number++;
            engine_.schedule(at, "retx", [this, cycle, slot, k, at] { run_retx(cycle, slot, k, at); });
            break;
        }
        case SlotKind::sync:
            break;
        }
    }

    const SimTime next = start + current_.cycle_length_us();
    engine_.schedule(next, "cycle", [this, cycle, next] {
        if (!stopping_)
            begin_cycle(cycle + 1, next);
    });
}

void MacNetwork::on_beacon(NodeId n, std::uint32_t cycle, std::uint32_t wave, const Slot& slot)
{
    const SimTime now = engine_.now();
    SyncState& s = sync_[n];
    double residual = 0.0;
    RngStream& jitter = rng_.stream(n, RngPurpose::sync_jitter);
    for (std::uint32_t w = 0; w < wave; ++w)
        residual += jitter.uniform(-params_.sync_jitter_us, params_.sync_jitter_us);
    clocks_.resync(n, now, residual);
    s.synced = true;
    s.missed_beacons = 0;
    s.last_correction_us = residual;

    TraceRow row{now, cycle, n, TraceKind::sync_rx, static_cast<std::int32_t>(slot.index), slot.channel, master_};
    row.f[0] = wave;
    row.f[1] = residual;
    record(row);
}

SyncReport MacNetwork::run_sync_beacon(std::uint32_t cycle)
{
    const SimTime now = engine_.now();
    const Slot& slot = current_.slots().front();
    const std::uint32_t airtime = params_.phy.airtime_us();

    SyncReport report;
    std::set<NodeId> holders{master_};

    for (std::uint32_t wave = 1; wave <= params_.max_flood_waves; ++wave) {
        const Frame beacon = make_sync(master_, static_cast<std::uint16_t>(cycle & 0xFFFF), cycle,
                                       static_cast<std::uint8_t>(wave));
        std::vector<Transmission> txs;
        for (NodeId h : holders) {
            txs.push_back(Transmission{h, beacon, slot.index, slot.channel, now + (wave - 1) * airtime, airtime});
            TraceRow row{now, cycle, h, TraceKind::sync_tx, static_cast<std::int32_t>(slot.index), slot.channel};
            row.seq = beacon.seq;
            row.f[0] = wave;
            record(row);
        }

        std::vector<NodeId> fresh;
        for (NodeId n : nodes_) {
            if (holders.count(n) != 0 || beacon_blocked(n, cycle))
                continue;
            std::vector<Transmission> linked;
            for (const Transmission& tx : txs)
                if (channel_.has_link(tx.sender, n))
                    linked.push_back(tx);
            if (linked.empty())
                continue;
            if (channel_.deliver_flood(linked, n).received)
                fresh.push_back(n);
        }
        for (NodeId n : fresh) {
            holders.insert(n);
            report.received_wave[n] = wave;
            on_beacon(n, cycle, wave, slot);
        }
        if (holders.size() == nodes_.size())
            break;
    }

    for (NodeId n : nodes_) {
        if (n == master_)
            continue;
        SyncState& s = sync_[n];
        if (report.received_wave.count(n) == 0) {
            ++s.missed_beacons;
            report.missed.push_back(n);
            TraceRow row{now, cycle, n, TraceKind::sync_miss};
            row.f[0] = s.missed_beacons;
            if (s.synced && s.missed_beacons >= params_.desync_threshold) {
                s.synced = false;
                report.desynced_now.push_back(n);
                row.f[1] = 0;
                record(row);
                TraceRow d{now, cycle, n, TraceKind::desync};
                d.f[0] = s.missed_beacons;
                record(d);
            } else {
                row.f[1] = s.synced ? 1 : 0;
                record(row);
            }
        }
    }
    return report;
}

void MacNetwork::attempt(Pending& p, std::uint32_t cycle, const Slot& slot, std::uint32_t attempt_number, SimTime at)
{
    const std::uint32_t airtime = params_.phy.airtime_us();
    const Frame& frame = p.dissemination.frame();
    const auto listening = listeners(p.dissemination.origin(), at);

    AttemptResult result = p.dissemination.attempt(channel_, AttemptSlot{slot.index, slot.channel, at}, airtime,
                                                   listening, [&](NodeId n) { return aligned(n, at); });

    for (NodeId tx : result.transmitters) {
        TraceRow row{at, cycle, tx, TraceKind::tx, static_cast<std::int32_t>(slot.index), slot.channel, frame.dst};
        row.seq = frame.seq;
        row.f[0] = static_cast<double>(frame.type());
        row.f[1] = attempt_number;
        record(row);
    }

    auto rx_row = [&](NodeId node, ReceptionCause cause) {
        TraceRow row{at, cycle, node, TraceKind::rx, static_cast<std::int32_t>(slot.index), slot.channel, frame.src};
        row.seq = frame.seq;
        row.f[0] = static_cast<double>(frame.type());
        row.f[1] = static_cast<double>(cause);
        row.f[2] = attempt_number;
        record(row);
    };

    const auto& targets = p.dissemination.targets();
    for (const ReceptionOutcome& out : result.outcomes)
        rx_row(out.receiver, out.cause);
    for (NodeId t : targets)
        if (!p.dissemination.has(t) && std::find(listening.begin(), listening.end(), t) == listening.end())
            rx_row(t, ReceptionCause::desynced_listener);

    for (const ReceptionOutcome& out : result.outcomes) {
        if (!out.received || std::find(targets.begin(), targets.end(), out.receiver) == targets.end())
            continue;
        if (!p.notified.insert(out.receiver).second)
            continue;
        const NodeId rx = out.receiver;
        const SimTime done = at + airtime;
        engine_.schedule(done, "deliver", [this, rx, frame, cycle, done] { client_.on_receive(rx, frame, cycle, done); });
    }
}

void MacNetwork::run_uplink(std::uint32_t cycle, const Slot& slot, SimTime at)
{
    const NodeId plant = *slot.owner;
    auto loop = std::find_if(loops_.begin(), loops_.end(), [&](const LoopSpec& l) { return l.loop_id == slot.loop_id; });
    if (loop == loops_.end())
        return;

    if (!aligned(plant, at)) {
        TraceRow row{at, cycle, loop->controller, TraceKind::rx, static_cast<std::int32_t>(slot.index), slot.channel,
                     plant};
        row.f[0] = static_cast<double>(MsgType::feedback);
        row.f[1] = static_cast<double>(ReceptionCause::no_transmitter);
        row.f[2] = 1;
        record(row);
        return;
    }

    std::optional<Frame> frame = client_.sample_uplink(plant, cycle, at);
    if (!frame)
        return;
    Pending p{Dissemination(*frame, plant, {loop->controller}), slot.loop_id, {}};
    attempt(p, cycle, slot, 1, at);
    if (p.dissemination.has(loop->controller))
        uplink_received_.push_back(*frame);
}

void MacNetwork::run_compute(std::uint32_t cycle, SimTime at)
{
    DownlinkPlan plan = client_.compute(cycle, uplink_received_, at);

    for (const LoopSpec& l : loops_) {
        auto it = std::find_if(plan.commands.begin(), plan.commands.end(), [&](const Frame& f) { return f.dst == l.plant; });
        if (it != plan.commands.end())
            pending_.push_back(Pending{Dissemination(*it, l.controller, {l.plant}), l.loop_id, {}});
    }
    if (plan.broadcast) {
        std::vector<NodeId> targets;
        for (const LoopSpec& l : loops_)
            targets.push_back(l.plant);
        pending_.push_back(Pending{Dissemination(*plan.broadcast, master_, std::move(targets)), std::nullopt, {}});
        broadcast_index_ = pending_.size() - 1;
    }
}

void MacNetwork::run_downlink(std::uint32_t cycle, const Slot& slot, SimTime at)
{
    for (Pending& p : pending_) {
        if (p.loop_id == slot.loop_id) {
            attempt(p, cycle, slot, 1, at);
            return;
        }
    }
}

void MacNetwork::run_retx(std::uint32_t cycle, const Slot& slot, std::uint32_t, SimTime at)
{
    Pending* chosen = nullptr;
    if (broadcast_index_ && !pending_[*broadcast_index_].dissemination.complete())
        chosen = &pending_[*broadcast_index_];
    for (std::size_t i = 0; !chosen && i < pending_.size(); ++i)
        if (pending_[i].loop_id && !pending_[i].dissemination.complete())
            chosen = &pending_[i];
    if (!chosen)
        return;
    attempt(*chosen, cycle, slot, chosen->dissemination.attempts() + 1, at);
}

}  // namespace mpsim
