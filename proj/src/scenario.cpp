#include "mpsim/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

namespace mpsim {

using nlohmann::json;

const char* to_string(ScenarioKind k)
{
    return k == ScenarioKind::remote_control ? "remote-control" : "leader-follower";
}

const char* to_string(NodeRole r)
{
    switch (r) {
    case NodeRole::controller: return "controller";
    case NodeRole::robot: return "robot";
    case NodeRole::leader: return "leader";
    case NodeRole::follower: return "follower";
    case NodeRole::relay: return "relay";
    }
    return "?";
}

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what)
{
    throw ConfigError(where + ": " + what);
}

/// Reads an optional field, keeping `out` when it is absent.
template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& where)
{
    auto it = obj.find(key);
    if (it == obj.end())
        return;
    try {
        out = it->get<T>();
    } catch (const json::exception& e) {
        fail(where + "." + key, e.what());
    }
}

void read_positive(const json& obj, const char* key, double& out, const std::string& where)
{
    read(obj, key, out, where);
    if (!(out > 0.0))
        fail(where + "." + key, "must be > 0");
}

void read_probability(const json& obj, const char* key, double& out, const std::string& where)
{
    read(obj, key, out, where);
    if (!(out >= 0.0 && out <= 1.0))
        fail(where + "." + key, "must be in [0,1]");
}

const json& require(const json& obj, const char* key, const std::string& where)
{
    auto it = obj.find(key);
    if (it == obj.end())
        fail(where, std::string("missing required field '") + key + "'");
    return *it;
}

void require_object(const json& j, const std::string& where)
{
    if (!j.is_object())
        fail(where, "must be an object");
}

Point parse_point(const json& j, const std::string& where)
{
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        fail(where, "must be [x, y]");
    return Point{j[0].get<double>(), j[1].get<double>()};
}

NodeId parse_node_id(const json& j, const std::string& where)
{
    if (!j.is_number_integer())
        fail(where, "node id must be an integer");
    const auto v = j.get<long long>();
    if (v < 0 || v >= kBroadcast)
        fail(where, "node id must be in [0,254]");
    return static_cast<NodeId>(v);
}

BurstModel parse_burst(const json& j, const std::string& where)
{
    require_object(j, where);
    BurstModel b;
    read_probability(j, "p_good_to_bad", b.p_good_to_bad, where);
    read_probability(j, "p_bad_to_good", b.p_bad_to_good, where);
    read_probability(j, "per_good", b.per_good, where);
    read_probability(j, "per_bad", b.per_bad, where);
    return b;
}

RobotParams parse_robot_params(const json& j, const std::string& where)
{
    require_object(j, where);
    RobotParams p;
    read_positive(j, "wheel_radius_m", p.wheel_radius_m, where);
    read_positive(j, "track_width_m", p.track_width_m, where);
    read(j, "ticks_per_rev", p.ticks_per_rev, where);
    read(j, "max_wheel_speed_mms", p.max_wheel_speed_mms, where);
    read_positive(j, "actuation_rate_limit_mms2", p.actuation_rate_limit_mms2, where);
    read(j, "sensor_max_range_mm", p.sensor_max_range_mm, where);
    if (p.ticks_per_rev == 0 || p.max_wheel_speed_mms == 0 || p.sensor_max_range_mm == 0)
        fail(where, "robot parameters must be strictly positive");
    if (p.max_wheel_speed_mms > 32767)
        fail(where + ".max_wheel_speed_mms", "must fit a signed 16-bit command");
    return p;
}

NodeRole parse_role(const json& j, const std::string& where)
{
    static const std::map<std::string, NodeRole> roles = {
        {"controller", NodeRole::controller}, {"robot", NodeRole::robot}, {"leader", NodeRole::leader},
        {"follower", NodeRole::follower},     {"relay", NodeRole::relay},
    };
    if (!j.is_string() || roles.count(j.get<std::string>()) == 0)
        fail(where, "role must be one of controller, robot, leader, follower, relay");
    return roles.at(j.get<std::string>());
}

NodeConfig parse_node(const json& j, const std::string& where, const RobotParams& defaults)
{
    require_object(j, where);
    NodeConfig n;
    n.id = parse_node_id(require(j, "id", where), where + ".id");
    n.role = parse_role(require(j, "role", where), where + ".role");
    n.params = defaults;
    if (auto it = j.find("robot"); it != j.end())
        n.params = parse_robot_params(*it, where + ".robot");
    if (auto it = j.find("initial_pose"); it != j.end()) {
        if (!it->is_array() || it->size() != 3)
            fail(where + ".initial_pose", "must be [x, y, theta]");
        n.initial = Pose{(*it)[0].get<double>(), (*it)[1].get<double>(), normalize_angle((*it)[2].get<double>())};
    }
    if (auto it = j.find("path"); it != j.end()) {
        if (!it->is_array())
            fail(where + ".path", "must be a list of [x, y] points");
        for (std::size_t i = 0; i < it->size(); ++i)
            n.path.push_back(parse_point((*it)[i], where + ".path[" + std::to_string(i) + "]"));
    }
    return n;
}

void parse_protocol(const json& j, ScenarioConfig& c)
{
    const std::string where = "protocol";
    require_object(j, where);
    ScheduleParams& s = c.mac.schedule;
    read(j, "slot_duration_us", s.slot_duration_us, where);
    read(j, "compute_gap_us", s.compute_gap_us, where);
    read(j, "retx_slots", s.retx_slots, where);
    read(j, "channels_per_band", s.channels_per_band, where);
    read(j, "max_flood_waves", c.mac.max_flood_waves, where);
    read(j, "sync_jitter_us", c.mac.sync_jitter_us, where);
    read(j, "desync_threshold", c.mac.desync_threshold, where);
    read(j, "max_drift_ppm", c.mac.max_drift_ppm, where);
    read(j, "watchdog_cycles", c.watchdog_cycles, where);
    if (auto it = j.find("phy"); it != j.end()) {
        require_object(*it, where + ".phy");
        read(*it, "payload_bytes", c.mac.phy.payload_bytes, where + ".phy");
        read(*it, "overhead_bytes", c.mac.phy.overhead_bytes, where + ".phy");
        read_positive(*it, "rate_mbps", c.mac.phy.rate_mbps, where + ".phy");
        read(*it, "tx_power_dbm", c.mac.phy.tx_power_dbm, where + ".phy");
    }
}

void parse_channel(const json& j, ScenarioConfig& c)
{
    const std::string where = "channel";
    require_object(j, where);
    read_probability(j, "default_per", c.channel.default_per, where);
    if (auto it = j.find("default_burst"); it != j.end())
        c.channel.default_burst = parse_burst(*it, where + ".default_burst");
    if (auto it = j.find("links"); it != j.end()) {
        if (!it->is_array())
            fail(where + ".links", "must be a list");
        for (std::size_t i = 0; i < it->size(); ++i) {
            const std::string lw = where + ".links[" + std::to_string(i) + "]";
            const json& lj = (*it)[i];
            require_object(lj, lw);
            LinkConfig l;
            l.from = parse_node_id(require(lj, "from", lw), lw + ".from");
            l.to = parse_node_id(require(lj, "to", lw), lw + ".to");
            if (lj.contains("per") && lj.contains("per_channel"))
                fail(lw, "give either 'per' or 'per_channel', not both");
            if (lj.contains("per")) {
                double p = 0.0;
                read_probability(lj, "per", p, lw);
                l.per_channel.assign(c.channel_count(), p);
            } else if (lj.contains("per_channel")) {
                read(lj, "per_channel", l.per_channel, lw);
            } else {
                l.per_channel.assign(c.channel_count(), c.channel.default_per);
            }
            if (auto b = lj.find("burst"); b != lj.end())
                l.burst = parse_burst(*b, lw + ".burst");
            c.channel.links.push_back(std::move(l));
        }
    }
}

void parse_controller(const json& j, ControllerParams& p)
{
    const std::string where = "controller";
    require_object(j, where);
    read_positive(j, "v_nom_mms", p.v_nom_mms, where);
    read_positive(j, "k_slow", p.k_slow, where);
    read(j, "x_min_m", p.x_min_m, where);
    read_positive(j, "kappa_max", p.kappa_max, where);
    read_positive(j, "omega_turn", p.omega_turn, where);
    read_positive(j, "tolerance_m", p.tolerance_m, where);
    read(j, "estop_threshold_mm", p.estop_threshold_mm, where);
    read_positive(j, "follower_min_spacing_m", p.follower_min_spacing_m, where);
    read_positive(j, "follower_standoff_m", p.follower_standoff_m, where);
    if (auto it = j.find("curve"); it != j.end()) {
        const std::string v = it->is_string() ? it->get<std::string>() : "";
        if (v == "parabola")
            p.curve = CurveModel::parabola;
        else if (v == "circular_arc")
            p.curve = CurveModel::circular_arc;
        else
            fail(where + ".curve", "must be 'parabola' or 'circular_arc'");
    }
    if (auto it = j.find("curvature_limit"); it != j.end()) {
        const std::string v = it->is_string() ? it->get<std::string>() : "";
        if (v == "rotate_in_place")
            p.curvature_limit = CurvatureLimit::rotate_in_place;
        else if (v == "clamp")
            p.curvature_limit = CurvatureLimit::clamp;
        else
            fail(where + ".curvature_limit", "must be 'rotate_in_place' or 'clamp'");
    }
}

}  // namespace

const NodeConfig& ScenarioConfig::node(NodeId id) const
{
    auto it = std::find_if(nodes.begin(), nodes.end(), [&](const NodeConfig& n) { return n.id == id; });
    if (it == nodes.end())
        throw ConfigError("unknown node " + std::to_string(id));
    return *it;
}

NodeId ScenarioConfig::controller_node() const
{
    for (const NodeConfig& n : nodes)
        if (n.role == NodeRole::controller || n.role == NodeRole::leader)
            return n.id;
    throw ConfigError("scenario has no controller");
}

std::vector<NodeId> ScenarioConfig::robot_ids() const
{
    std::vector<NodeId> out;
    for (const NodeConfig& n : nodes)
        if (n.is_robot())
            out.push_back(n.id);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<NodeId> ScenarioConfig::radio_robot_ids() const
{
    std::vector<NodeId> out;
    for (const NodeConfig& n : nodes)
        if (n.role == NodeRole::robot || n.role == NodeRole::follower)
            out.push_back(n.id);
    std::sort(out.begin(), out.end());
    return out;
}

std::optional<NodeId> ScenarioConfig::hosted_robot() const
{
    for (const NodeConfig& n : nodes)
        if (n.role == NodeRole::leader)
            return n.id;
    return std::nullopt;
}

std::vector<NodeId> ScenarioConfig::node_ids() const
{
    std::vector<NodeId> out;
    for (const NodeConfig& n : nodes)
        out.push_back(n.id);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<LoopSpec> ScenarioConfig::loops() const
{
    std::vector<NodeId> relays;
    for (const NodeConfig& n : nodes)
        if (n.role == NodeRole::relay)
            relays.push_back(n.id);
    std::sort(relays.begin(), relays.end());

    std::vector<LoopSpec> out;
    std::uint32_t loop_id = 1;
    for (NodeId r : radio_robot_ids())
        out.push_back(LoopSpec{loop_id++, controller_node(), r, relays});
    return out;
}

std::vector<RadioLinkModel> ScenarioConfig::link_models() const
{
    std::vector<RadioLinkModel> out;
    for (NodeId a : node_ids()) {
        for (NodeId b : node_ids()) {
            if (a == b)
                continue;
            auto it = std::find_if(channel.links.begin(), channel.links.end(),
                                   [&](const LinkConfig& l) { return l.from == a && l.to == b; });
            RadioLinkModel m{a, b, std::vector<double>(channel_count(), channel.default_per), channel.default_burst};
            if (it != channel.links.end()) {
                m.per_channel_per = it->per_channel;
                m.burst = it->burst ? it->burst : channel.default_burst;
            }
            out.push_back(std::move(m));
        }
    }
    return out;
}

void ScenarioConfig::set_uniform_per(double per)
{
    channel.default_per = per;
    for (LinkConfig& l : channel.links)
        l.per_channel.assign(channel_count(), per);
}

ScenarioConfig parse_scenario(const json& doc)
{
    require_object(doc, "scenario");
    ScenarioConfig c;
    read(doc, "name", c.name, "scenario");
    read(doc, "seed", c.seed, "scenario");
    read_positive(doc, "max_duration_s", c.max_duration_s, "scenario");

    const json& kind = require(doc, "kind", "scenario");
    if (kind == "remote-control")
        c.kind = ScenarioKind::remote_control;
    else if (kind == "leader-follower")
        c.kind = ScenarioKind::leader_follower;
    else
        fail("scenario.kind", "must be 'remote-control' or 'leader-follower'");

    // Protocol first: the channel count depends on it.
    if (auto it = doc.find("protocol"); it != doc.end())
        parse_protocol(*it, c);

    RobotParams robot_defaults;
    if (auto it = doc.find("robot_defaults"); it != doc.end())
        robot_defaults = parse_robot_params(*it, "robot_defaults");

    const json& nodes = require(doc, "nodes", "scenario");
    if (!nodes.is_array())
        fail("scenario.nodes", "must be a list");
    for (std::size_t i = 0; i < nodes.size(); ++i)
        c.nodes.push_back(parse_node(nodes[i], "nodes[" + std::to_string(i) + "]", robot_defaults));

    if (auto it = doc.find("obstacles"); it != doc.end()) {
        if (!it->is_array())
            fail("scenario.obstacles", "must be a list");
        for (std::size_t i = 0; i < it->size(); ++i) {
            const std::string w = "obstacles[" + std::to_string(i) + "]";
            const json& o = (*it)[i];
            require_object(o, w);
            Segment s{parse_point(require(o, "a", w), w + ".a"), parse_point(require(o, "b", w), w + ".b"), SimTime{}};
            double appear = 0.0;
            read(o, "appear_at_s", appear, w);
            if (appear < 0.0)
                fail(w + ".appear_at_s", "must be >= 0");
            s.appear_at = SimTime::from_seconds(appear);
            c.obstacles.push_back(s);
        }
    }

    if (auto it = doc.find("channel"); it != doc.end())
        parse_channel(*it, c);
    if (auto it = doc.find("controller"); it != doc.end())
        parse_controller(*it, c.controller);

    if (auto it = doc.find("faults"); it != doc.end()) {
        if (!it->is_array())
            fail("scenario.faults", "must be a list");
        for (std::size_t i = 0; i < it->size(); ++i) {
            const std::string w = "faults[" + std::to_string(i) + "]";
            const json& f = (*it)[i];
            require_object(f, w);
            if (require(f, "kind", w) != "beacon_loss")
                fail(w + ".kind", "only 'beacon_loss' is supported");
            BeaconLossFault b;
            b.node = parse_node_id(require(f, "node", w), w + ".node");
            read(f, "from_cycle", b.from_cycle, w);
            read(f, "cycles", b.cycles, w);
            c.beacon_loss.push_back(b);
        }
    }

    validate(c);
    return c;
}

ScenarioConfig load_scenario(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open scenario file " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return parse_scenario(doc);
}

void validate(const ScenarioConfig& c)
{
    if (c.nodes.empty())
        throw ConfigError("scenario.nodes: at least one node is required");

    std::set<NodeId> ids;
    for (const NodeConfig& n : c.nodes)
        if (!ids.insert(n.id).second)
            throw ConfigError("scenario.nodes: duplicate node id " + std::to_string(n.id));

    auto count = [&](NodeRole r) {
        return std::count_if(c.nodes.begin(), c.nodes.end(), [&](const NodeConfig& n) { return n.role == r; });
    };

    if (c.kind == ScenarioKind::remote_control) {
        if (count(NodeRole::controller) != 1)
            throw ConfigError("remote-control scenario needs exactly one controller node");
        if (count(NodeRole::leader) + count(NodeRole::follower) != 0)
            throw ConfigError("remote-control scenario cannot have leader or follower nodes");
        if (count(NodeRole::robot) < 1)
            throw ConfigError("remote-control scenario needs at least one robot");
    } else {
        if (count(NodeRole::controller) != 0)
            throw ConfigError("leader-follower scenario hosts the controller on the leader; remove the controller node");
        if (count(NodeRole::leader) != 1 || count(NodeRole::follower) != 1 || count(NodeRole::robot) != 0)
            throw ConfigError("leader-follower scenario needs exactly two robots: one leader and one follower");
    }

    for (const NodeConfig& n : c.nodes) {
        const std::string w = "node " + std::to_string(n.id);
        if (n.role == NodeRole::robot || n.role == NodeRole::leader) {
            if (n.path.empty())
                throw ConfigError(w + ": a path-following robot needs a non-empty path");
        } else if (!n.path.empty()) {
            throw ConfigError(w + ": only robots and leaders take a path");
        }
        try {
            n.params.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(w + ": " + e.what());
        }
    }

    const ScheduleParams& s = c.mac.schedule;
    if (s.slot_duration_us == 0 || s.channels_per_band == 0 || s.channels_per_band > 128)
        throw ConfigError("protocol: slot_duration_us must be > 0 and channels_per_band in [1,128]");
    if (s.slot_duration_us < c.mac.phy.airtime_us())
        throw ConfigError("protocol: slot_duration_us (" + std::to_string(s.slot_duration_us) +
                          ") is shorter than the frame airtime (" + std::to_string(c.mac.phy.airtime_us()) + ")");
    if (c.mac.phy.payload_bytes != kFrameSize)
        throw ConfigError("protocol.phy.payload_bytes: frames are exactly 16 bytes");
    if (c.mac.max_flood_waves == 0 || c.mac.desync_threshold == 0 || c.watchdog_cycles == 0)
        throw ConfigError("protocol: max_flood_waves, desync_threshold and watchdog_cycles must be >= 1");
    if (c.mac.max_drift_ppm < 0.0 || c.mac.sync_jitter_us < 0.0)
        throw ConfigError("protocol: max_drift_ppm and sync_jitter_us must be >= 0");

    for (const LinkConfig& l : c.channel.links) {
        const std::string w = "link " + std::to_string(l.from) + "->" + std::to_string(l.to);
        if (ids.count(l.from) == 0 || ids.count(l.to) == 0)
            throw ConfigError(w + " references an unknown node");
        if (l.from == l.to)
            throw ConfigError(w + " connects a node to itself");
        if (l.per_channel.size() != c.channel_count())
            throw ConfigError(w + ": per_channel needs " + std::to_string(c.channel_count()) + " entries");
        for (double p : l.per_channel)
            if (!(p >= 0.0 && p <= 1.0))
                throw ConfigError(w + ": erasure probabilities must be in [0,1]");
    }
    for (const BeaconLossFault& f : c.beacon_loss)
        if (ids.count(f.node) == 0)
            throw ConfigError("fault references unknown node " + std::to_string(f.node));
        else if (f.node == c.controller_node())
            throw ConfigError("fault: the sync originator cannot lose its own beacon");

    if (!(c.max_duration_s > 0.0))
        throw ConfigError("scenario.max_duration_s must be > 0");
}

}  // namespace mpsim
