#pragma once

#include "mpsim/channel.hpp"
#include "mpsim/controller.hpp"
#include "mpsim/mac.hpp"
#include "mpsim/robot.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mpsim {

enum class ScenarioKind : std::uint8_t
{
    remote_control,
    leader_follower,
};

enum class NodeRole : std::uint8_t
{
    controller,  // external path controller (remote-control)
    robot,       // remotely driven robot (remote-control)
    leader,      // robot hosting the controller (leader-follower)
    follower,    // robot driven by the leader (leader-follower)
    relay,       // radio-only node
};

const char* to_string(ScenarioKind k);
const char* to_string(NodeRole r);

struct NodeConfig
{
    NodeId id = 0;
    NodeRole role = NodeRole::robot;
    Pose initial;
    RobotParams params;
    std::vector<Point> path;

    bool is_robot() const { return role == NodeRole::robot || role == NodeRole::leader || role == NodeRole::follower; }
};

struct LinkConfig
{
    NodeId from = 0;
    NodeId to = 0;
    std::vector<double> per_channel;
    std::optional<BurstModel> burst;
};

struct ChannelConfig
{
    double default_per = 0.0;
    std::optional<BurstModel> default_burst;
    std::vector<LinkConfig> links;
};

struct BeaconLossFault
{
    NodeId node = 0;
    std::uint32_t from_cycle = 0;
    std::uint32_t cycles = 0;
};

struct ScenarioConfig
{
    std::string name = "scenario";
    ScenarioKind kind = ScenarioKind::remote_control;
    std::uint64_t seed = 1;
    double max_duration_s = 120.0;
    std::vector<NodeConfig> nodes;
    std::vector<Segment> obstacles;
    MacParams mac;
    std::uint32_t watchdog_cycles = 10;
    ChannelConfig channel;
    ControllerParams controller;
    std::vector<BeaconLossFault> beacon_loss;

    const NodeConfig& node(NodeId id) const;
    /// The node running the path controller (controller or leader).
    NodeId controller_node() const;
    std::vector<NodeId> robot_ids() const;
    /// Robots reached over the radio (every robot except a leader).
    std::vector<NodeId> radio_robot_ids() const;
    std::optional<NodeId> hosted_robot() const;
    std::vector<NodeId> node_ids() const;
    std::vector<LoopSpec> loops() const;
    std::size_t channel_count() const { return 2 * mac.schedule.channels_per_band; }

    /// Every ordered pair of distinct nodes: explicit link or the default.
    std::vector<RadioLinkModel> link_models() const;

    /// Sets a uniform erasure probability on every link, explicit ones included.
    void set_uniform_per(double per);
};

class ConfigError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

/// Throws ConfigError with a message naming the offending field.
ScenarioConfig parse_scenario(const nlohmann::json& doc);
ScenarioConfig load_scenario(const std::filesystem::path& path);

/// Cross-field checks: ids exist and are unique, exactly one controller,
/// leader-follower has exactly two robots, probabilities in range.
void validate(const ScenarioConfig& config);

}  // namespace mpsim
