#include "mpsim/controller.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <random>

using namespace mpsim;

constexpr double kPi = std::numbers::pi;

namespace {

ControllerParams clamp_params()
{
    ControllerParams p;
    p.curvature_limit = CurvatureLimit::clamp;
    p.kappa_max = 8.0;
    return p;
}

std::int32_t ticks_for(double metres, const RobotParams& p)
{
    return static_cast<std::int32_t>(std::lround(metres / p.tick_quantum_m()));
}

}  // namespace

TEST(DeadReckon, ZeroTicksKeepPose)
{
    const Pose p{0.3, 0.4, 1.0};
    const Pose q = dead_reckon(p, 0, 0, RobotParams{});
    EXPECT_EQ(q.x, p.x);
    EXPECT_EQ(q.y, p.y);
    EXPECT_EQ(q.theta, p.theta);
}

TEST(DeadReckon, EqualTicksGoStraight)
{
    RobotParams rp;
    rp.ticks_per_rev = 1000;
    rp.wheel_radius_m = 0.1 * 1000 / (2 * kPi * 100);  // exactly 100 ticks per 0.1 m
    const Pose q = dead_reckon(Pose{}, 100, 100, rp);
    EXPECT_NEAR(q.x, 0.1, 1e-12);
    EXPECT_NEAR(q.y, 0.0, 1e-12);
    EXPECT_NEAR(q.theta, 0.0, 1e-12);
}

TEST(DeadReckon, TickDeltaWraps)
{
    EXPECT_EQ(tick_delta(5, 3), 2);
    EXPECT_EQ(tick_delta(std::numeric_limits<std::int32_t>::min(), std::numeric_limits<std::int32_t>::max()), 1);
    EXPECT_EQ(tick_delta(-3, 2), -5);
}

TEST(DeadReckon, TracksPlantOverFiftyCycles)
{
    const RobotParams rp;
    Robot robot(1, rp, Pose{});
    Pose est{};
    std::int32_t last_l = 0, last_r = 0;
    robot.apply_command(CommandBody{120, 80, 0}, 0);
    double arc = 0.0;
    for (int c = 0; c < 50; ++c) {
        robot.tick(0.002);
        arc += 0.5 * std::abs(robot.wheels().actual.left + robot.wheels().actual.right) * 1e-3 * 0.002;
        est = dead_reckon(est, tick_delta(robot.wheels().left_ticks, last_l),
                          tick_delta(robot.wheels().right_ticks, last_r), rp);
        last_l = robot.wheels().left_ticks;
        last_r = robot.wheels().right_ticks;
    }
    EXPECT_LE(std::hypot(est.x - robot.pose().x, est.y - robot.pose().y), 50 * rp.tick_quantum_m());
    EXPECT_GT(arc, 0.0);
}

TEST(Deviation, Examples)
{
    auto d = deviation_error(Pose{}, Point{1, 0});
    EXPECT_NEAR(d.distance_m, 1.0, 1e-12);
    EXPECT_NEAR(d.bearing_rad, 0.0, 1e-12);

    d = deviation_error(Pose{}, Point{0, 1});
    EXPECT_NEAR(d.distance_m, 1.0, 1e-12);
    EXPECT_NEAR(d.bearing_rad, kPi / 2, 1e-12);

    // World delta (-1, 0) seen from heading pi/2 is (0, 1) in the robot frame.
    d = deviation_error(Pose{1, 1, kPi / 2}, Point{0, 1});
    EXPECT_NEAR(d.distance_m, 1.0, 1e-12);
    EXPECT_NEAR(d.bearing_rad, kPi / 2, 1e-12);
    const Point local = to_robot_frame(Pose{1, 1, kPi / 2}, Point{0, 1});
    EXPECT_NEAR(local.x, 0.0, 1e-12);
    EXPECT_NEAR(local.y, 1.0, 1e-12);
}

TEST(QuadraticCurve, DeadAheadGoesStraight)
{
    const auto w = quadratic_curve_speeds(Pose{}, Point{1, 0}, 100, ControllerParams{}, RobotParams{});
    EXPECT_NEAR(w.left, 100.0, 1e-9);
    EXPECT_NEAR(w.right, 100.0, 1e-9);
}

TEST(QuadraticCurve, UnitOffsetExample)
{
    // a = 1, kappa = 2; wheels v (1 -+ kappa * track / 2).
    const auto w = quadratic_curve_speeds(Pose{}, Point{1, 1}, 100, clamp_params(), RobotParams{});
    EXPECT_NEAR(w.right, 100 * (1 + 2 * 0.117 / 2), 1e-9);
    EXPECT_NEAR(w.left, 100 * (1 - 2 * 0.117 / 2), 1e-9);
    EXPECT_NEAR(w.right, 111.7, 1e-9);
    EXPECT_NEAR(w.left, 88.3, 1e-9);
}

TEST(QuadraticCurve, CurvatureBeforeClamping)
{
    const auto k = requested_curvature(Point{0.5, -0.5}, ControllerParams{});
    ASSERT_TRUE(k.has_value());
    EXPECT_NEAR(*k, -4.0, 1e-12);

    ControllerParams arc;
    arc.curve = CurveModel::circular_arc;
    EXPECT_NEAR(*requested_curvature(Point{1, 1}, arc), 1.0, 1e-12);
}

TEST(QuadraticCurve, ClampLimitsCurvature)
{
    ControllerParams p = clamp_params();
    p.kappa_max = 2.0;
    const auto w = quadratic_curve_speeds(Pose{}, Point{0.5, -0.5}, 100, p, RobotParams{});
    const double kappa = (w.right - w.left) / (0.117 * 0.5 * (w.left + w.right));
    EXPECT_NEAR(kappa, -2.0, 1e-9);
}

TEST(QuadraticCurve, TargetBehindRotatesInPlace)
{
    ControllerParams p;
    for (const Point& t : {Point{-1, 0.2}, Point{0.01, 0.5}, Point{0.0, -0.3}}) {
        const auto w = quadratic_curve_speeds(Pose{}, t, 100, p, RobotParams{});
        EXPECT_NEAR(w.left, -w.right, 1e-12);
        EXPECT_NEAR(w.right, p.omega_turn * 0.117 / 2 * 1000 * (t.y >= 0 ? 1 : -1), 1e-9);
    }
}

TEST(QuadraticCurve, TightCurveRotatesUnderDefaultPolicy)
{
    const auto w = quadratic_curve_speeds(Pose{}, Point{0.5, -0.5}, 100, ControllerParams{}, RobotParams{});
    EXPECT_NEAR(w.left, -w.right, 1e-12);
    EXPECT_GT(w.left, 0.0);  // clockwise toward the target on the right
}

TEST(QuadraticCurve, SpeedTapersNearTarget)
{
    const auto w = quadratic_curve_speeds(Pose{}, Point{0.03, 0}, 100, ControllerParams{}, RobotParams{});
    EXPECT_NEAR(w.left, 30.0, 1e-9);
    EXPECT_NEAR(w.right, 30.0, 1e-9);
}

TEST(QuadraticCurveProperty, TurnsTowardTarget)
{
    std::mt19937_64 gen(1);
    std::uniform_real_distribution<double> xs(0.021, 3.0), ys(-3.0, 3.0);
    const ControllerParams p = clamp_params();
    for (int i = 0; i < 10'000; ++i) {
        const Point t{xs(gen), ys(gen)};
        const auto k = requested_curvature(t, p);
        ASSERT_TRUE(k.has_value());
        ASSERT_EQ(std::signbit(*k), std::signbit(t.y));
        const auto w = quadratic_curve_speeds(Pose{}, t, 100, p, RobotParams{});
        if (t.y > 0)
            ASSERT_GE(w.right, w.left);
        if (t.y < 0)
            ASSERT_LE(w.right, w.left);
    }
}

TEST(QuadraticCurveProperty, WheelClampPreservesCurvature)
{
    std::mt19937_64 gen(2);
    std::uniform_real_distribution<double> xs(0.5, 3.0), ys(-0.2, 0.2), vs(301, 2000);
    const ControllerParams p = clamp_params();
    const RobotParams rp;
    for (int i = 0; i < 5000; ++i) {
        const Point t{xs(gen), ys(gen)};
        const double v = vs(gen);
        const double kappa = *requested_curvature(t, p);
        const double half = rp.track_width_m / 2;
        const double l = v * (1 - kappa * half), r = v * (1 + kappa * half);
        const auto w = quadratic_curve_speeds(Pose{}, t, v, p, rp);
        ASSERT_LE(std::max(std::abs(w.left), std::abs(w.right)), rp.max_wheel_speed_mms + 1e-9);
        ASSERT_NEAR((w.right - w.left) / (w.right + w.left), (r - l) / (r + l), 1e-12);
    }
}

TEST(Reference, AdvanceRules)
{
    const ReferencePath path{{Point{0.5, 0}, Point{0.5, 0.5}}, 0.02};
    std::size_t i = 0;
    EXPECT_EQ(advance_reference(i, Pose{}, path), ReferenceStatus::tracking);
    EXPECT_EQ(i, 0u);
    EXPECT_EQ(advance_reference(i, Pose{0.49, 0, 0}, path), ReferenceStatus::tracking);
    EXPECT_EQ(i, 1u);
    EXPECT_EQ(advance_reference(i, Pose{0.5, 0.49, 0}, path), ReferenceStatus::complete);
    EXPECT_EQ(i, 2u);
}

TEST(FollowerQueueTest, AppendsOnlyAfterMinSpacing)
{
    FollowerQueue q(0.05, 0.25);
    EXPECT_TRUE(q.update(Pose{}));
    EXPECT_EQ(q.size(), 1u);
    EXPECT_FALSE(q.update(Pose{0.01, 0, 0}));
    EXPECT_EQ(q.size(), 1u);
    EXPECT_TRUE(q.update(Pose{0.06, 0, 0}));
    EXPECT_EQ(q.size(), 2u);
}

TEST(FollowerQueueTest, LPathGivesAboutFortyPoints)
{
    FollowerQueue q(0.05, 0.25);
    for (int i = 0; i <= 1000; ++i)
        q.update(Pose{i * 0.001, 0, 0});
    for (int i = 1; i <= 1000; ++i)
        q.update(Pose{1.0, i * 0.001, 0});
    EXPECT_GE(q.size(), 39u);
    EXPECT_LE(q.size(), 42u);
}

TEST(Estop, Decision)
{
    const std::vector<std::uint16_t> none{kNoDistanceReading, kNoDistanceReading};
    EXPECT_FALSE(estop_decision(none, 150));
    const std::vector<std::uint16_t> close{kNoDistanceReading, 120};
    EXPECT_TRUE(estop_decision(close, 150));
    const std::vector<std::uint16_t> edge{150};
    EXPECT_FALSE(estop_decision(edge, 150));
}

namespace {

PathController two_robot_controller()
{
    PathController pc(0, ControllerParams{});
    pc.add_path_robot(1, RobotParams{}, Pose{}, ReferencePath{{Point{1, 0}}, 0.02});
    pc.add_path_robot(2, RobotParams{}, Pose{0, 1, 0}, ReferencePath{{Point{1, 1}}, 0.02});
    return pc;
}

}  // namespace

TEST(PathControllerTest, LostFeedbackHoldsEstimateAndSeqAdvances)
{
    PathController pc = two_robot_controller();
    const std::vector<FeedbackSample> fb{FeedbackSample{1, 100, 100, kNoDistanceReading, SimTime{250}},
                                         FeedbackSample{2, 0, 0, kNoDistanceReading, SimTime{250}}};
    auto out1 = pc.controller_cycle(fb);
    const Pose held = pc.estimate(1);
    auto out2 = pc.controller_cycle({});
    EXPECT_EQ(pc.estimate(1).x, held.x);
    ASSERT_EQ(out2.commands.size(), 2u);
    EXPECT_EQ(out2.commands[0].frame.seq, out1.commands[0].frame.seq + 1);
    EXPECT_EQ(out2.commands[0].speeds, out1.commands[0].speeds);
    EXPECT_EQ(out2.commands[0].informing_sample, SimTime{250});
}

TEST(PathControllerTest, EstopLatchesForEveryRobot)
{
    PathController pc = two_robot_controller();
    const std::vector<FeedbackSample> fb{FeedbackSample{1, 0, 0, 120, SimTime{}},
                                         FeedbackSample{2, 0, 0, kNoDistanceReading, SimTime{}}};
    auto out = pc.controller_cycle(fb);
    EXPECT_TRUE(pc.estop_latched());
    ASSERT_TRUE(out.estop_trigger.has_value());
    EXPECT_EQ(*out.estop_trigger, 1);
    ASSERT_TRUE(out.estop_broadcast.has_value());
    for (int c = 0; c < 20; ++c) {
        for (const auto& d : out.commands) {
            const auto& body = d.frame.as<CommandBody>();
            ASSERT_TRUE(body.estop());
            ASSERT_EQ(body.left_mms, 0);
            ASSERT_EQ(body.right_mms, 0);
        }
        ASSERT_TRUE(out.estop_broadcast.has_value());
        out = pc.controller_cycle({});
    }
}

TEST(PathControllerTest, CompletePathCommandsZero)
{
    PathController pc(0, ControllerParams{});
    pc.add_path_robot(1, RobotParams{}, Pose{0.995, 0, 0}, ReferencePath{{Point{1, 0}}, 0.02});
    auto out = pc.controller_cycle({});
    ASSERT_EQ(out.newly_complete.size(), 1u);
    for (int c = 0; c < 10; ++c) {
        ASSERT_EQ(out.commands[0].speeds, (WheelPair{0, 0}));
        out = pc.controller_cycle({});
        ASSERT_TRUE(out.newly_complete.empty());
    }
    EXPECT_TRUE(pc.all_complete());
}

TEST(PathControllerTest, FollowerHoldsInsideStandoff)
{
    PathController pc(1, ControllerParams{});
    pc.add_path_robot(1, RobotParams{}, Pose{}, ReferencePath{{Point{2, 0}}, 0.02});
    pc.add_follower(2, RobotParams{}, Pose{-0.2, 0, 0}, 1);
    auto out = pc.controller_cycle({});
    ASSERT_EQ(out.commands.size(), 2u);
    EXPECT_EQ(out.commands[0].robot, 1);
    EXPECT_EQ(out.commands[1].robot, 2);
    EXPECT_EQ(out.commands[1].speeds, (WheelPair{0, 0}));
    EXPECT_NE(out.commands[0].speeds, (WheelPair{0, 0}));
}

TEST(PathControllerTest, UnknownLeaderRejected)
{
    PathController pc(1, ControllerParams{});
    EXPECT_THROW(pc.add_follower(2, RobotParams{}, Pose{}, 1), std::invalid_argument);
}
