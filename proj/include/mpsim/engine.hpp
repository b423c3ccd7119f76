#pragma once

#include "mpsim/sim_time.hpp"

#include <cstdint>
#include <functional>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

namespace mpsim {

/// Thrown when a component tries to schedule an event before the current time.
class SchedulingError : public std::logic_error
{
public:
    using std::logic_error::logic_error;
};

struct EventHandle
{
    std::uint64_t sequence = 0;
};

/// Pending events ordered by (time, insertion sequence). Ties never depend on
/// identity or hashing, so a replay pops events in exactly the same order.
class EventQueue
{
public:
    struct Entry
    {
        SimTime at;
        std::uint64_t sequence = 0;
        std::string label;
        std::function<void()> action;
    };

    EventHandle push(SimTime at, std::string label, std::function<void()> action);
    Entry pop();

    bool empty() const { return heap_.empty(); }
    std::size_t size() const { return heap_.size(); }
    SimTime next_time() const { return heap_.top().at; }

private:
    struct Later
    {
        bool operator()(const Entry& a, const Entry& b) const
        {
            if (a.at != b.at)
                return a.at > b.at;
            return a.sequence > b.sequence;
        }
    };

    std::priority_queue<Entry, std::vector<Entry>, Later> heap_;
    std::uint64_t next_sequence_ = 0;
};

struct RunSummary
{
    std::uint64_t events_processed = 0;
    SimTime final_time;
};

/// Single-threaded discrete-event engine. Every component schedules through
/// one instance; nothing is shared between engines.
class Engine
{
public:
    using EventObserver = std::function<void(SimTime, std::uint64_t sequence, const std::string& label)>;

    SimTime now() const { return now_; }

    /// Throws SchedulingError if `at` is in the past.
    EventHandle schedule(SimTime at, std::string label, std::function<void()> action);
    EventHandle schedule_in(std::uint64_t delay_us, std::string label, std::function<void()> action)
    {
        return schedule(now_ + delay_us, std::move(label), std::move(action));
    }

    /// Processes every event with time <= end, then advances the clock to end.
    RunSummary run_until(SimTime end);

    /// Asks run_until to return after the event currently executing.
    void request_stop() { stop_requested_ = true; }

    std::size_t pending() const { return queue_.size(); }

    /// Hook called for every processed event, in processing order.
    void set_observer(EventObserver observer) { observer_ = std::move(observer); }

private:
    EventQueue queue_;
    SimTime now_;
    std::uint64_t processed_ = 0;
    bool stop_requested_ = false;
    EventObserver observer_;
};

}  // namespace mpsim
