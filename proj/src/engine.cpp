#include "mpsim/engine.hpp"

#include <utility>

namespace mpsim {

EventHandle EventQueue::push(SimTime at, std::string label, std::function<void()> action)
{
    const std::uint64_t seq = next_sequence_++;
    heap_.push(Entry{at, seq, std::move(label), std::move(action)});
    return EventHandle{seq};
}

EventQueue::Entry EventQueue::pop()
{
    // priority_queue::top() is const; the entry is moved out before pop().
    Entry e = std::move(const_cast<Entry&>(heap_.top()));
    heap_.pop();
    return e;
}

EventHandle Engine::schedule(SimTime at, std::string label, std::function<void()> action)
{
    if (at < now_)
        throw SchedulingError("event '" + label + "' scheduled at " + std::to_string(at.ticks) +
                              " us, current time is " + std::to_string(now_.ticks) + " us");
    return queue_.push(at, std::move(label), std::move(action));
}

RunSummary Engine::run_until(SimTime end)
{
    stop_requested_ = false;
    const std::uint64_t start_count = processed_;
    while (!queue_.empty() && queue_.next_time() <= end && !stop_requested_) {
        EventQueue::Entry e = queue_.pop();
        now_ = e.at;
        ++processed_;
        if (observer_)
            observer_(e.at, e.sequence, e.label);
        if (e.action)
            e.action();
    }
    if (!stop_requested_ && now_ < end)
        now_ = end;
    return RunSummary{processed_ - start_count, now_};
}

}  // namespace mpsim
