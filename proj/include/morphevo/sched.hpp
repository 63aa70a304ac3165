#pragma once

// Evaluation scheduling. Pending (robot, controller) pairs are handed out to a
// bounded number of evaluation slots, oldest logical timestamp first, uniformly
// at random among equally old tasks. Results of one learner iteration are
// collected into candidate order before the learner sees them.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <thread>
#include <tuple>
#include <vector>

#include "common.hpp"

namespace morphevo {

struct TaskId {
    std::uint64_t robot_id = 0;
    int iteration = 0;
    int candidate = 0;
    auto operator<=>(const TaskId &) const = default;
};

struct EvalTask {
    TaskId id;
    std::vector<double> weights;
    std::uint64_t seed = 0;
    std::uint64_t available_at = 0;
};

class TaskQueue {
public:
    explicit TaskQueue(std::size_t slots) : slots_(slots) {
        if (slots_ == 0) throw ConfigError("scheduler needs at least one evaluation slot");
    }

    void enqueue(std::vector<EvalTask> tasks) {
        for (const auto &t : tasks)
            if (seen_.count(t.id)) throw SchedulingError("duplicate task identity");
        for (auto &t : tasks) {
            if (!pending_.empty() && t.available_at < pending_.back().available_at)
                throw SchedulingError("tasks must be enqueued in timestamp order");
            seen_.insert(t.id);
            pending_.push_back(std::move(t));
        }
    }

    /// Uniform pick among the pending tasks with the smallest timestamp; none
    /// when nothing is pending or every slot is busy.
    std::optional<EvalTask> next_assignment(Rng &rng) {
        if (pending_.empty() || in_flight_.size() >= slots_) return std::nullopt;
        const auto oldest = pending_.front().available_at;
        std::size_t n = 0;
        while (n < pending_.size() && pending_[n].available_at == oldest) ++n;
        const std::size_t pick = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
        EvalTask t = std::move(pending_[pick]);
        pending_.erase(pending_.begin() + static_cast<std::ptrdiff_t>(pick));
        in_flight_.insert(t.id);
        return t;
    }

    void complete(const TaskId &id) {
        if (!in_flight_.erase(id)) throw SchedulingError("completing a task that is not in flight");
    }

    std::size_t slots() const { return slots_; }
    std::size_t in_flight() const { return in_flight_.size(); }
    const std::vector<EvalTask> &pending() const { return pending_; }
    bool idle() const { return pending_.empty() && in_flight_.empty(); }

private:
    std::size_t slots_;
    std::vector<EvalTask> pending_; // non-decreasing available_at
    std::set<TaskId> in_flight_;
    std::set<TaskId> seen_;
};

/// Gathers the results of one learner iteration, indexed by candidate.
template <typename Result>
class IterationBarrier {
public:
    explicit IterationBarrier(std::size_t expected) : results_(expected) {}

    /// Returns true when this result completes the iteration.
    bool add(int candidate, Result r) {
        auto &slot = results_.at(static_cast<std::size_t>(candidate));
        if (slot) throw SchedulingError("candidate result delivered twice");
        slot = std::move(r);
        return ++received_ == results_.size();
    }

    bool complete() const { return received_ == results_.size(); }

    std::vector<Result> take() {
        std::vector<Result> out;
        out.reserve(results_.size());
        for (auto &r : results_) out.push_back(std::move(*r));
        return out;
    }

private:
    std::vector<std::optional<Result>> results_;
    std::size_t received_ = 0;
};

/// Runs fn(0..n-1) on up to `threads` threads; items are claimed dynamically.
inline void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)> &fn) {
    threads = std::max<std::size_t>(1, std::min(threads, n));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t)
            pool.emplace_back([&] {
                for (std::size_t i; (i = next.fetch_add(1)) < n;) {
                    if (failed) return;
                    try {
                        fn(i);
                    } catch (...) {
                        if (!failed.exchange(true)) failure = std::current_exception();
                    }
                }
            });
    }
    if (failure) std::rethrow_exception(failure);
}

} // namespace morphevo
