#pragma once

// Two-pool evolutionary coordinator. Robots finishing their learning move from
// the learning pool to the parents' pool; every N completions, N parents are
// removed (oldest or worst) and N offspring are mated from 4-robot tournaments
// (goal: task performance, novelty: body-plan novelty). N = 1 gives the
// steady-state (asynchronous) algorithm, N = P the generational one.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bodyplan.hpp"
#include "common.hpp"
#include "cppn.hpp"

namespace morphevo {

enum class RemovalPolicy { oldest, worst };
enum class Objective { goal, novelty };

struct Individual {
    std::uint64_t robot_id = 0;
    CppnGenome genome;
    BodyPlan plan;
    MorphDescriptor descriptor;
    std::uint64_t genome_seed = 0;
    std::optional<std::pair<std::uint64_t, std::uint64_t>> parents;
    std::optional<std::vector<double>> best_weights;
    std::optional<double> performance;
    std::optional<double> morph_novelty;
};

struct EvoConfig {
    int pool_size = 25;
    int update_period = 1; // N
    RemovalPolicy removal = RemovalPolicy::worst;
    Objective objective = Objective::goal;
    int knn = 15;
    double archive_probability = 0.05;
    int max_attempts = 100;
    std::uint64_t robot_budget = 500; // robots created, bootstrap included
    MutationParams mutation;
    DecodeParams decode;
};

enum class EvoAction { created, added, removed, mated, update };

inline const char *to_string(EvoAction a) {
    switch (a) {
    case EvoAction::created: return "created";
    case EvoAction::added: return "added";
    case EvoAction::removed: return "removed";
    case EvoAction::mated: return "mated";
    case EvoAction::update: return "update";
    }
    return "?";
}

struct EvoEvent {
    std::uint64_t clock = 0; // completions added to the parents' pool so far
    std::uint64_t robot_id = 0;
    EvoAction action = EvoAction::created;
    double score = 0.0;
};

struct EvoState {
    EvoConfig config;
    std::vector<Individual> parents;
    std::vector<Individual> learning;
    int completions_since_update = 0;
    std::uint64_t clock = 0;
    std::uint64_t next_robot_id = 0;
    bool pool_filled = false;
    std::vector<MorphDescriptor> novelty_archive;
    InnovationCounter innovations;
    Rng rng;
    std::vector<EvoEvent> events;

    bool budget_exhausted() const { return next_robot_id >= config.robot_budget; }
};

struct TournamentResult {
    const Individual *first = nullptr;
    const Individual *second = nullptr;
    double first_score = 0.0;
    double second_score = 0.0;
};

namespace detail {

inline std::optional<BodyPlan> viable_plan(const CppnGenome &g, const DecodeParams &dp) {
    BodyPlan plan = repair(decode(g, dp));
    if (!is_viable(plan)) return std::nullopt;
    return plan;
}

inline Individual make_individual(EvoState &s, CppnGenome genome, BodyPlan plan, std::uint64_t seed) {
    Individual ind;
    ind.robot_id = s.next_robot_id++;
    ind.genome = std::move(genome);
    ind.descriptor = morph_descriptor(plan);
    ind.plan = std::move(plan);
    ind.genome_seed = seed;
    return ind;
}

} // namespace detail

inline void validate(const EvoConfig &c) {
    if (c.pool_size < 4) throw ConfigError("pool size must be >= 4 for 4-robot tournaments");
    if (c.update_period != 1 && c.update_period != c.pool_size)
        throw ConfigError("update period N must be 1 or P");
    if (c.robot_budget < static_cast<std::uint64_t>(c.pool_size)) throw ConfigError("robot budget below pool size");
}

/// Fills the learning pool with P random viable robots.
inline EvoState bootstrap(const EvoConfig &config, std::uint64_t seed) {
    validate(config);
    EvoState s;
    s.config = config;
    s.rng = Rng(seed);
    for (int i = 0; i < config.pool_size; ++i) {
        bool ok = false;
        for (int attempt = 0; attempt < config.max_attempts && !ok; ++attempt) {
            const std::uint64_t gseed = s.rng();
            Rng grng(gseed);
            CppnGenome g = random_genome(grng);
            if (auto plan = detail::viable_plan(g, config.decode)) {
                s.learning.push_back(detail::make_individual(s, std::move(g), std::move(*plan), gseed));
                s.events.push_back({s.clock, s.learning.back().robot_id, EvoAction::created, 0.0});
                ok = true;
            }
        }
        if (!ok) throw InitializationError("no viable random robot in " + std::to_string(config.max_attempts) +
                                           " attempts");
    }
    return s;
}

/// Removes `count` parents: smallest robot id (oldest) or lowest task
/// performance (worst, older first on ties).
inline std::vector<Individual> removal_step(EvoState &s, int count) {
    auto &pool = s.parents;
    std::vector<std::size_t> order(pool.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto &x = pool[a], &y = pool[b];
        if (s.config.removal == RemovalPolicy::worst && *x.performance != *y.performance)
            return *x.performance < *y.performance;
        return x.robot_id < y.robot_id;
    });
    const std::size_t n = std::min(order.size(), static_cast<std::size_t>(std::max(0, count)));
    std::vector<std::size_t> victims(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n));
    std::vector<Individual> removed;
    for (auto idx : victims) {
        removed.push_back(pool[idx]);
        s.events.push_back({s.clock, pool[idx].robot_id, EvoAction::removed, *pool[idx].performance});
    }
    std::sort(victims.begin(), victims.end(), std::greater<>());
    for (auto idx : victims) pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(idx));
    return removed;
}

/// Body-plan novelty of `who` against the other parents and the novelty archive.
inline double parent_novelty(const EvoState &s, const Individual &who) {
    std::vector<MorphDescriptor> refs;
    refs.reserve(s.parents.size());
    for (const auto &p : s.parents)
        if (p.robot_id != who.robot_id) refs.push_back(p.descriptor);
    return descriptor_novelty(who.descriptor, refs, s.novelty_archive, s.config.knn);
}

/// Samples four distinct parents and returns the two best by the configured
/// objective (lower robot id on ties).
inline TournamentResult tournament_select(EvoState &s) {
    auto &pool = s.parents;
    if (pool.size() < 4) throw ConfigError("tournament needs at least 4 parents");
    std::vector<std::size_t> idx(pool.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    for (std::size_t i = 0; i < 4; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
        std::swap(idx[i], idx[pick(s.rng)]);
    }
    struct Scored {
        std::size_t index;
        double score;
    };
    std::vector<Scored> entrants;
    for (std::size_t i = 0; i < 4; ++i) {
        auto &ind = pool[idx[i]];
        double score;
        if (s.config.objective == Objective::goal) {
            score = *ind.performance;
        } else {
            score = parent_novelty(s, ind);
            ind.morph_novelty = score;
        }
        entrants.push_back({idx[i], score});
    }
    std::sort(entrants.begin(), entrants.end(), [&](const Scored &a, const Scored &b) {
        if (a.score != b.score) return a.score > b.score;
        return pool[a.index].robot_id < pool[b.index].robot_id;
    });
    for (const auto &e : entrants)
        if (bernoulli(s.rng, s.config.archive_probability)) s.novelty_archive.push_back(pool[e.index].descriptor);
    return {&pool[entrants[0].index], &pool[entrants[1].index], entrants[0].score, entrants[1].score};
}

/// Produces `count` offspring into the learning pool and returns them.
inline std::vector<Individual> mating_step(EvoState &s, int count) {
    std::vector<Individual> born;
    const int attempt_cap = s.config.max_attempts * s.config.pool_size;
    int attempts = 0;
    while (static_cast<int>(born.size()) < count) {
        auto t = tournament_select(s);
        const std::uint64_t gseed = s.rng();
        Rng grng(gseed);
        const CppnGenome child = crossover(t.first->genome, t.second->genome, t.first_score, t.second_score, grng);
        const auto pa = t.first->robot_id, pb = t.second->robot_id;
        for (int retry = 0; retry < s.config.max_attempts; ++retry) {
            if (++attempts > attempt_cap) throw GenerationError("persistent inviability while mating");
            CppnGenome g = mutate(child, grng, s.config.mutation, s.innovations);
            if (auto plan = detail::viable_plan(g, s.config.decode)) {
                auto ind = detail::make_individual(s, std::move(g), std::move(*plan), gseed);
                ind.parents = {pa, pb};
                s.events.push_back({s.clock, ind.robot_id, EvoAction::mated, t.first_score});
                born.push_back(ind);
                s.learning.push_back(std::move(ind));
                break;
            }
        }
    }
    return born;
}

struct CompletionOutcome {
    bool updated = false;               // a pool update boundary was crossed
    std::vector<Individual> removed;
    std::vector<Individual> offspring;
};

/// Moves a robot that finished learning into the parents' pool and runs the
/// removal and mating steps when N completions have accumulated. The first P
/// completions fill the parents' pool without removal.
inline CompletionOutcome on_learning_complete(EvoState &s, std::uint64_t robot_id, double performance,
                                              std::vector<double> best_weights) {
    auto it = std::find_if(s.learning.begin(), s.learning.end(),
                           [&](const Individual &i) { return i.robot_id == robot_id; });
    if (it == s.learning.end()) throw LifecycleError("robot " + std::to_string(robot_id) + " is not learning");
    Individual ind = std::move(*it);
    s.learning.erase(it);
    ind.performance = performance;
    ind.best_weights = std::move(best_weights);
    s.parents.push_back(std::move(ind));
    ++s.clock;
    s.events.push_back({s.clock, robot_id, EvoAction::added, performance});

    const auto remaining = [&](int n) {
        const auto left = s.config.robot_budget - std::min(s.config.robot_budget, s.next_robot_id);
        return static_cast<int>(std::min<std::uint64_t>(static_cast<std::uint64_t>(n), left));
    };

    CompletionOutcome out;
    const int pool = s.config.pool_size;
    if (!s.pool_filled) {
        if (static_cast<int>(s.parents.size()) < pool) return out;
        s.pool_filled = true;
        s.completions_since_update = 0;
        out.updated = true;
        out.offspring = mating_step(s, remaining(pool));
    } else {
        if (++s.completions_since_update < s.config.update_period) return out;
        s.completions_since_update = 0;
        out.updated = true;
        out.removed = removal_step(s, s.config.update_period);
        out.offspring = mating_step(s, remaining(s.config.update_period));
    }
    s.events.push_back({s.clock, 0, EvoAction::update, 0.0});
    return out;
}

} // namespace morphevo
