#pragma once

// End-to-end replicate runner and run-directory persistence.
//
// Scheduling runs on a virtual clock: a task occupies one of `slots`
// evaluation slots for the simulated duration of its episode, and completions
// are applied in (finish time, robot id, candidate) order. Evaluations are pure
// functions of their task, so they are computed ahead of the virtual dispatcher
// in parallel batches on `cores` threads; the thread count never affects the
// outcome of a run.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "archive.hpp"
#include "bodyplan.hpp"
#include "common.hpp"
#include "cppn.hpp"
#include "evo.hpp"
#include "metrics.hpp"
#include "nipes.hpp"
#include "sched.hpp"
#include "sim.hpp"

namespace morphevo {

inline constexpr const char *kVersion = "morphevo 0.1.0";

struct Variant {
    bool synchronous = false;
    Objective objective = Objective::goal;
    RemovalPolicy removal = RemovalPolicy::worst;

    std::string name() const {
        std::string s;
        s += synchronous ? 'S' : 'A';
        s += objective == Objective::goal ? 'G' : 'N';
        s += removal == RemovalPolicy::oldest ? 'O' : 'W';
        return s;
    }
};

/// Three letters: update (S/A), objective (G/N), removal (O/W), e.g. "AGW".
inline Variant parse_variant(const std::string &s) {
    if (s.size() != 3) throw ConfigError("variant must be three letters, got '" + s + "'");
    Variant v;
    if (s[0] == 'S') v.synchronous = true;
    else if (s[0] != 'A') throw ConfigError("variant letter 1 must be S or A");
    if (s[1] == 'N') v.objective = Objective::novelty;
    else if (s[1] != 'G') throw ConfigError("variant letter 2 must be G or N");
    if (s[2] == 'O') v.removal = RemovalPolicy::oldest;
    else if (s[2] != 'W') throw ConfigError("variant letter 3 must be O or W");
    return v;
}

struct ExperimentConfig {
    std::string variant = "AGW";
    int pool_size = 25;
    int learner_budget = 200;
    int initial_lambda = 10;
    int knn = 15;
    std::uint64_t robot_budget = 500;
    int replicates = 1;
    std::uint64_t seed = 42;
    std::size_t cores = 1;
    std::size_t slots = 32;
    std::string arena_file; // empty: built-in default layout
    std::string out_dir;
    bool scheduler_trace = false;
};

inline void to_json(nlohmann::json &j, const ExperimentConfig &c) {
    j = {{"variant", c.variant},     {"pool_size", c.pool_size},       {"learner_budget", c.learner_budget},
         {"initial_lambda", c.initial_lambda}, {"knn", c.knn},           {"robot_budget", c.robot_budget},
         {"replicates", c.replicates}, {"seed", c.seed},                {"slots", c.slots},
         {"arena_file", c.arena_file}};
}

inline EvoConfig evo_config(const ExperimentConfig &c) {
    const Variant v = parse_variant(c.variant);
    EvoConfig e;
    e.pool_size = c.pool_size;
    e.update_period = v.synchronous ? c.pool_size : 1;
    e.removal = v.removal;
    e.objective = v.objective;
    e.knn = c.knn;
    e.robot_budget = c.robot_budget;
    return e;
}

inline NipesParams nipes_params(const ExperimentConfig &c) {
    NipesParams p;
    p.budget = c.learner_budget;
    p.initial_lambda = c.initial_lambda;
    p.knn = c.knn;
    return p;
}

inline std::uint64_t replicate_seed(std::uint64_t master, int replicate) {
    return derive_seed(master, static_cast<std::uint64_t>(Stream::replicate), static_cast<std::uint64_t>(replicate));
}

struct RobotRecord {
    Individual individual;
    bool completed = false;
    LearnerStatus status = LearnerStatus::running;
    std::optional<EvalResult> best_eval; // episode of the best-of-run controller
    std::vector<LearnerLogRecord> learner_log;
};

struct SchedEvent {
    double time = 0.0;
    bool assign = true; // false: completion
    TaskId task;
};

struct RunArtifacts {
    std::vector<EvoEvent> events;
    std::map<std::uint64_t, RobotRecord> robots;
    ControllerArchive archive;
    std::vector<SchedEvent> sched_trace;
    std::uint64_t evaluations = 0;
};

struct RunHooks {
    std::function<void(const EvalResult &)> on_evaluation;
    // called after every pool update boundary
    std::function<void(const EvoState &, const CompletionOutcome &)> on_update;
};

class ReplicateRunner {
public:
    ReplicateRunner(ExperimentConfig config, Arena arena, std::uint64_t seed, RunHooks hooks = {})
        : config_(std::move(config)), arena_(std::move(arena)), seed_(seed), hooks_(std::move(hooks)),
          params_(nipes_params(config_)), queue_(config_.slots),
          sched_rng_(derive_seed(seed_, static_cast<std::uint64_t>(Stream::scheduler))) {
        arena_.validate();
    }

    RunArtifacts run() {
        evo_ = bootstrap(evo_config(config_), derive_seed(seed_, static_cast<std::uint64_t>(Stream::coordinator)));
        for (const auto &ind : evo_.learning) start_learner(ind);

        using Completion = std::tuple<double, std::uint64_t, int, int>; // time, robot, iteration, candidate
        std::priority_queue<Completion, std::vector<Completion>, std::greater<>> heap;
        bool done = false;
        while (!done) {
            while (auto task = queue_.next_assignment(sched_rng_)) {
                const auto &res = ensure_result(*task);
                heap.emplace(now_ + res.seconds, task->id.robot_id, task->id.iteration, task->id.candidate);
                trace(true, task->id);
            }
            if (heap.empty()) throw SchedulingError("no work left before the robot budget was reached");
            auto [t, robot, iteration, candidate] = heap.top();
            heap.pop();
            now_ = t;
            const TaskId id{robot, iteration, candidate};
            queue_.complete(id);
            trace(false, id);
            done = deliver(id);
        }
        out_.events = evo_.events;
        for (const auto &ind : evo_.learning) {
            auto &rec = out_.robots[ind.robot_id];
            rec.individual = ind;
            if (auto it = active_.find(ind.robot_id); it != active_.end()) rec.learner_log = it->second.learner.log();
        }
        return std::move(out_);
    }

    const EvoState &state() const { return evo_; }

private:
    struct Active {
        Learner learner;
        BodyPlan plan;
        ArchiveKey key;
        std::optional<IterationBarrier<EvalResult>> barrier;
        std::optional<EvalResult> best_eval;
    };

    void start_learner(const Individual &ind) {
        const ArchiveKey key = archive_key(ind.plan);
        const ElmanSpec spec = controller_spec(ind.plan);
        std::optional<std::vector<double>> warm;
        if (auto e = out_.archive.lookup(key)) warm = e->weights;
        Learner learner(weights_dim(spec),
                        derive_seed(seed_, static_cast<std::uint64_t>(Stream::learner), ind.robot_id), warm,
                        params_);
        auto [it, inserted] = active_.emplace(ind.robot_id, Active{std::move(learner), ind.plan, key, {}, {}});
        if (!inserted) throw LifecycleError("learner started twice");
        enqueue_iteration(ind.robot_id, it->second);
    }

    void enqueue_iteration(std::uint64_t robot, Active &a) {
        const auto &cands = a.learner.ask();
        const int iteration = a.learner.iteration();
        ++stamp_;
        std::vector<EvalTask> tasks;
        for (std::size_t c = 0; c < cands.size(); ++c) {
            const auto s = derive_seed(seed_, static_cast<std::uint64_t>(Stream::episode), robot,
                                       static_cast<std::uint64_t>(iteration), c);
            tasks.push_back({{robot, iteration, static_cast<int>(c)}, cands[c], s, stamp_});
        }
        a.barrier.emplace(cands.size());
        queue_.enqueue(std::move(tasks));
    }

    const EvalResult &ensure_result(const EvalTask &task) {
        if (auto it = results_.find(task.id); it != results_.end()) return it->second;
        std::vector<const EvalTask *> batch{&task};
        for (const auto &p : queue_.pending())
            if (!results_.count(p.id)) batch.push_back(&p);
        std::vector<EvalResult> computed(batch.size());
        parallel_for(batch.size(), config_.cores, [&](std::size_t i) {
            const auto &t = *batch[i];
            computed[i] = run_episode(active_.at(t.id.robot_id).plan, t.weights, arena_, t.seed);
        });
        for (std::size_t i = 0; i < batch.size(); ++i) {
            ++out_.evaluations;
            if (hooks_.on_evaluation) hooks_.on_evaluation(computed[i]);
            results_.emplace(batch[i]->id, std::move(computed[i]));
        }
        return results_.at(task.id);
    }

    void trace(bool assign, const TaskId &id) {
        if (config_.scheduler_trace) out_.sched_trace.push_back({now_, assign, id});
    }

    // Routes a finished evaluation; returns true once the run is over.
    bool deliver(const TaskId &id) {
        auto node = results_.extract(id);
        Active &a = active_.at(id.robot_id);
        if (!a.barrier->add(id.candidate, std::move(node.mapped()))) return false;

        std::vector<EvalResult> results = a.barrier->take();
        std::vector<CandidateEval> evals;
        evals.reserve(results.size());
        for (const auto &r : results) evals.push_back({r.fitness, r.behaviour, r.moved});
        if (auto best = a.learner.tell(evals)) a.best_eval = results[*best];
        if (!a.learner.terminated()) {
            enqueue_iteration(id.robot_id, a);
            return false;
        }
        return finish_learner(id.robot_id);
    }

    bool finish_learner(std::uint64_t robot) {
        Active a = std::move(active_.at(robot));
        active_.erase(robot);
        auto [weights, perf] = a.learner.best_of_run();
        out_.archive.update(a.key, weights, perf);

        auto it = std::find_if(evo_.learning.begin(), evo_.learning.end(),
                               [&](const Individual &i) { return i.robot_id == robot; });
        RobotRecord rec;
        rec.individual = *it;
        rec.completed = true;
        rec.status = a.learner.status();
        rec.best_eval = std::move(a.best_eval);
        rec.learner_log = a.learner.log();
        rec.individual.performance = perf;
        rec.individual.best_weights = weights;

        auto outcome = on_learning_complete(evo_, robot, perf, std::move(weights));
        out_.robots[robot] = std::move(rec);
        if (!outcome.updated) return false;
        if (hooks_.on_update) hooks_.on_update(evo_, outcome);
        for (const auto &child : outcome.offspring) start_learner(child);
        return evo_.budget_exhausted();
    }

    ExperimentConfig config_;
    Arena arena_;
    std::uint64_t seed_;
    RunHooks hooks_;
    NipesParams params_;
    TaskQueue queue_;
    Rng sched_rng_;
    EvoState evo_;
    std::map<std::uint64_t, Active> active_;
    std::map<TaskId, EvalResult> results_;
    RunArtifacts out_;
    double now_ = 0.0;
    std::uint64_t stamp_ = 0;
};

// ---------------------------------------------------------------------------
// Metrics tables

using MetricsTables = std::map<std::string, std::string>;

namespace detail {

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace detail

/// Pool snapshots rebuilt from the event log: one per update boundary.
inline std::vector<PoolSnapshot> pool_snapshots(const std::vector<EvoEvent> &events,
                                                const std::map<std::uint64_t, RobotRecord> &robots) {
    std::map<std::uint64_t, PoolMember> pool;
    std::vector<PoolSnapshot> out;
    for (const auto &e : events) {
        switch (e.action) {
        case EvoAction::added: {
            auto it = robots.find(e.robot_id);
            if (it == robots.end()) throw CorruptRunError("event references unknown robot");
            pool[e.robot_id] = {e.robot_id, e.score, morph_scalar(it->second.individual.plan)};
            break;
        }
        case EvoAction::removed:
            if (!pool.erase(e.robot_id)) throw CorruptRunError("removal of a robot not in the pool");
            break;
        case EvoAction::update: {
            PoolSnapshot s{e.clock, {}};
            for (const auto &[id, m] : pool) s.members.push_back(m);
            out.push_back(std::move(s));
            break;
        }
        default: break;
        }
    }
    return out;
}

inline MetricsTables compute_metrics(const RunArtifacts &run, std::size_t k = 20) {
    MetricsTables t;
    const auto snaps = pool_snapshots(run.events, run.robots);
    std::string fit = "robot_index,mean_fitness\n", var = "robot_index,morph_variance\n";
    for (const auto &s : snaps) {
        fit += std::to_string(s.clock) + "," + detail::fmt(mean_performance(s)) + "\n";
        var += std::to_string(s.clock) + "," + detail::fmt(morphological_variance(s)) + "\n";
    }
    t["fitness_by_index.csv"] = fit;
    t["morph_variance.csv"] = var;

    std::vector<RobotScore> history;
    for (const auto &[id, r] : run.robots)
        if (r.completed) history.push_back({id, *r.individual.performance});
    const std::size_t n = std::min(k, history.size());
    std::string top = "rank,robot_id,fitness,morph_scalar\n", traj = "rank,robot_id,i,x,y\n";
    std::string beh = "top_k,mean_fitness,morph_variance,behavioural_variance\n";
    if (n > 0) {
        const auto best = top_k(history, n);
        PoolSnapshot top_snap;
        std::vector<ResampledTrajectory> trajs;
        for (std::size_t i = 0; i < best.size(); ++i) {
            const auto &rec = run.robots.at(best[i].robot_id);
            const double ms = morph_scalar(rec.individual.plan);
            top_snap.members.push_back({best[i].robot_id, best[i].performance, ms});
            top += std::to_string(i + 1) + "," + std::to_string(best[i].robot_id) + "," +
                   detail::fmt(best[i].performance) + "," + detail::fmt(ms) + "\n";
            if (!rec.best_eval) throw CorruptRunError("missing trajectory for robot " + std::to_string(best[i].robot_id));
            trajs.push_back(resample_trajectory(rec.best_eval->trajectory));
            for (std::size_t p = 0; p < trajs.back().size(); ++p)
                traj += std::to_string(i + 1) + "," + std::to_string(best[i].robot_id) + "," + std::to_string(p) +
                        "," + detail::fmt(trajs.back()[p].x) + "," + detail::fmt(trajs.back()[p].y) + "\n";
        }
        const double bv = trajs.size() >= 2 ? behavioural_variance(trajs) : 0.0;
        beh += std::to_string(n) + "," + detail::fmt(mean_performance(top_snap)) + "," +
               detail::fmt(morphological_variance(top_snap)) + "," + detail::fmt(bv) + "\n";
    }
    t["top20_summary.csv"] = top;
    t["top20_trajectories.csv"] = traj;
    t["behavioural_variance.csv"] = beh;
    return t;
}

// ---------------------------------------------------------------------------
// Run directory I/O

namespace fs = std::filesystem;

namespace detail {

inline void write_file(const fs::path &p, const std::string &content) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + p.string());
    out << content;
    if (!out) throw ConfigError("write failed for " + p.string());
}

inline std::string read_file(const fs::path &p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw CorruptRunError("missing file " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string robot_stem(std::uint64_t id) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "robot_%06llu", static_cast<unsigned long long>(id));
    return buf;
}

inline std::string trajectory_csv(const Trajectory &traj) {
    std::string s = "t,x,y\n";
    for (const auto &p : traj) s += fmt(p.t) + "," + fmt(p.x) + "," + fmt(p.y) + "\n";
    return s;
}

inline Trajectory parse_trajectory_csv(const std::string &text) {
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    if (line != "t,x,y") throw CorruptRunError("bad trajectory header");
    Trajectory traj;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        TrajectoryPoint p;
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &p.t, &p.x, &p.y) != 3) throw CorruptRunError("bad trajectory row");
        traj.push_back(p);
    }
    return traj;
}

inline EvoAction action_from_string(const std::string &s) {
    for (auto a : {EvoAction::created, EvoAction::added, EvoAction::removed, EvoAction::mated, EvoAction::update})
        if (s == to_string(a)) return a;
    throw CorruptRunError("unknown event action '" + s + "'");
}

} // namespace detail

inline std::string events_log(const std::vector<EvoEvent> &events, const std::string &variant) {
    std::string s = "clock,robot_id,variant,action,score\n";
    for (const auto &e : events)
        s += std::to_string(e.clock) + "," + std::to_string(e.robot_id) + "," + variant + "," + to_string(e.action) +
             "," + detail::fmt(e.score) + "\n";
    s += "end," + std::to_string(events.size()) + "\n";
    return s;
}

inline std::vector<EvoEvent> parse_events_log(const std::string &text) {
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    if (line != "clock,robot_id,variant,action,score") throw CorruptRunError("bad events.log header");
    std::vector<EvoEvent> events;
    bool ended = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (ended) throw CorruptRunError("data after end marker in events.log");
        if (line.rfind("end,", 0) == 0) {
            if (std::stoull(line.substr(4)) != events.size()) throw CorruptRunError("events.log count mismatch");
            ended = true;
            continue;
        }
        std::istringstream row(line);
        std::string clock, id, variant, action, score;
        if (!std::getline(row, clock, ',') || !std::getline(row, id, ',') || !std::getline(row, variant, ',') ||
            !std::getline(row, action, ',') || !std::getline(row, score))
            throw CorruptRunError("malformed events.log row");
        events.push_back({std::stoull(clock), std::stoull(id), detail::action_from_string(action), std::stod(score)});
    }
    if (!ended) throw CorruptRunError("events.log is truncated");
    return events;
}

inline std::string learner_csv(const std::vector<LearnerLogRecord> &log) {
    std::string s = "iteration,lambda,novelty_ratio,best_performance,evaluations,restarts\n";
    for (const auto &r : log)
        s += std::to_string(r.iteration) + "," + std::to_string(r.lambda) + "," + detail::fmt(r.novelty_ratio) + "," +
             detail::fmt(r.best_performance) + "," + std::to_string(r.evaluations) + "," +
             std::to_string(r.restarts) + "\n";
    return s;
}

inline void write_replicate(const fs::path &dir, const ExperimentConfig &config, int replicate, std::uint64_t seed,
                            const RunArtifacts &run, const MetricsTables &tables) {
    for (const char *sub : {"robots", "learners", "archive", "metrics"}) fs::create_directories(dir / sub);

    nlohmann::json manifest = {{"version", kVersion},
                               {"config", config},
                               {"replicate", replicate},
                               {"replicate_seed", seed},
                               {"events", run.events.size()},
                               {"robots", run.robots.size()},
                               {"evaluations", run.evaluations}};
    detail::write_file(dir / "events.log", events_log(run.events, config.variant));

    for (const auto &[id, rec] : run.robots) {
        const auto &ind = rec.individual;
        nlohmann::json j = {{"robot_id", id},
                            {"genome_seed", ind.genome_seed},
                            {"genome", ind.genome},
                            {"plan", ind.plan},
                            {"descriptor", ind.descriptor.cells},
                            {"completed", rec.completed},
                            {"status", to_string(rec.status)}};
        if (ind.parents) j["parents"] = {ind.parents->first, ind.parents->second};
        if (rec.completed) {
            j["performance"] = *ind.performance;
            j["best_weights"] = *ind.best_weights;
        }
        if (rec.best_eval) {
            j["best_eval"] = {{"fitness", rec.best_eval->fitness},
                              {"moved", rec.best_eval->moved},
                              {"seconds", rec.best_eval->seconds},
                              {"behaviour", rec.best_eval->behaviour}};
            detail::write_file(dir / "robots" / (detail::robot_stem(id) + "_traj.csv"),
                               detail::trajectory_csv(rec.best_eval->trajectory));
        }
        detail::write_file(dir / "robots" / (detail::robot_stem(id) + ".json"), j.dump());
        if (!rec.learner_log.empty())
            detail::write_file(dir / "learners" / (detail::robot_stem(id) + ".csv"), learner_csv(rec.learner_log));
    }
    detail::write_file(dir / "archive" / "archive.json", nlohmann::json(run.archive).dump(1));
    for (const auto &[name, content] : tables) detail::write_file(dir / "metrics" / name, content);
    if (!run.sched_trace.empty()) {
        std::string s = "time,event,robot_id,iteration,candidate\n";
        for (const auto &e : run.sched_trace)
            s += detail::fmt(e.time) + "," + (e.assign ? "assign" : "complete") + "," +
                 std::to_string(e.task.robot_id) + "," + std::to_string(e.task.iteration) + "," +
                 std::to_string(e.task.candidate) + "\n";
        detail::write_file(dir / "sched_trace.csv", s);
    }
    // manifest last: its presence marks a complete replicate
    detail::write_file(dir / "manifest.json", manifest.dump(2));
}

/// Loads what the metrics need from a replicate directory.
inline RunArtifacts load_replicate(const fs::path &dir) {
    if (!fs::exists(dir / "manifest.json")) throw CorruptRunError("no manifest in " + dir.string());
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(detail::read_file(dir / "manifest.json"));
    } catch (const nlohmann::json::exception &e) {
        throw CorruptRunError(std::string("manifest: ") + e.what());
    }
    RunArtifacts run;
    run.events = parse_events_log(detail::read_file(dir / "events.log"));
    if (run.events.size() != manifest.at("events").get<std::size_t>())
        throw CorruptRunError("events.log does not match manifest");
    std::set<std::uint64_t> ids;
    for (const auto &e : run.events)
        if (e.action == EvoAction::created || e.action == EvoAction::mated) ids.insert(e.robot_id);
    for (auto id : ids) {
        const auto stem = detail::robot_stem(id);
        RobotRecord rec;
        try {
            auto j = nlohmann::json::parse(detail::read_file(dir / "robots" / (stem + ".json")));
            rec.individual.robot_id = id;
            rec.individual.plan = j.at("plan").get<BodyPlan>();
            rec.individual.genome = j.at("genome").get<CppnGenome>();
            rec.completed = j.at("completed").get<bool>();
            if (rec.completed) {
                rec.individual.performance = j.at("performance").get<double>();
                rec.individual.best_weights = j.at("best_weights").get<std::vector<double>>();
            }
            if (j.contains("best_eval")) {
                EvalResult e;
                e.fitness = j["best_eval"].at("fitness").get<double>();
                e.moved = j["best_eval"].at("moved").get<bool>();
                e.seconds = j["best_eval"].at("seconds").get<double>();
                e.behaviour = j["best_eval"].at("behaviour").get<Behaviour>();
                e.trajectory = detail::parse_trajectory_csv(detail::read_file(dir / "robots" / (stem + "_traj.csv")));
                rec.best_eval = std::move(e);
            }
        } catch (const nlohmann::json::exception &e) {
            throw CorruptRunError(stem + ": " + e.what());
        }
        run.robots[id] = std::move(rec);
    }
    return run;
}

inline MetricsTables replay_metrics(const fs::path &dir) { return compute_metrics(load_replicate(dir)); }

inline fs::path replicate_dir(const fs::path &root, int r) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "rep_%02d", r);
    return root / buf;
}

inline Arena experiment_arena(const ExperimentConfig &c) {
    return c.arena_file.empty() ? Arena::default_arena() : load_arena(c.arena_file);
}

inline void validate(const ExperimentConfig &c) {
    parse_variant(c.variant);
    validate(evo_config(c));
    if (c.replicates < 1) throw ConfigError("replicates must be >= 1");
    if (c.learner_budget < 1 || c.initial_lambda < 2) throw ConfigError("learner budget/lambda out of range");
    if (c.cores < 1 || c.slots < 1) throw ConfigError("cores and slots must be >= 1");
}

/// Runs every replicate and writes rep_XX/ directories under out_dir.
inline std::vector<MetricsTables> run_experiment(const ExperimentConfig &config) {
    validate(config);
    const Arena arena = experiment_arena(config);
    const fs::path root = config.out_dir;
    std::error_code ec;
    fs::create_directories(root, ec);
    if (ec || !fs::is_directory(root)) throw ConfigError("cannot create output directory " + root.string());
    std::vector<MetricsTables> all;
    for (int r = 0; r < config.replicates; ++r) {
        const auto seed = replicate_seed(config.seed, r);
        ReplicateRunner runner(config, arena, seed);
        const RunArtifacts run = runner.run();
        auto tables = compute_metrics(run);
        write_replicate(replicate_dir(root, r), config, r, seed, run, tables);
        all.push_back(std::move(tables));
    }
    return all;
}

/// Last mean pool fitness recorded in a replicate's fitness_by_index table.
inline double endpoint_fitness(const MetricsTables &t) {
    std::istringstream in(t.at("fitness_by_index.csv"));
    std::string line, last;
    std::getline(in, line);
    while (std::getline(in, line))
        if (!line.empty()) last = line;
    if (last.empty()) throw AnalysisError("empty fitness table");
    return std::stod(last.substr(last.find(',') + 1));
}

/// Value of a per-index table at the latest row with index <= `index`.
inline double table_value_at(const std::string &table, std::uint64_t index) {
    std::istringstream in(table);
    std::string line;
    std::getline(in, line);
    std::optional<double> v;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (std::stoull(line.substr(0, comma)) > index) break;
        v = std::stod(line.substr(comma + 1));
    }
    if (!v) throw AnalysisError("no row at or before index " + std::to_string(index));
    return *v;
}

} // namespace morphevo
