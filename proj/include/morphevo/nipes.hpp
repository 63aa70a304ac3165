#pragma once

// NIP-ES controller learner: CMA-ES with restarts that double the population,
// driven by a blend of behavioural novelty and task performance whose novelty
// weight decays by 0.05 per iteration. Terminates after 200 evaluations (at an
// iteration boundary) or after 50 consecutive evaluations without movement.

#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "bodyplan.hpp"
#include "cmaes.hpp"
#include "common.hpp"
#include "sim.hpp"

namespace morphevo {

struct NipesParams {
    int initial_lambda = 10;
    int budget = 200;
    double sigma0 = 0.5;
    double novelty_decrement = 0.05;
    int knn = 15;
    double archive_probability = 0.05;
    int stagnation_window = 20;
    double fitness_variance_threshold = 0.05;
    double descriptor_variance_threshold = 0.05;
    int no_move_limit = 50;
    // novelty enters the objective as N / 64, the same unit as tiles/64
    double novelty_scale = 1.0 / 64.0;
};

enum class LearnerStatus { running, done_budget, done_no_move };

inline const char *to_string(LearnerStatus s) {
    switch (s) {
    case LearnerStatus::running: return "running";
    case LearnerStatus::done_budget: return "done-budget";
    case LearnerStatus::done_no_move: return "done-no-move";
    }
    return "?";
}

struct CandidateEval {
    double performance = 0.0;
    Behaviour behaviour{};
    bool moved = false;
};

struct LearnerLogRecord {
    int iteration = 0;
    int lambda = 0;
    double novelty_ratio = 0.0;
    double best_performance = 0.0;
    int evaluations = 0;
    int restarts = 0;
};

/// Mean behaviour distance of `population[index]` to its k nearest neighbours
/// among the rest of the population and the archive.
inline double behavioural_novelty(std::size_t index, std::span<const Behaviour> population,
                                  std::span<const Behaviour> archive, int k) {
    std::vector<double> d;
    d.reserve(population.size() + archive.size());
    for (std::size_t j = 0; j < population.size(); ++j)
        if (j != index) d.push_back(behaviour_distance(population[index], population[j]));
    for (const auto &a : archive) d.push_back(behaviour_distance(population[index], a));
    return knn_mean(std::move(d), k);
}

/// Mean over the 64 cells of the per-cell population variance.
inline double descriptor_variance(std::span<const Behaviour> population) {
    if (population.empty()) return 0.0;
    const double n = static_cast<double>(population.size());
    double total = 0.0;
    for (std::size_t c = 0; c < Behaviour{}.size(); ++c) {
        double mean = 0.0;
        for (const auto &b : population) mean += b[c];
        mean /= n;
        double var = 0.0;
        for (const auto &b : population) var += (b[c] - mean) * (b[c] - mean);
        total += var / n;
    }
    return total / static_cast<double>(Behaviour{}.size());
}

inline double population_variance(std::span<const double> xs) {
    if (xs.empty()) return 0.0;
    const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    double v = 0.0;
    for (double x : xs) v += (x - mean) * (x - mean);
    return v / static_cast<double>(xs.size());
}

class Learner {
public:
    Learner(std::size_t dim, std::uint64_t seed, std::optional<std::vector<double>> archived = std::nullopt,
            NipesParams params = {})
        : params_(params), rng_(seed), cma_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim == 0 ? 1 : dim)),
                                            params.sigma0, params.initial_lambda) {
        if (dim < 1) throw InterfaceError("learner dimension must be >= 1");
        Eigen::VectorXd mean(static_cast<Eigen::Index>(dim));
        if (archived) {
            if (archived->size() != dim) throw InterfaceError("archive controller has the wrong length");
            for (std::size_t i = 0; i < dim; ++i) mean[static_cast<Eigen::Index>(i)] = (*archived)[i];
        } else {
            mean = random_mean(dim);
        }
        lambda_ = params_.initial_lambda;
        cma_.reset(std::move(mean), params_.sigma0, lambda_);
    }

    const std::vector<std::vector<double>> &ask() {
        if (status_ != LearnerStatus::running) throw LifecycleError("ask on a terminated learner");
        if (pending_) return candidates_;
        auto xs = cma_.ask(rng_);
        candidates_.clear();
        for (const auto &x : xs) candidates_.emplace_back(x.data(), x.data() + x.size());
        pending_ = true;
        return candidates_;
    }

    /// Applies one iteration's results in candidate order. Returns the index of
    /// the candidate that became the new best-of-run, if any.
    std::optional<std::size_t> tell(std::span<const CandidateEval> evals) {
        if (!pending_) throw LifecycleError("tell without a pending ask");
        if (evals.size() != candidates_.size()) throw InterfaceError("tell: evaluation count != lambda");
        const std::size_t lambda = evals.size();

        std::vector<Behaviour> pop(lambda);
        for (std::size_t i = 0; i < lambda; ++i) pop[i] = evals[i].behaviour;
        std::vector<double> objective(lambda);
        for (std::size_t i = 0; i < lambda; ++i) {
            const double nov = behavioural_novelty(i, pop, archive_, params_.knn) * params_.novelty_scale;
            const double f = novelty_ratio_ * nov + (1.0 - novelty_ratio_) * evals[i].performance;
            objective[i] = -f; // CMA-ES minimises
        }
        last_objective_ = objective;
        cma_.tell(objective);

        std::optional<std::size_t> improved;
        double iter_best = evals[0].performance;
        for (std::size_t i = 0; i < lambda; ++i) {
            iter_best = std::max(iter_best, evals[i].performance);
            if (!best_ || evals[i].performance > best_->second) {
                best_ = {candidates_[i], evals[i].performance};
                improved = i;
            }
        }

        novelty_ratio_ = std::max(0.0, novelty_ratio_ - params_.novelty_decrement);
        for (const auto &b : pop)
            if (bernoulli(rng_, params_.archive_probability)) archive_.push_back(b);

        window_.push_back(iter_best);
        if (static_cast<int>(window_.size()) > params_.stagnation_window) window_.erase(window_.begin());
        ++iteration_;
        if (static_cast<int>(window_.size()) == params_.stagnation_window &&
            population_variance(window_) < params_.fitness_variance_threshold &&
            descriptor_variance(pop) < params_.descriptor_variance_threshold)
            restart();

        evaluations_ += static_cast<int>(lambda);
        for (const auto &e : evals) no_move_streak_ = e.moved ? 0 : no_move_streak_ + 1;
        if (no_move_streak_ >= params_.no_move_limit) status_ = LearnerStatus::done_no_move;
        else if (evaluations_ >= params_.budget) status_ = LearnerStatus::done_budget;

        log_.push_back({iteration_, static_cast<int>(lambda), novelty_ratio_, iter_best, evaluations_, restarts_});
        pending_ = false;
        return improved;
    }

    LearnerStatus status() const { return status_; }
    bool terminated() const { return status_ != LearnerStatus::running; }

    /// Best evaluated candidate by task performance, earliest on ties.
    std::pair<std::vector<double>, double> best_of_run() const {
        if (!best_) throw LifecycleError("best_of_run before any tell");
        return *best_;
    }

    std::size_t dim() const { return static_cast<std::size_t>(cma_.dim()); }
    int lambda() const { return lambda_; }
    double novelty_ratio() const { return novelty_ratio_; }
    int iteration() const { return iteration_; }
    int restarts() const { return restarts_; }
    int evaluations_used() const { return evaluations_; }
    int no_move_streak() const { return no_move_streak_; }
    const std::vector<Behaviour> &behaviour_archive() const { return archive_; }
    const CmaEs &strategy() const { return cma_; }
    const std::vector<LearnerLogRecord> &log() const { return log_; }
    const std::vector<double> &last_objective() const { return last_objective_; }
    const NipesParams &params() const { return params_; }

    // Test hooks for the termination rules.
    void set_evaluations_used(int n) { evaluations_ = n; }

private:
    Eigen::VectorXd random_mean(std::size_t dim) {
        Eigen::VectorXd m(static_cast<Eigen::Index>(dim));
        for (Eigen::Index i = 0; i < m.size(); ++i) m[i] = uniform(rng_, -1.0, 1.0);
        return m;
    }

    void restart() {
        ++restarts_;
        lambda_ *= 2;
        novelty_ratio_ = 1.0;
        window_.clear();
        cma_.reset(random_mean(dim()), params_.sigma0, lambda_);
    }

    NipesParams params_;
    Rng rng_;
    CmaEs cma_;
    int lambda_ = 10;
    double novelty_ratio_ = 1.0;
    int iteration_ = 0;
    int restarts_ = 0;
    int evaluations_ = 0;
    int no_move_streak_ = 0;
    LearnerStatus status_ = LearnerStatus::running;
    bool pending_ = false;
    std::vector<std::vector<double>> candidates_;
    std::vector<double> last_objective_;
    std::vector<Behaviour> archive_;
    std::vector<double> window_;
    std::optional<std::pair<std::vector<double>, double>> best_;
    std::vector<LearnerLogRecord> log_;
};

} // namespace morphevo
