#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "bodyplan.hpp"
#include "common.hpp"
#include "sim.hpp"

namespace morphevo {

inline constexpr int kComponentNormaliser = 8;
inline constexpr int kResampledPoints = 180;
inline constexpr double kEpisodeSeconds = 60.0;

/// Normalised wheel, leg, sensor and caster counts plus the chassis width,
/// depth and height over the grid size, summed into one design scalar.
inline double morph_scalar(const BodyPlan &plan) {
    double s = 0.0;
    for (auto t : {ComponentType::wheel, ComponentType::leg, ComponentType::sensor, ComponentType::caster})
        s += std::min(1.0, static_cast<double>(plan.count(t)) / kComponentNormaliser);
    const auto e = chassis_extent(plan);
    s += (e.width + e.depth + e.height) / static_cast<double>(kGrid);
    return s;
}

struct PoolMember {
    std::uint64_t robot_id = 0;
    double performance = 0.0;
    double morph = 0.0;
};

struct PoolSnapshot {
    std::uint64_t clock = 0;
    std::vector<PoolMember> members;
};

inline double mean_performance(const PoolSnapshot &s) {
    if (s.members.empty()) return 0.0;
    double sum = 0.0;
    for (const auto &m : s.members) sum += m.performance;
    return sum / static_cast<double>(s.members.size());
}

/// Population variance (divide by P) of the members' design scalars.
inline double morphological_variance(const PoolSnapshot &s) {
    std::vector<double> xs;
    for (const auto &m : s.members) xs.push_back(m.morph);
    if (xs.empty()) return 0.0;
    const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    double v = 0.0;
    for (double x : xs) v += (x - mean) * (x - mean);
    return v / static_cast<double>(xs.size());
}

struct Point2 {
    double x = 0.0, y = 0.0;
    friend bool operator==(const Point2 &, const Point2 &) = default;
};
using ResampledTrajectory = std::vector<Point2>;

/// Linear interpolation at 180 instants evenly spread over [0, 60] s. Short
/// (aborted) episodes hold their last position.
inline ResampledTrajectory resample_trajectory(const Trajectory &traj) {
    if (traj.empty()) throw InterfaceError("cannot resample an empty trajectory");
    ResampledTrajectory out;
    out.reserve(kResampledPoints);
    std::size_t seg = 0;
    for (int i = 0; i < kResampledPoints; ++i) {
        const double t = kEpisodeSeconds * i / (kResampledPoints - 1);
        while (seg + 1 < traj.size() && traj[seg + 1].t < t) ++seg;
        if (seg + 1 >= traj.size() || t <= traj[seg].t) {
            const auto &p = t <= traj[seg].t ? traj[seg] : traj.back();
            out.push_back({p.x, p.y});
            continue;
        }
        const auto &a = traj[seg], &b = traj[seg + 1];
        const double u = (t - a.t) / (b.t - a.t);
        out.push_back({a.x + u * (b.x - a.x), a.y + u * (b.y - a.y)});
    }
    return out;
}

inline double trajectory_distance(const ResampledTrajectory &a, const ResampledTrajectory &b) {
    if (a.size() != b.size() || a.size() != static_cast<std::size_t>(kResampledPoints))
        throw InterfaceError("trajectory_distance needs two 180-point trajectories");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += std::hypot(a[i].x - b[i].x, a[i].y - b[i].y);
    return sum / static_cast<double>(a.size());
}

/// Mean trajectory distance over all unordered pairs.
inline double behavioural_variance(std::span<const ResampledTrajectory> trajs) {
    if (trajs.size() < 2) throw AnalysisError("behavioural variance needs at least two trajectories");
    double sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < trajs.size(); ++i)
        for (std::size_t j = i + 1; j < trajs.size(); ++j) {
            sum += trajectory_distance(trajs[i], trajs[j]);
            ++pairs;
        }
    return sum / static_cast<double>(pairs);
}

struct RobotScore {
    std::uint64_t robot_id = 0;
    double performance = 0.0;
};

/// The k best robots of a run, best first, lower robot id on ties.
inline std::vector<RobotScore> top_k(std::vector<RobotScore> history, std::size_t k = 20) {
    if (history.size() < k) throw AnalysisError("fewer evaluated robots than k");
    std::stable_sort(history.begin(), history.end(), [](const RobotScore &a, const RobotScore &b) {
        if (a.performance != b.performance) return a.performance > b.performance;
        return a.robot_id < b.robot_id;
    });
    history.resize(k);
    return history;
}

struct RankSumResult {
    double u = 0.0;       // U statistic of the first sample
    double z = 0.0;
    double p_value = 1.0; // two-sided, normal approximation with tie correction
};

/// Mann-Whitney U (Wilcoxon rank-sum) test.
inline RankSumResult rank_sum_test(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw AnalysisError("rank-sum test needs two non-empty samples");
    struct Obs {
        double v;
        int group;
    };
    std::vector<Obs> all;
    for (double v : a) all.push_back({v, 0});
    for (double v : b) all.push_back({v, 1});
    std::stable_sort(all.begin(), all.end(), [](const Obs &x, const Obs &y) { return x.v < y.v; });
    const double n1 = static_cast<double>(a.size()), n2 = static_cast<double>(b.size()), n = n1 + n2;
    double rank_sum_a = 0.0, tie_term = 0.0;
    for (std::size_t i = 0; i < all.size();) {
        std::size_t j = i;
        while (j < all.size() && all[j].v == all[i].v) ++j;
        const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        const double t = static_cast<double>(j - i);
        tie_term += t * t * t - t;
        for (std::size_t k = i; k < j; ++k)
            if (all[k].group == 0) rank_sum_a += avg_rank;
        i = j;
    }
    RankSumResult r;
    r.u = rank_sum_a - n1 * (n1 + 1.0) / 2.0;
    const double mean_u = n1 * n2 / 2.0;
    const double var_u = n1 * n2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if (var_u <= 0.0) return r;
    r.z = (r.u - mean_u) / std::sqrt(var_u);
    r.p_value = std::erfc(std::fabs(r.z) / std::sqrt(2.0));
    return r;
}

} // namespace morphevo
