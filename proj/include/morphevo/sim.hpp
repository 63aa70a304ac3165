#pragma once

// Deterministic 2D kinematic arena for the exploration task. The robot is a
// disc driven by its wheels and legs, perceiving the walls through raycast
// proximity sensors. Fitness is the fraction of the 64 floor tiles visited.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "bodyplan.hpp"
#include "common.hpp"
#include "controller.hpp"

namespace morphevo {

struct Pose {
    double x = 0.0, y = 0.0, heading = 0.0;
};

struct Arena {
    static constexpr double kSide = 2.0;
    static constexpr int kTiles = 8;
    static constexpr double kTile = kSide / kTiles;
    static constexpr int kBlocked = 16;

    std::array<bool, kTiles * kTiles> blocked{}; // index row * 8 + col, row along +y
    Pose start;

    bool is_blocked(int col, int row) const { return blocked[static_cast<std::size_t>(row * kTiles + col)]; }

    static int tile_of(double v) { return std::clamp(static_cast<int>(std::floor(v / kTile)), 0, kTiles - 1); }

    void validate() const {
        const auto n = std::count(blocked.begin(), blocked.end(), true);
        if (n != kBlocked) throw ConfigError("arena must have exactly 16 blocked tiles, got " + std::to_string(n));
        if (!(start.x > 0 && start.x < kSide && start.y > 0 && start.y < kSide))
            throw ConfigError("start pose outside the arena");
        if (is_blocked(tile_of(start.x), tile_of(start.y))) throw ConfigError("start tile is blocked");
    }

    /// Two 2x4 interior walls; start in the middle of the lower-right quadrant.
    static Arena default_arena() {
        Arena a;
        for (int row = 1; row <= 4; ++row)
            for (int col = 2; col <= 3; ++col) a.blocked[row * kTiles + col] = true;
        for (int row = 3; row <= 6; ++row)
            for (int col = 5; col <= 6; ++col) a.blocked[row * kTiles + col] = true;
        a.start = {1.5, 0.5, 0.0};
        return a;
    }
};

/// Mask file: 8 lines of 8 characters ('#' blocked, '.' open), first line is
/// the top row (largest y), then `start <x> <y> <heading>`. Lines starting
/// with ';' are comments.
inline Arena parse_arena(std::istream &in) {
    Arena a;
    std::vector<std::string> rows;
    bool have_start = false;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == ';') continue;
        if (line.rfind("start", 0) == 0) {
            std::istringstream ss(line.substr(5));
            if (!(ss >> a.start.x >> a.start.y >> a.start.heading)) throw ConfigError("malformed start line");
            have_start = true;
            continue;
        }
        rows.push_back(line);
    }
    if (rows.size() != Arena::kTiles) throw ConfigError("arena mask needs 8 rows");
    if (!have_start) throw ConfigError("arena file lacks a start line");
    for (int r = 0; r < Arena::kTiles; ++r) {
        const auto &s = rows[static_cast<std::size_t>(r)];
        if (s.size() != Arena::kTiles) throw ConfigError("arena mask rows need 8 columns");
        for (int c = 0; c < Arena::kTiles; ++c) {
            if (s[c] != '#' && s[c] != '.') throw ConfigError(std::string("bad mask character '") + s[c] + "'");
            a.blocked[(Arena::kTiles - 1 - r) * Arena::kTiles + c] = s[c] == '#';
        }
    }
    a.validate();
    return a;
}

inline Arena load_arena(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open arena file " + path);
    return parse_arena(in);
}

inline void write_arena(std::ostream &out, const Arena &a) {
    for (int r = Arena::kTiles - 1; r >= 0; --r) {
        for (int c = 0; c < Arena::kTiles; ++c) out << (a.is_blocked(c, r) ? '#' : '.');
        out << '\n';
    }
    out << "start " << a.start.x << ' ' << a.start.y << ' ' << a.start.heading << '\n';
}

struct TrajectoryPoint {
    double t = 0.0, x = 0.0, y = 0.0;
};
using Trajectory = std::vector<TrajectoryPoint>;
using Behaviour = std::array<std::uint8_t, Arena::kTiles * Arena::kTiles>;

struct EvalResult {
    double fitness = 0.0;
    Trajectory trajectory;
    Behaviour behaviour{};
    bool moved = false;
    double seconds = 0.0;
};

inline Behaviour behaviour_descriptor(const Trajectory &traj, const Arena &) {
    Behaviour b{};
    for (const auto &p : traj) b[static_cast<std::size_t>(Arena::tile_of(p.y) * Arena::kTiles + Arena::tile_of(p.x))] = 1;
    return b;
}

inline double behaviour_distance(const Behaviour &a, const Behaviour &b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double diff = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        d += diff * diff;
    }
    return d;
}

inline int popcount(const Behaviour &b) { return static_cast<int>(std::count(b.begin(), b.end(), 1)); }

struct SimParams {
    double dt = 0.1;
    int steps = 600;
    int abort_step = 100; // 10 s
    double move_threshold = 0.05;
    double sensor_range = 1.0;
    double wheel_speed = 0.15;   // m/s per wheel at full output
    double wheel_turn = 0.15;    // rad/s per wheel per voxel of lateral offset
    double leg_noise = 0.05;     // rad per step per leg
    double max_speed = 0.4;
    double max_turn = 2.0;
};

/// Kinematic summary of a body-plan. Body frame: grid x forward, grid y left.
struct RobotModel {
    struct Drive {
        double lateral = 0.0;
        bool leg = false;
    };
    double radius = 0.05;
    std::vector<double> sensor_angles;
    std::vector<Drive> drives;
    ElmanSpec spec;
};

inline RobotModel robot_model(const BodyPlan &plan) {
    RobotModel m;
    auto ext = chassis_extent(plan);
    m.radius = 0.05 + 0.01 * std::max(ext.width, ext.depth);
    const auto head = BodyPlan::kHead;
    for (const auto &c : plan.components) {
        const double fx = c.pos.x - head.x, ly = c.pos.y - head.y;
        switch (c.type) {
        case ComponentType::sensor: m.sensor_angles.push_back(std::atan2(ly, fx)); break;
        case ComponentType::wheel: m.drives.push_back({ly, false}); break;
        case ComponentType::leg: m.drives.push_back({ly, true}); break;
        case ComponentType::caster: break;
        }
    }
    m.spec = {static_cast<int>(m.sensor_angles.size()), static_cast<int>(m.drives.size())};
    return m;
}

inline ElmanSpec controller_spec(const BodyPlan &plan) {
    return {plan.sensors(), plan.actuators()};
}

namespace detail {

struct Box {
    double x0, y0, x1, y1;
};

inline std::vector<Box> blocked_boxes(const Arena &a) {
    std::vector<Box> boxes;
    for (int r = 0; r < Arena::kTiles; ++r)
        for (int c = 0; c < Arena::kTiles; ++c)
            if (a.is_blocked(c, r))
                boxes.push_back({c * Arena::kTile, r * Arena::kTile, (c + 1) * Arena::kTile, (r + 1) * Arena::kTile});
    return boxes;
}

// Distance along the ray to the first wall or blocked tile, capped at range.
inline double raycast(const std::vector<Box> &boxes, double ox, double oy, double dx, double dy, double range) {
    double best = range;
    auto slab = [&](const Box &b) {
        double tmin = 0.0, tmax = best;
        const double o[2] = {ox, oy}, d[2] = {dx, dy}, lo[2] = {b.x0, b.y0}, hi[2] = {b.x1, b.y1};
        for (int k = 0; k < 2; ++k) {
            if (std::fabs(d[k]) < 1e-12) {
                if (o[k] < lo[k] || o[k] > hi[k]) return;
            } else {
                double t1 = (lo[k] - o[k]) / d[k], t2 = (hi[k] - o[k]) / d[k];
                if (t1 > t2) std::swap(t1, t2);
                tmin = std::max(tmin, t1);
                tmax = std::min(tmax, t2);
                if (tmin > tmax) return;
            }
        }
        best = std::min(best, tmin);
    };
    for (const auto &b : boxes) slab(b);
    // arena boundary, seen from inside
    if (dx > 1e-12) best = std::min(best, (Arena::kSide - ox) / dx);
    if (dx < -1e-12) best = std::min(best, -ox / dx);
    if (dy > 1e-12) best = std::min(best, (Arena::kSide - oy) / dy);
    if (dy < -1e-12) best = std::min(best, -oy / dy);
    return std::max(0.0, best);
}

// Pushes the disc out of walls and blocked tiles; motion parallel to a wall
// is kept, so the robot slides.
inline void resolve_collisions(const std::vector<Box> &boxes, double radius, double &x, double &y) {
    for (int iter = 0; iter < 4; ++iter) {
        bool touched = false;
        for (const auto &b : boxes) {
            const double cx = std::clamp(x, b.x0, b.x1), cy = std::clamp(y, b.y0, b.y1);
            const double ddx = x - cx, ddy = y - cy;
            const double d2 = ddx * ddx + ddy * ddy;
            if (d2 >= radius * radius) continue;
            touched = true;
            if (d2 > 1e-18) {
                const double d = std::sqrt(d2);
                x += ddx / d * (radius - d);
                y += ddy / d * (radius - d);
            } else {
                // centre inside the box: leave through the nearest face
                const double pen[4] = {x - b.x0, b.x1 - x, y - b.y0, b.y1 - y};
                const int k = static_cast<int>(std::min_element(pen, pen + 4) - pen);
                if (k == 0) x = b.x0 - radius;
                else if (k == 1) x = b.x1 + radius;
                else if (k == 2) y = b.y0 - radius;
                else y = b.y1 + radius;
            }
        }
        x = std::clamp(x, radius, Arena::kSide - radius);
        y = std::clamp(y, radius, Arena::kSide - radius);
        if (!touched) break;
    }
}

} // namespace detail

/// Runs one 60 s episode (600 steps of 0.1 s), stopped after 10 s if the
/// robot has not moved more than 5 cm from its start.
inline EvalResult run_episode(const BodyPlan &plan, std::span<const double> weights, const Arena &arena,
                              std::uint64_t seed, const SimParams &params = {}) {
    if (!is_viable(plan)) throw ViabilityError("plan lacks a sensor or an actuator");
    const RobotModel model = robot_model(plan);
    if (weights.size() != weights_dim(model.spec)) throw InterfaceError("weight vector does not match the plan");

    ElmanController ctrl(model.spec, std::vector<double>(weights.begin(), weights.end()));
    const auto boxes = detail::blocked_boxes(arena);
    Rng rng(seed);
    std::normal_distribution<double> heading_noise(0.0, params.leg_noise);

    double x = arena.start.x, y = arena.start.y, th = arena.start.heading;
    detail::resolve_collisions(boxes, model.radius, x, y);
    const double x0 = x, y0 = y;

    EvalResult res;
    res.trajectory.reserve(static_cast<std::size_t>(params.steps) + 1);
    res.trajectory.push_back({0.0, x, y});
    std::vector<double> inputs(model.sensor_angles.size()), outputs(model.drives.size());

    for (int step = 1; step <= params.steps; ++step) {
        for (std::size_t s = 0; s < inputs.size(); ++s) {
            const double a = th + model.sensor_angles[s];
            const double d = detail::raycast(boxes, x, y, std::cos(a), std::sin(a), params.sensor_range);
            inputs[s] = d < params.sensor_range ? 1.0 - d / params.sensor_range : 0.0;
        }
        ctrl.step(inputs, outputs);

        double v = 0.0, w = 0.0, noise = 0.0;
        for (std::size_t k = 0; k < outputs.size(); ++k) {
            const auto &drv = model.drives[k];
            const double gain = drv.leg ? 0.5 : 1.0;
            v += gain * params.wheel_speed * outputs[k];
            w -= gain * params.wheel_turn * drv.lateral * outputs[k];
            if (drv.leg) noise += heading_noise(rng);
        }
        v = std::clamp(v, -params.max_speed, params.max_speed);
        w = std::clamp(w, -params.max_turn, params.max_turn);
        th += w * params.dt + noise;
        x += v * std::cos(th) * params.dt;
        y += v * std::sin(th) * params.dt;
        detail::resolve_collisions(boxes, model.radius, x, y);

        res.trajectory.push_back({step * params.dt, x, y});
        if (std::hypot(x - x0, y - y0) > params.move_threshold) res.moved = true;
        if (step == params.abort_step && !res.moved) break;
    }
    res.seconds = res.trajectory.back().t;
    res.behaviour = behaviour_descriptor(res.trajectory, arena);
    res.fitness = popcount(res.behaviour) / 64.0;
    return res;
}

inline void write_trajectory_csv(std::ostream &out, const Trajectory &traj) {
    char buf[96];
    out << "t,x,y\n";
    for (const auto &p : traj) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", p.t, p.x, p.y);
        out << buf;
    }
}

} // namespace morphevo
