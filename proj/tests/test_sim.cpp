#include <catch2/catch_amalgamated.hpp>

#include <set>
#include <sstream>

#include "morphevo/sim.hpp"

using namespace morphevo;

namespace {

// Head, one wheel under the head (no lateral offset) and one forward sensor.
BodyPlan straight_driver() {
    BodyPlan p;
    for (GridPos v : {GridPos{5, 5, 5}, GridPos{5, 5, 4}, GridPos{6, 5, 5}}) p.voxels[cell_index(v)] = 1;
    p.components = {{{5, 5, 4}, ComponentType::wheel}, {{6, 5, 5}, ComponentType::sensor}};
    return p;
}

// All weights zero except the output biases.
std::vector<double> bias_only(const BodyPlan &plan, double bias) {
    const ElmanSpec spec = controller_spec(plan);
    std::vector<double> w(weights_dim(spec), 0.0);
    for (int o = 0; o < spec.n_out; ++o) w[w.size() - 1 - o] = bias;
    return w;
}

// Row 0 is an open corridor; rows 1 and 7 are walls.
Arena corridor() {
    Arena a;
    for (int c = 0; c < 8; ++c) {
        a.blocked[1 * 8 + c] = true;
        a.blocked[7 * 8 + c] = true;
    }
    a.start = {0.125, 0.125, 0.0};
    a.validate();
    return a;
}

BodyPlan random_viable(Rng &rng) {
    for (;;) {
        BodyPlan p = repair(decode(random_genome(rng)));
        if (is_viable(p)) return p;
    }
}

// Tiles whose interior the segment passes through, by clipping the segment
// against each tile box (Liang-Barsky).
std::set<std::pair<int, int>> tiles_crossed(double x0, double y0, double x1, double y1) {
    std::set<std::pair<int, int>> out;
    for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 8; ++c) {
            double t0 = 0.0, t1 = 1.0;
            const double dx = x1 - x0, dy = y1 - y0;
            const double p[4] = {-dx, dx, -dy, dy};
            const double q[4] = {x0 - c * 0.25, (c + 1) * 0.25 - x0, y0 - r * 0.25, (r + 1) * 0.25 - y0};
            bool inside = true;
            for (int k = 0; k < 4 && inside; ++k) {
                if (p[k] == 0.0) {
                    inside = q[k] > 0.0;
                } else {
                    const double t = q[k] / p[k];
                    if (p[k] < 0) t0 = std::max(t0, t);
                    else t1 = std::min(t1, t);
                }
            }
            if (inside && t0 < t1) out.insert({c, r});
        }
    return out;
}

} // namespace

TEST_CASE("zero controller: stationary, aborted at 10 s") {
    Arena arena = Arena::default_arena();
    BodyPlan plan = straight_driver();
    auto res = run_episode(plan, bias_only(plan, 0.0), arena, 1);
    CHECK(res.fitness == 1.0 / 64.0);
    CHECK_FALSE(res.moved);
    CHECK(res.seconds == Catch::Approx(10.0));
    CHECK(res.trajectory.size() == 101u);
    CHECK(popcount(res.behaviour) == 1);
}

TEST_CASE("constant forward drive along an open corridor visits its 8 tiles") {
    Arena arena = corridor();
    BodyPlan plan = straight_driver();
    const auto res = run_episode(plan, bias_only(plan, 20.0), arena, 1);
    // closed form: speed tanh(20) * 0.15 m/s along +x, stopped by the east wall
    const double radius = 0.05 + 0.01 * 2;
    const double x_end = std::min(arena.start.x + std::tanh(20.0) * 0.15 * 60.0, 2.0 - radius);
    const int tiles = Arena::tile_of(x_end) - Arena::tile_of(arena.start.x) + 1;
    CHECK(tiles == 8);
    CHECK(res.fitness == tiles / 64.0);
    CHECK(res.moved);
    CHECK(res.seconds == Catch::Approx(60.0));
    CHECK(res.trajectory.back().x == Catch::Approx(x_end).margin(1e-9));
    for (const auto &p : res.trajectory) CHECK(p.y == Catch::Approx(0.125).margin(1e-12));
}

TEST_CASE("behaviour descriptor") {
    Arena arena = Arena::default_arena();
    Trajectory still(50, TrajectoryPoint{0.0, 1.5, 0.5});
    CHECK(popcount(behaviour_descriptor(still, arena)) == 1);

    // dense samples along y = x + 0.05 from corner to corner
    Trajectory diag;
    const double x0 = 0.001, x1 = 1.949;
    for (int i = 0; i <= 20000; ++i) {
        const double x = x0 + (x1 - x0) * i / 20000.0;
        diag.push_back({i * 0.01, x, x + 0.05});
    }
    auto b = behaviour_descriptor(diag, arena);
    auto want = tiles_crossed(x0, x0 + 0.05, x1, x1 + 0.05);
    CHECK(want.size() == 15u);
    for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 8; ++c) {
            INFO("tile " << c << "," << r);
            CHECK(b[r * 8 + c] == (want.count({c, r}) ? 1 : 0));
        }
}

TEST_CASE("behaviour distance") {
    Behaviour zero{}, ones{};
    ones.fill(1);
    CHECK(behaviour_distance(zero, zero) == 0.0);
    CHECK(behaviour_distance(ones, zero) == 64.0);
    Behaviour three{};
    three[0] = three[9] = three[63] = 1;
    CHECK(behaviour_distance(three, zero) == 3.0);
}

TEST_CASE("random robots: bounds, popcount, determinism, no wall penetration") {
    Arena arena = Arena::default_arena();
    const auto boxes = detail::blocked_boxes(arena);
    Rng rng(17);
    int moved = 0;
    for (int trial = 0; trial < 60; ++trial) {
        BodyPlan plan = random_viable(rng);
        std::vector<double> w(weights_dim(controller_spec(plan)));
        for (auto &x : w) x = uniform(rng, -2.0, 2.0);
        const auto res = run_episode(plan, w, arena, 1000 + trial);
        CHECK(res.fitness >= 1.0 / 64.0);
        CHECK(res.fitness <= 48.0 / 64.0);
        CHECK(res.fitness * 64.0 == popcount(res.behaviour));
        moved += res.moved;
        for (const auto &p : res.trajectory) {
            REQUIRE((p.x > 0.0 && p.x < 2.0 && p.y > 0.0 && p.y < 2.0));
            for (const auto &bx : boxes) REQUIRE_FALSE((p.x > bx.x0 && p.x < bx.x1 && p.y > bx.y0 && p.y < bx.y1));
        }
        for (int c = 0; c < 64; ++c)
            if (arena.blocked[c]) CHECK(res.behaviour[c] == 0);

        const auto again = run_episode(plan, w, arena, 1000 + trial);
        CHECK(again.fitness == res.fitness);
        CHECK(again.behaviour == res.behaviour);
        REQUIRE(again.trajectory.size() == res.trajectory.size());
        for (std::size_t i = 0; i < res.trajectory.size(); ++i) {
            CHECK(again.trajectory[i].x == res.trajectory[i].x);
            CHECK(again.trajectory[i].y == res.trajectory[i].y);
        }
    }
    CHECK(moved > 0);
}

TEST_CASE("legs add seeded heading noise") {
    BodyPlan p;
    for (GridPos v : {GridPos{5, 5, 5}, GridPos{5, 5, 4}, GridPos{6, 5, 5}}) p.voxels[cell_index(v)] = 1;
    p.components = {{{5, 5, 4}, ComponentType::leg}, {{6, 5, 5}, ComponentType::sensor}};
    const auto w = bias_only(p, 20.0);
    const Arena arena = Arena::default_arena();
    const auto a = run_episode(p, w, arena, 1), b = run_episode(p, w, arena, 2), c = run_episode(p, w, arena, 1);
    CHECK(a.trajectory.back().x == c.trajectory.back().x);
    CHECK((a.trajectory[50].x != b.trajectory[50].x || a.trajectory[50].y != b.trajectory[50].y));
}

TEST_CASE("opposite wheels at full offset spin in place") {
    BodyPlan p;
    for (int y = 0; y < 11; ++y) p.voxels[cell_index({5, y, 5})] = 1;
    p.voxels[cell_index({6, 5, 5})] = 1;
    p.components = {{{5, 0, 5}, ComponentType::wheel},
                    {{5, 10, 5}, ComponentType::wheel},
                    {{6, 5, 5}, ComponentType::sensor}};
    std::vector<double> w(weights_dim(controller_spec(p)), 0.0);
    w[w.size() - 2] = 20.0;  // wheel at y=0 (right side) forward
    w[w.size() - 1] = -20.0; // wheel at y=10 (left side) backward
    const auto res = run_episode(p, w, Arena::default_arena(), 3);
    // pure rotation: the disc never leaves its start point
    for (const auto &pt : res.trajectory) {
        CHECK(pt.x == Catch::Approx(1.5).margin(1e-9));
        CHECK(pt.y == Catch::Approx(0.5).margin(1e-9));
    }
}

TEST_CASE("raycast readings") {
    const auto boxes = detail::blocked_boxes(Arena::default_arena());
    // from (0.5, 0.5) looking +x the wall at col 2 starts at x = 0.5
    CHECK(detail::raycast(boxes, 0.4, 0.5, 1, 0, 1.0) == Catch::Approx(0.1));
    // looking -x hits the arena boundary
    CHECK(detail::raycast(boxes, 0.4, 0.5, -1, 0, 1.0) == Catch::Approx(0.4));
    // out of range
    CHECK(detail::raycast(boxes, 1.5, 0.1, 0, 1, 0.5) == Catch::Approx(0.5));
}

TEST_CASE("episode preconditions") {
    Arena arena = Arena::default_arena();
    BodyPlan plan = straight_driver();
    CHECK_THROWS_AS(run_episode(plan, std::vector<double>(3), arena, 1), InterfaceError);
    BodyPlan blind = plan;
    blind.components.pop_back();
    CHECK_THROWS_AS(run_episode(blind, std::vector<double>(3), arena, 1), ViabilityError);
}

TEST_CASE("arena files") {
    const Arena def = Arena::default_arena();
    CHECK(std::count(def.blocked.begin(), def.blocked.end(), true) == 16);
    const Arena loaded = load_arena(MORPHEVO_SOURCE_DIR "/data/default.map");
    CHECK(loaded.blocked == def.blocked);
    CHECK(loaded.start.x == def.start.x);
    CHECK(loaded.start.y == def.start.y);
    CHECK(loaded.start.heading == def.start.heading);

    std::stringstream ss;
    write_arena(ss, corridor());
    CHECK(parse_arena(ss).blocked == corridor().blocked);

    std::istringstream too_few("........\n........\n........\n........\n........\n........\n........\n########\n"
                               "start 1 1 0\n");
    CHECK_THROWS_AS(parse_arena(too_few), ConfigError);
    std::istringstream no_start(".\n");
    CHECK_THROWS_AS(parse_arena(no_start), ConfigError);
    CHECK_THROWS_AS(load_arena("/nonexistent/arena.map"), ConfigError);
}

TEST_CASE("trajectory CSV") {
    std::ostringstream out;
    write_trajectory_csv(out, {{0.0, 1.0, 2.0}, {0.1, 1.5, 2.5}});
    CHECK(out.str().rfind("t,x,y\n0,1,2\n", 0) == 0);
}
