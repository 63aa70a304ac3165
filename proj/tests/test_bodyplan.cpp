#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <queue>

#include "morphevo/bodyplan.hpp"

using namespace morphevo;

namespace {

CppnGenome constant_genome(double material, double presence, double type, Activation type_act = Activation::linear) {
    // a gaussian hidden node with no inputs emits exp(0) = 1 everywhere
    CppnGenome g;
    for (int i = 0; i < 4; ++i) g.nodes.push_back({i, Activation::linear});
    g.nodes.push_back({4, Activation::linear});
    g.nodes.push_back({5, Activation::linear});
    g.nodes.push_back({6, type_act});
    g.nodes.push_back({7, Activation::gaussian});
    g.links.push_back({0, 7, 4, material, true});
    g.links.push_back({1, 7, 5, presence, true});
    g.links.push_back({2, 7, 6, type, true});
    return g;
}

BodyPlan with_voxels(std::initializer_list<GridPos> cells) {
    BodyPlan p;
    for (const auto &c : cells) p.voxels[cell_index(c)] = 1;
    return p;
}

// Breadth-first 26-connected flood from the head: an oracle independent of repair.
std::vector<std::uint8_t> flood_from_head(const std::vector<std::uint8_t> &occ) {
    std::vector<std::uint8_t> seen(kCells, 0);
    std::queue<GridPos> q;
    q.push(BodyPlan::kHead);
    seen[cell_index(BodyPlan::kHead)] = 1;
    while (!q.empty()) {
        auto p = q.front();
        q.pop();
        for (int i = 0; i < kCells; ++i) {
            if (seen[i] || !occ[i]) continue;
            auto r = cell_pos(i);
            if (std::max({std::abs(r.x - p.x), std::abs(r.y - p.y), std::abs(r.z - p.z)}) == 1) {
                seen[i] = 1;
                q.push(r);
            }
        }
    }
    return seen;
}

MorphDescriptor descriptor_with(std::initializer_list<std::pair<GridPos, ComponentType>> comps) {
    MorphDescriptor d;
    for (const auto &[p, t] : comps) d.cells[cell_index(p)] = static_cast<std::uint8_t>(t);
    return d;
}

bool plan_invariants_hold(const BodyPlan &p) {
    if (!p.occupied(BodyPlan::kHead)) return false;
    if (flood_from_head(p.voxels) != p.voxels) return false;
    for (std::size_t i = 0; i < p.components.size(); ++i) {
        if (!is_surface(p, p.components[i].pos)) return false;
        if (i > 0 && !(p.components[i - 1].pos < p.components[i].pos)) return false;
    }
    return true;
}

} // namespace

TEST_CASE("decode: constant material thresholds") {
    BodyPlan empty = decode(constant_genome(-1.0, 1.0, 0.0));
    CHECK(std::count(empty.voxels.begin(), empty.voxels.end(), 1) == 0);
    CHECK(empty.components.empty());

    BodyPlan full = decode(constant_genome(1.0, -1.0, 0.0));
    CHECK(std::count(full.voxels.begin(), full.voxels.end(), 1) == kCells);
    CHECK(full.components.empty());
}

TEST_CASE("decode: components only on surface voxels, capped") {
    BodyPlan full = decode(constant_genome(1.0, 1.0, 0.0));
    CHECK(full.components.size() == 12u);
    for (const auto &c : full.components) CHECK(is_surface(full, c.pos));

    BodyPlan uncapped = decode(constant_genome(1.0, 1.0, 0.0), DecodeParams{10000});
    // surface of a full cube: 11^3 - 9^3
    CHECK(uncapped.components.size() == static_cast<std::size_t>(kCells - 9 * 9 * 9));
}

TEST_CASE("decode: type bins at their edges") {
    // linear type output over [-1, 1]: bins [-1,-0.5) [-0.5,0) [0,0.5) [0.5,1]
    const std::vector<std::pair<double, ComponentType>> cases = {
        {-1.0, ComponentType::wheel},   {-0.5000001, ComponentType::wheel}, {-0.5, ComponentType::leg},
        {-1e-9, ComponentType::leg},    {0.0, ComponentType::sensor},       {0.4999999, ComponentType::sensor},
        {0.5, ComponentType::caster},   {1.0, ComponentType::caster},       {3.0, ComponentType::caster},
        {-7.0, ComponentType::wheel}};
    for (const auto &[v, t] : cases) {
        INFO("value " << v);
        CHECK(quantize_type(v, Activation::linear) == t);
    }
    // sigmoid range [0, 1]
    CHECK(quantize_type(0.1, Activation::sigmoid) == ComponentType::wheel);
    CHECK(quantize_type(0.3, Activation::sigmoid) == ComponentType::leg);
    CHECK(quantize_type(0.6, Activation::sigmoid) == ComponentType::sensor);
    CHECK(quantize_type(0.9, Activation::sigmoid) == ComponentType::caster);

    BodyPlan p = decode(constant_genome(1.0, 1.0, 0.75));
    REQUIRE_FALSE(p.components.empty());
    for (const auto &c : p.components) CHECK(c.type == ComponentType::caster);
}

TEST_CASE("repair: disconnected blob is removed") {
    BodyPlan raw = with_voxels({{5, 5, 5}, {5, 5, 6}, {6, 6, 7}, {0, 0, 0}, {0, 1, 0}, {1, 1, 1}});
    raw.components.push_back({{0, 0, 0}, ComponentType::wheel});
    raw.components.push_back({{6, 6, 7}, ComponentType::sensor});
    BodyPlan fixed = repair(raw);
    CHECK(fixed.voxels == flood_from_head(raw.voxels));
    CHECK_FALSE(fixed.occupied({0, 0, 0}));
    CHECK(fixed.occupied({6, 6, 7}));
    REQUIRE(fixed.components.size() == 1u);
    CHECK(fixed.components[0].pos == GridPos{6, 6, 7});
}

TEST_CASE("repair: empty grid keeps the head only") {
    BodyPlan fixed = repair(BodyPlan{});
    CHECK(std::count(fixed.voxels.begin(), fixed.voxels.end(), 1) == 1);
    CHECK(fixed.occupied(BodyPlan::kHead));
    CHECK(fixed.components.empty());
}

TEST_CASE("repair: connected plan is unchanged and repair is idempotent") {
    BodyPlan raw = with_voxels({{5, 5, 5}, {4, 5, 5}, {4, 4, 4}});
    raw.components.push_back({{4, 4, 4}, ComponentType::wheel});
    raw.components.push_back({{5, 5, 5}, ComponentType::sensor});
    CHECK(repair(raw) == raw);

    Rng rng(31);
    for (int trial = 0; trial < 200; ++trial) {
        BodyPlan r;
        for (auto &v : r.voxels) v = bernoulli(rng, 0.15);
        for (int c = 0; c < 20; ++c) {
            GridPos p = cell_pos(std::uniform_int_distribution<int>(0, kCells - 1)(rng));
            r.components.push_back({p, static_cast<ComponentType>(1 + c % 4)});
        }
        BodyPlan once = repair(r);
        CHECK(repair(once) == once);
        CHECK(once.voxels == flood_from_head([&] {
                  auto occ = r.voxels;
                  occ[cell_index(BodyPlan::kHead)] = 1;
                  return occ;
              }()));
        CHECK(plan_invariants_hold(once));
    }
}

TEST_CASE("viability") {
    BodyPlan p = with_voxels({{5, 5, 5}});
    auto with = [&](std::vector<ComponentType> types) {
        BodyPlan q = p;
        int z = 0;
        for (auto t : types) q.components.push_back({{0, 0, z++}, t});
        return q;
    };
    using T = ComponentType;
    CHECK(is_viable(with({T::wheel, T::wheel, T::sensor})));
    CHECK_FALSE(is_viable(with({T::wheel, T::wheel, T::wheel, T::wheel})));
    CHECK_FALSE(is_viable(with({T::sensor, T::sensor, T::caster, T::caster, T::caster})));
    CHECK(is_viable(with({T::leg, T::sensor})));
}

TEST_CASE("decode-repair pipeline keeps plan invariants on random genomes") {
    Rng rng(77);
    InnovationCounter ids;
    MutationParams mp;
    mp.add_node_rate = 0.3;
    int viable = 0;
    for (int i = 0; i < 10000; ++i) {
        CppnGenome g = random_genome(rng);
        if (i % 4 == 0) g = mutate(g, rng, mp, ids);
        BodyPlan plan = repair(decode(g));
        if (!is_viable(plan)) continue;
        ++viable;
        REQUIRE(plan_invariants_hold(plan));
    }
    CHECK(viable > 100);
}

TEST_CASE("morph descriptor") {
    BodyPlan p = with_voxels({{5, 5, 5}});
    CHECK(morph_descriptor(p) == MorphDescriptor{});
    p.components.push_back({{0, 0, 0}, ComponentType::wheel});
    auto d = morph_descriptor(p);
    CHECK(d.cells[0] == 1);
    CHECK(std::count_if(d.cells.begin(), d.cells.end(), [](auto v) { return v != 0; }) == 1);

    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        BodyPlan plan = repair(decode(random_genome(rng)));
        auto desc = morph_descriptor(plan);
        std::size_t nonzero = std::count_if(desc.cells.begin(), desc.cells.end(), [](auto v) { return v != 0; });
        CHECK(nonzero == plan.components.size());
    }
}

TEST_CASE("morph distance examples") {
    using T = ComponentType;
    auto a = descriptor_with({{{1, 1, 1}, T::sensor}});
    auto b = descriptor_with({{{1, 1, 1}, T::wheel}});
    CHECK(morph_distance(a, a) == 0.0);
    CHECK(morph_distance(a, b) == 11.0);
    CHECK(morph_distance(descriptor_with({{{0, 0, 0}, T::wheel}}), descriptor_with({{{2, 0, 0}, T::wheel}})) == 2.0);
    // unpaired component
    CHECK(morph_distance(descriptor_with({{{0, 0, 0}, T::wheel}}), MorphDescriptor{}) == 11.0);
    // greedy pairing processes a's components lexicographically
    auto c = descriptor_with({{{0, 0, 0}, T::leg}, {{0, 0, 3}, T::leg}});
    auto d = descriptor_with({{{0, 0, 2}, T::leg}, {{0, 0, 6}, T::leg}});
    // c->d: (0,0,0)->(0,0,2)=2, (0,0,3)->(0,0,6)=3; d->c: (0,0,2)->(0,0,3)=1, (0,0,6)->(0,0,0)=6
    CHECK(morph_distance(c, d) == 7.0);

    MorphDescriptor bad;
    bad.cells.resize(10);
    CHECK_THROWS_AS(morph_distance(a, bad), DescriptorShapeError);
}

TEST_CASE("morph distance properties on random pairs") {
    Rng rng(101);
    auto random_desc = [&] {
        MorphDescriptor d;
        const int n = std::uniform_int_distribution<int>(0, 12)(rng);
        for (int i = 0; i < n; ++i)
            d.cells[std::uniform_int_distribution<int>(0, kCells - 1)(rng)] =
                static_cast<std::uint8_t>(std::uniform_int_distribution<int>(1, 4)(rng));
        return d;
    };
    for (int i = 0; i < 2000; ++i) {
        auto a = random_desc(), b = random_desc();
        CHECK(morph_distance(a, a) == 0.0);
        CHECK(morph_distance(a, b) >= 0.0);
        CHECK(morph_distance(a, b) == morph_distance(b, a));
    }
}

TEST_CASE("body-plan novelty") {
    using T = ComponentType;
    BodyPlan plan = with_voxels({{5, 5, 5}});
    plan.components.push_back({{0, 0, 0}, T::wheel});
    const auto self = morph_descriptor(plan);
    std::vector<MorphDescriptor> same(4, self);
    CHECK(bodyplan_novelty(plan, same, {}, 3) == 0.0);

    std::vector<MorphDescriptor> refs = {descriptor_with({{{2, 0, 0}, T::wheel}}),  // distance 2
                                         descriptor_with({{{0, 0, 0}, T::sensor}})}; // distance 11
    REQUIRE(morph_distance(self, refs[0]) == 2.0);
    REQUIRE(morph_distance(self, refs[1]) == 11.0);
    CHECK(bodyplan_novelty(plan, refs, {}, 1) == 2.0);
    CHECK(bodyplan_novelty(plan, refs, {}, 2) == 6.5);
    CHECK(bodyplan_novelty(plan, {refs.begin(), 1}, {refs.begin() + 1, 1}, 2) == 6.5);
    CHECK(bodyplan_novelty(plan, refs, {}, 15) == 6.5); // fewer than k: all
    CHECK_THROWS_AS(bodyplan_novelty(plan, {}, {}, 3), NoveltyError);
}

TEST_CASE("body-plan JSON round trip") {
    Rng rng(6);
    BodyPlan plan = repair(decode(random_genome(rng)));
    nlohmann::json j = plan;
    CHECK(j.get<BodyPlan>() == plan);
}
