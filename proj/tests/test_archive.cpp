#include <catch2/catch_amalgamated.hpp>

#include <map>

#include "morphevo/archive.hpp"

using namespace morphevo;

namespace {

BodyPlan plan_with(std::vector<std::pair<GridPos, ComponentType>> comps) {
    BodyPlan p;
    p.voxels[cell_index(BodyPlan::kHead)] = 1;
    for (const auto &[pos, t] : comps) p.components.push_back({pos, t});
    return p;
}

std::vector<double> weights_for(const ArchiveKey &k, double fill) {
    return std::vector<double>(weights_dim(k.spec()), fill);
}

} // namespace

TEST_CASE("archive key counts wheels, legs and sensors") {
    using T = ComponentType;
    auto a = plan_with({{{0, 0, 0}, T::wheel}, {{0, 0, 1}, T::wheel}, {{0, 0, 2}, T::sensor}, {{0, 0, 3}, T::caster}});
    CHECK(archive_key(a) == ArchiveKey{2, 0, 1});
    auto b = plan_with({{{1, 0, 0}, T::wheel}, {{1, 0, 1}, T::leg}, {{1, 0, 2}, T::leg}, {{1, 0, 3}, T::sensor},
                        {{1, 0, 4}, T::sensor}});
    CHECK(archive_key(b) == ArchiveKey{1, 2, 2});
    auto c = plan_with({{{9, 9, 9}, T::wheel}, {{3, 3, 3}, T::wheel}, {{4, 4, 4}, T::sensor}});
    CHECK(archive_key(c) == archive_key(a));
}

TEST_CASE("update stores only strict improvements") {
    ControllerArchive ar;
    const ArchiveKey k{2, 0, 1};
    CHECK(ar.update(k, weights_for(k, 1.0), 0.3));
    CHECK_FALSE(ar.update(k, weights_for(k, 2.0), 0.25));
    CHECK(ar.lookup(k)->performance == 0.3);
    CHECK(ar.lookup(k)->weights == weights_for(k, 1.0));
    CHECK_FALSE(ar.update(k, weights_for(k, 3.0), 0.3)); // first wins ties
    CHECK(ar.update(k, weights_for(k, 4.0), 0.31));
    CHECK(ar.lookup(k)->weights == weights_for(k, 4.0));
    CHECK(ar.lookup(k)->spec == k.spec());
    CHECK_FALSE(ar.lookup({1, 1, 1}).has_value());
    CHECK_THROWS_AS(ar.update(k, std::vector<double>(3), 0.9), InterfaceError);
}

TEST_CASE("per-key performance follows the running max") {
    Rng rng(44);
    const std::vector<ArchiveKey> keys = {{1, 0, 1}, {2, 0, 1}, {0, 1, 2}, {3, 2, 1}};
    for (int c = 0; c < 10000; ++c) {
        ControllerArchive ar;
        std::map<ArchiveKey, std::pair<double, double>> oracle; // key -> (max, weight tag of first max)
        const int n = std::uniform_int_distribution<int>(1, 12)(rng);
        for (int u = 0; u < n; ++u) {
            const auto &k = keys[std::uniform_int_distribution<std::size_t>(0, keys.size() - 1)(rng)];
            // coarse values so ties happen
            const double perf = std::uniform_int_distribution<int>(1, 8)(rng) / 64.0;
            const double tag = u;
            const double previous = ar.lookup(k) ? ar.lookup(k)->performance : -1.0;
            const bool stored = ar.update(k, weights_for(k, tag), perf);
            REQUIRE(ar.lookup(k)->performance >= previous);
            auto it = oracle.find(k);
            const bool expect = it == oracle.end() || perf > it->second.first;
            REQUIRE(stored == expect);
            if (expect) oracle[k] = {perf, tag};
        }
        for (const auto &[k, v] : oracle) {
            REQUIRE(ar.lookup(k)->performance == v.first);
            REQUIRE(ar.lookup(k)->weights.front() == v.second);
        }
    }
}

TEST_CASE("archive JSON snapshot") {
    ControllerArchive ar;
    const ArchiveKey k{1, 0, 2};
    ar.update(k, weights_for(k, 0.5), 0.2);
    nlohmann::json j = ar;
    REQUIRE(j.size() == 1u);
    CHECK(j[0]["sensors"] == 2);
    CHECK(j[0]["weights"].size() == weights_dim(k.spec()));
}
