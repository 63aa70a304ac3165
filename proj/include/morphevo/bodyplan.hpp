#pragma once

// Body-plans: an 11x11x11 voxel chassis with typed components attached to its
// surface, decoded from a CPPN. Also the morphological descriptor, its distance
// and the k-nearest-neighbour novelty score built on it.

#include <algorithm>
#include <array>
#include <compare>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include <json.hpp>

#include "common.hpp"
#include "cppn.hpp"

namespace morphevo {

inline constexpr int kGrid = 11;
inline constexpr int kCells = kGrid * kGrid * kGrid;

enum class ComponentType : std::uint8_t { wheel = 1, leg = 2, sensor = 3, caster = 4 };

struct GridPos {
    int x = 0, y = 0, z = 0;
    auto operator<=>(const GridPos &) const = default;
};

inline constexpr int cell_index(const GridPos &p) { return (p.x * kGrid + p.y) * kGrid + p.z; }
inline constexpr GridPos cell_pos(int i) { return {i / (kGrid * kGrid), (i / kGrid) % kGrid, i % kGrid}; }
inline constexpr bool in_grid(const GridPos &p) {
    return p.x >= 0 && p.x < kGrid && p.y >= 0 && p.y < kGrid && p.z >= 0 && p.z < kGrid;
}
inline int manhattan(const GridPos &a, const GridPos &b) {
    return std::abs(a.x - b.x) + std::abs(a.y - b.y) + std::abs(a.z - b.z);
}

struct Component {
    GridPos pos;
    ComponentType type = ComponentType::sensor;
    friend bool operator==(const Component &, const Component &) = default;
};

struct BodyPlan {
    static constexpr GridPos kHead{5, 5, 5};

    std::vector<std::uint8_t> voxels = std::vector<std::uint8_t>(kCells, 0);
    std::vector<Component> components; // sorted by position, one per position

    bool occupied(const GridPos &p) const { return in_grid(p) && voxels[cell_index(p)] != 0; }

    int count(ComponentType t) const {
        return static_cast<int>(std::count_if(components.begin(), components.end(),
                                              [t](const Component &c) { return c.type == t; }));
    }
    int sensors() const { return count(ComponentType::sensor); }
    int actuators() const { return count(ComponentType::wheel) + count(ComponentType::leg); }

    friend bool operator==(const BodyPlan &, const BodyPlan &) = default;
};

inline constexpr std::array<GridPos, 6> kFaceNeighbours = {
    GridPos{1, 0, 0}, GridPos{-1, 0, 0}, GridPos{0, 1, 0}, GridPos{0, -1, 0}, GridPos{0, 0, 1}, GridPos{0, 0, -1}};

/// Occupied voxel with at least one empty (or out-of-grid) face neighbour.
inline bool is_surface(const BodyPlan &plan, const GridPos &p) {
    if (!plan.occupied(p)) return false;
    for (const auto &d : kFaceNeighbours)
        if (!plan.occupied({p.x + d.x, p.y + d.y, p.z + d.z})) return true;
    return false;
}

/// Maps a component-type output to a type code through four equal-width bins
/// over the output activation's range.
inline ComponentType quantize_type(double value, Activation act) {
    auto [lo, hi] = activation_range(act);
    double t = std::clamp((value - lo) / (hi - lo), 0.0, 1.0);
    int bin = std::min(3, static_cast<int>(std::floor(4.0 * t)));
    return static_cast<ComponentType>(bin + 1);
}

struct DecodeParams {
    int max_components = 12;
};

inline double grid_coord(int i) { return 2.0 * i / (kGrid - 1) - 1.0; }

inline BodyPlan decode(const CppnGenome &genome, const DecodeParams &params = {}) {
    CppnNetwork net(genome);
    const Activation type_act = genome.find_node(CppnGenome::kTypeOut)->activation;
    BodyPlan plan;
    std::vector<double> presence(kCells), type_value(kCells);
    for (int i = 0; i < kCells; ++i) {
        auto p = cell_pos(i);
        auto out = net.query({grid_coord(p.x), grid_coord(p.y), grid_coord(p.z)});
        plan.voxels[i] = out[0] > 0.0 ? 1 : 0;
        presence[i] = out[1];
        type_value[i] = out[2];
    }
    std::vector<int> sites;
    for (int i = 0; i < kCells; ++i)
        if (presence[i] > 0.0 && is_surface(plan, cell_pos(i))) sites.push_back(i);
    // strongest presence first, ties by position
    std::stable_sort(sites.begin(), sites.end(), [&](int a, int b) { return presence[a] > presence[b]; });
    if (static_cast<int>(sites.size()) > params.max_components) sites.resize(params.max_components);
    std::sort(sites.begin(), sites.end());
    for (int i : sites) plan.components.push_back({cell_pos(i), quantize_type(type_value[i], type_act)});
    return plan;
}

/// Keeps the 26-connected chassis containing the head and the components still
/// sitting on its surface.
inline BodyPlan repair(const BodyPlan &raw) {
    BodyPlan plan;
    std::vector<std::uint8_t> &keep = plan.voxels;
    std::vector<std::uint8_t> occ = raw.voxels;
    occ[cell_index(BodyPlan::kHead)] = 1;
    std::vector<int> stack{cell_index(BodyPlan::kHead)};
    keep[stack.back()] = 1;
    while (!stack.empty()) {
        auto p = cell_pos(stack.back());
        stack.pop_back();
        for (int dx = -1; dx <= 1; ++dx)
            for (int dy = -1; dy <= 1; ++dy)
                for (int dz = -1; dz <= 1; ++dz) {
                    GridPos q{p.x + dx, p.y + dy, p.z + dz};
                    if (!in_grid(q)) continue;
                    int qi = cell_index(q);
                    if (occ[qi] && !keep[qi]) {
                        keep[qi] = 1;
                        stack.push_back(qi);
                    }
                }
    }
    std::vector<Component> comps = raw.components;
    std::sort(comps.begin(), comps.end(), [](const Component &a, const Component &b) { return a.pos < b.pos; });
    for (const auto &c : comps) {
        if (!is_surface(plan, c.pos)) continue;
        if (!plan.components.empty() && plan.components.back().pos == c.pos) continue;
        plan.components.push_back(c);
    }
    return plan;
}

/// A robot needs at least one sensor and one actuator (wheel or leg). Casters
/// count as neither.
inline bool is_viable(const BodyPlan &plan) { return plan.sensors() >= 1 && plan.actuators() >= 1; }

struct ChassisExtent {
    int width = 0, depth = 0, height = 0; // x, y, z bounding-box sizes in voxels
};

inline ChassisExtent chassis_extent(const BodyPlan &plan) {
    GridPos lo{kGrid, kGrid, kGrid}, hi{-1, -1, -1};
    for (int i = 0; i < kCells; ++i) {
        if (!plan.voxels[i]) continue;
        auto p = cell_pos(i);
        lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
        hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
    }
    if (hi.x < 0) return {};
    return {hi.x - lo.x + 1, hi.y - lo.y + 1, hi.z - lo.z + 1};
}

struct MorphDescriptor {
    int dim = kGrid;
    std::vector<std::uint8_t> cells = std::vector<std::uint8_t>(kCells, 0);
    friend bool operator==(const MorphDescriptor &, const MorphDescriptor &) = default;
};

inline MorphDescriptor morph_descriptor(const BodyPlan &plan) {
    MorphDescriptor d;
    for (const auto &c : plan.components) d.cells[cell_index(c.pos)] = static_cast<std::uint8_t>(c.type);
    return d;
}

namespace detail {

inline void check_shape(const MorphDescriptor &d) {
    if (d.dim != kGrid || d.cells.size() != static_cast<std::size_t>(kCells))
        throw DescriptorShapeError("expected an 11^3 descriptor");
}

struct Placed {
    int index;
    std::uint8_t type;
};

inline std::vector<Placed> placed(const MorphDescriptor &d) {
    std::vector<Placed> out;
    for (int i = 0; i < kCells; ++i)
        if (d.cells[i]) out.push_back({i, d.cells[i]});
    return out;
}

inline double directed_morph_distance(const std::vector<Placed> &a, const std::vector<Placed> &b,
                                      const MorphDescriptor &da, const MorphDescriptor &db) {
    constexpr double kPenalty = 11.0;
    double dist = 0.0;
    std::vector<Placed> ra, rb;
    for (const auto &c : a) {
        auto other = db.cells[c.index];
        if (other == 0) ra.push_back(c);
        else if (other != c.type) dist += kPenalty;
    }
    for (const auto &c : b)
        if (da.cells[c.index] == 0) rb.push_back(c);
    std::vector<bool> used(rb.size(), false);
    for (const auto &c : ra) {
        auto pa = cell_pos(c.index);
        int best = -1, best_d = std::numeric_limits<int>::max();
        for (std::size_t j = 0; j < rb.size(); ++j) {
            if (used[j] || rb[j].type != c.type) continue;
            int md = manhattan(pa, cell_pos(rb[j].index));
            if (md < best_d) {
                best_d = md;
                best = static_cast<int>(j);
            }
        }
        if (best >= 0) {
            used[best] = true;
            dist += best_d;
        } else {
            dist += kPenalty;
        }
    }
    for (bool u : used)
        if (!u) dist += kPenalty;
    return dist;
}

} // namespace detail

/// Component-set distance: same position with different type costs 11, the
/// remaining components are greedily paired with the nearest same-type
/// component of the other plan (Manhattan), leftovers cost 11 each. Taken in
/// both directions and maximised so the result is symmetric.
inline double morph_distance(const MorphDescriptor &a, const MorphDescriptor &b) {
    detail::check_shape(a);
    detail::check_shape(b);
    auto pa = detail::placed(a), pb = detail::placed(b);
    return std::max(detail::directed_morph_distance(pa, pb, a, b), detail::directed_morph_distance(pb, pa, b, a));
}

/// Mean of the k smallest values (all of them when fewer than k).
inline double knn_mean(std::vector<double> distances, int k) {
    if (k < 1) throw NoveltyError("k must be >= 1");
    if (distances.empty()) throw NoveltyError("empty reference set");
    std::sort(distances.begin(), distances.end());
    const std::size_t n = std::min(distances.size(), static_cast<std::size_t>(k));
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += distances[i];
    return sum / static_cast<double>(n);
}

inline double descriptor_novelty(const MorphDescriptor &d, std::span<const MorphDescriptor> pool,
                                 std::span<const MorphDescriptor> archive, int k) {
    std::vector<double> dist;
    dist.reserve(pool.size() + archive.size());
    for (const auto &r : pool) dist.push_back(morph_distance(d, r));
    for (const auto &r : archive) dist.push_back(morph_distance(d, r));
    return knn_mean(std::move(dist), k);
}

inline double bodyplan_novelty(const BodyPlan &plan, std::span<const MorphDescriptor> pool,
                               std::span<const MorphDescriptor> archive, int k) {
    return descriptor_novelty(morph_descriptor(plan), pool, archive, k);
}

inline void to_json(nlohmann::json &j, const BodyPlan &p) {
    auto comps = nlohmann::json::array();
    for (const auto &c : p.components) comps.push_back({c.pos.x, c.pos.y, c.pos.z, static_cast<int>(c.type)});
    j = {{"voxels", p.voxels}, {"components", comps}};
}

inline void from_json(const nlohmann::json &j, BodyPlan &p) {
    p.voxels = j.at("voxels").get<std::vector<std::uint8_t>>();
    if (p.voxels.size() != static_cast<std::size_t>(kCells)) throw CorruptRunError("voxel array size");
    p.components.clear();
    for (const auto &c : j.at("components"))
        p.components.push_back({{c.at(0).get<int>(), c.at(1).get<int>(), c.at(2).get<int>()},
                                static_cast<ComponentType>(c.at(3).get<int>())});
}

} // namespace morphevo
