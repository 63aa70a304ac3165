#pragma once

// Compositional pattern-producing network used as the indirect body encoding.
//
// Node ids 0..3 are the inputs (x, y, z, radial distance), 4..6 the outputs
// (chassis material, component presence, component type). Hidden nodes and
// links created by mutation draw fresh ids from an InnovationCounter owned by
// the evolution coordinator.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "common.hpp"

namespace morphevo {

enum class Activation : std::uint8_t { sigmoid, gaussian, sine, linear, abs };

inline constexpr std::array<Activation, 5> kActivations = {
    Activation::sigmoid, Activation::gaussian, Activation::sine, Activation::linear, Activation::abs};

inline double activate(Activation a, double x) {
    switch (a) {
    case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-x));
    case Activation::gaussian: return std::exp(-x * x);
    case Activation::sine: return std::sin(x);
    case Activation::linear: return x;
    case Activation::abs: return std::fabs(x);
    }
    return x;
}

/// Bounded interval used to quantise an output produced by `a`. Unbounded
/// activations are clamped into the returned interval.
inline std::pair<double, double> activation_range(Activation a) {
    switch (a) {
    case Activation::sigmoid:
    case Activation::gaussian:
    case Activation::abs: return {0.0, 1.0};
    case Activation::sine:
    case Activation::linear: return {-1.0, 1.0};
    }
    return {-1.0, 1.0};
}

inline std::string_view to_string(Activation a) {
    switch (a) {
    case Activation::sigmoid: return "sigmoid";
    case Activation::gaussian: return "gaussian";
    case Activation::sine: return "sine";
    case Activation::linear: return "linear";
    case Activation::abs: return "abs";
    }
    return "?";
}

inline Activation activation_from_string(std::string_view s) {
    for (auto a : kActivations)
        if (to_string(a) == s) return a;
    throw GenomeError("unknown activation '" + std::string(s) + "'");
}

struct CppnNode {
    int id = 0;
    Activation activation = Activation::linear;
    friend bool operator==(const CppnNode &, const CppnNode &) = default;
};

struct CppnLink {
    std::uint64_t innovation = 0;
    int from = 0;
    int to = 0;
    double weight = 0.0;
    bool enabled = true;
    friend bool operator==(const CppnLink &, const CppnLink &) = default;
};

struct CppnGenome {
    static constexpr int kInputs = 4;
    static constexpr int kOutputs = 3;
    static constexpr int kMaterialOut = kInputs + 0;
    static constexpr int kPresenceOut = kInputs + 1;
    static constexpr int kTypeOut = kInputs + 2;
    static constexpr int kFirstHidden = kInputs + kOutputs;

    std::vector<CppnNode> nodes; // sorted by id
    std::vector<CppnLink> links; // sorted by innovation

    static bool is_input(int id) { return id >= 0 && id < kInputs; }
    static bool is_output(int id) { return id >= kInputs && id < kFirstHidden; }

    const CppnNode *find_node(int id) const {
        auto it = std::lower_bound(nodes.begin(), nodes.end(), id,
                                   [](const CppnNode &n, int v) { return n.id < v; });
        return (it != nodes.end() && it->id == id) ? &*it : nullptr;
    }

    friend bool operator==(const CppnGenome &, const CppnGenome &) = default;
};

/// Run-wide id source for structural mutations. Only the coordinator touches it.
class InnovationCounter {
public:
    // Innovations 0..11 are reserved for the initial input->output links.
    static constexpr std::uint64_t kInitialLinks = CppnGenome::kInputs * CppnGenome::kOutputs;

    std::uint64_t next_link() { return next_link_++; }
    int next_node() { return next_node_++; }
    std::uint64_t peek_link() const { return next_link_; }
    int peek_node() const { return next_node_; }

private:
    std::uint64_t next_link_ = kInitialLinks;
    int next_node_ = CppnGenome::kFirstHidden;
};

struct MutationParams {
    double weight_rate = 0.8; // per link
    double weight_sigma = 0.1;
    double add_link_rate = 0.05;
    double add_node_rate = 0.03;
    double toggle_rate = 0.01;
    int max_link_attempts = 20;
};

namespace detail {

// Kahn's algorithm over the given links; returns node ids in topological
// order or nullopt on a cycle. Assumes endpoints exist.
inline std::optional<std::vector<int>> topo_order(const CppnGenome &g, bool enabled_only) {
    std::map<int, int> indeg;
    std::map<int, std::vector<int>> out;
    for (const auto &n : g.nodes) indeg[n.id] = 0;
    for (const auto &l : g.links) {
        if (enabled_only && !l.enabled) continue;
        ++indeg[l.to];
        out[l.from].push_back(l.to);
    }
    std::vector<int> order;
    std::vector<int> ready;
    for (auto &[id, d] : indeg)
        if (d == 0) ready.push_back(id);
    while (!ready.empty()) {
        // smallest id first for a canonical order
        std::sort(ready.begin(), ready.end(), std::greater<>());
        int id = ready.back();
        ready.pop_back();
        order.push_back(id);
        for (int to : out[id])
            if (--indeg[to] == 0) ready.push_back(to);
    }
    if (order.size() != indeg.size()) return std::nullopt;
    return order;
}

inline bool creates_cycle(const CppnGenome &g, int from, int to) {
    // adding from->to closes a cycle iff `from` is reachable from `to`
    if (from == to) return true;
    std::vector<int> stack{to};
    std::set<int> seen;
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        if (v == from) return true;
        if (!seen.insert(v).second) continue;
        for (const auto &l : g.links)
            if (l.from == v) stack.push_back(l.to);
    }
    return false;
}

inline bool has_link(const CppnGenome &g, int from, int to) {
    return std::any_of(g.links.begin(), g.links.end(),
                       [&](const CppnLink &l) { return l.from == from && l.to == to; });
}

} // namespace detail

/// Returns an empty string when `g` is valid, otherwise the first violation.
inline std::string validation_error(const CppnGenome &g) {
    for (int id = 0; id < CppnGenome::kFirstHidden; ++id)
        if (!g.find_node(id)) return "missing input/output node " + std::to_string(id);
    for (std::size_t i = 1; i < g.nodes.size(); ++i)
        if (g.nodes[i - 1].id >= g.nodes[i].id) return "node ids not strictly increasing";
    std::set<std::pair<int, int>> enabled_pairs;
    for (std::size_t i = 0; i < g.links.size(); ++i) {
        const auto &l = g.links[i];
        if (i > 0 && g.links[i - 1].innovation >= l.innovation) return "duplicate or unsorted innovation ids";
        if (!g.find_node(l.from) || !g.find_node(l.to))
            return "dangling link " + std::to_string(l.innovation);
        if (CppnGenome::is_input(l.to)) return "link into input node";
        if (CppnGenome::is_output(l.from)) return "link out of output node";
        if (l.enabled && !enabled_pairs.emplace(l.from, l.to).second) return "duplicate enabled (from,to) pair";
        if (!std::isfinite(l.weight)) return "non-finite weight";
    }
    if (!detail::topo_order(g, true)) return "cycle among enabled links";
    return {};
}

inline bool is_valid(const CppnGenome &g) { return validation_error(g).empty(); }

/// A genome prepared for repeated queries.
class CppnNetwork {
public:
    explicit CppnNetwork(const CppnGenome &g) {
        if (auto err = validation_error(g); !err.empty()) throw GenomeError(err);
        auto order = *detail::topo_order(g, true);
        std::map<int, std::size_t> slot;
        for (std::size_t i = 0; i < order.size(); ++i) slot[order[i]] = i;
        steps_.reserve(order.size());
        for (int id : order) {
            Step s;
            s.activation = g.find_node(id)->activation;
            s.input = CppnGenome::is_input(id) ? id : -1;
            for (const auto &l : g.links)
                if (l.enabled && l.to == id) s.incoming.push_back({slot[l.from], l.weight});
            steps_.push_back(std::move(s));
        }
        for (int o = 0; o < CppnGenome::kOutputs; ++o) outputs_[o] = slot[CppnGenome::kInputs + o];
        values_.resize(steps_.size());
    }

    std::array<double, 3> query(const std::array<double, 3> &coord) {
        const double r = std::sqrt(coord[0] * coord[0] + coord[1] * coord[1] + coord[2] * coord[2]) /
                         std::sqrt(3.0);
        const std::array<double, 4> in = {coord[0], coord[1], coord[2], 2.0 * r - 1.0};
        for (std::size_t i = 0; i < steps_.size(); ++i) {
            const auto &s = steps_[i];
            if (s.input >= 0) {
                values_[i] = in[static_cast<std::size_t>(s.input)];
                continue;
            }
            double sum = 0.0;
            for (const auto &[src, w] : s.incoming) sum += w * values_[src];
            values_[i] = activate(s.activation, sum);
        }
        return {values_[outputs_[0]], values_[outputs_[1]], values_[outputs_[2]]};
    }

private:
    struct Step {
        Activation activation{};
        int input = -1;
        std::vector<std::pair<std::size_t, double>> incoming;
    };
    std::vector<Step> steps_;
    std::array<std::size_t, 3> outputs_{};
    std::vector<double> values_;
};

/// Evaluates the CPPN at a normalised grid coordinate. The radial input is the
/// distance from the grid centre rescaled to [-1, 1].
inline std::array<double, 3> query(const CppnGenome &g, const std::array<double, 3> &coord) {
    for (double c : coord)
        if (!(c >= -1.0 && c <= 1.0)) throw InterfaceError("query coordinate outside [-1,1]");
    CppnNetwork net(g);
    return net.query(coord);
}

/// Fully connected inputs->outputs, weights uniform in [-1,1], no hidden nodes.
inline CppnGenome random_genome(Rng &rng) {
    CppnGenome g;
    for (int i = 0; i < CppnGenome::kInputs; ++i) g.nodes.push_back({i, Activation::linear});
    g.nodes.push_back({CppnGenome::kMaterialOut, Activation::linear});
    g.nodes.push_back({CppnGenome::kPresenceOut, Activation::linear});
    g.nodes.push_back({CppnGenome::kTypeOut, Activation::sine});
    std::uint64_t innov = 0;
    for (int i = 0; i < CppnGenome::kInputs; ++i)
        for (int o = 0; o < CppnGenome::kOutputs; ++o)
            g.links.push_back({innov++, i, CppnGenome::kInputs + o, uniform(rng, -1.0, 1.0), true});
    return g;
}

inline void add_node_split(CppnGenome &g, std::size_t link_index, Activation act, InnovationCounter &ids) {
    CppnLink &old = g.links.at(link_index);
    old.enabled = false;
    const int n = ids.next_node();
    const int from = old.from, to = old.to;
    const double w = old.weight;
    g.nodes.push_back({n, act});
    g.links.push_back({ids.next_link(), from, n, 1.0, true});
    g.links.push_back({ids.next_link(), n, to, w, true});
}

inline CppnGenome mutate(const CppnGenome &parent, Rng &rng, const MutationParams &p, InnovationCounter &ids) {
    CppnGenome g = parent;
    std::normal_distribution<double> gauss(0.0, p.weight_sigma);

    for (auto &l : g.links)
        if (p.weight_rate > 0 && bernoulli(rng, p.weight_rate)) l.weight += gauss(rng);

    if (p.add_link_rate > 0 && bernoulli(rng, p.add_link_rate)) {
        std::vector<int> sources, targets;
        for (const auto &n : g.nodes) {
            if (!CppnGenome::is_output(n.id)) sources.push_back(n.id);
            if (!CppnGenome::is_input(n.id)) targets.push_back(n.id);
        }
        for (int attempt = 0; attempt < p.max_link_attempts; ++attempt) {
            int from = sources[std::uniform_int_distribution<std::size_t>(0, sources.size() - 1)(rng)];
            int to = targets[std::uniform_int_distribution<std::size_t>(0, targets.size() - 1)(rng)];
            if (detail::has_link(g, from, to) || detail::creates_cycle(g, from, to)) continue;
            g.links.push_back({ids.next_link(), from, to, uniform(rng, -1.0, 1.0), true});
            break;
        }
    }

    if (p.add_node_rate > 0 && bernoulli(rng, p.add_node_rate)) {
        std::vector<std::size_t> enabled;
        for (std::size_t i = 0; i < g.links.size(); ++i)
            if (g.links[i].enabled) enabled.push_back(i);
        if (!enabled.empty()) {
            auto pick = enabled[std::uniform_int_distribution<std::size_t>(0, enabled.size() - 1)(rng)];
            auto act = kActivations[std::uniform_int_distribution<std::size_t>(0, kActivations.size() - 1)(rng)];
            add_node_split(g, pick, act, ids);
        }
    }

    if (p.toggle_rate > 0 && bernoulli(rng, p.toggle_rate) && !g.links.empty()) {
        auto &l = g.links[std::uniform_int_distribution<std::size_t>(0, g.links.size() - 1)(rng)];
        l.enabled = !l.enabled;
    }

    // new ids are larger than every existing one, so appending keeps order
    return g;
}

/// Links aligned by innovation id. Matching links take weight and enabled
/// flag from a uniformly chosen parent; disjoint and excess links come from
/// the fitter parent (a on ties).
inline CppnGenome crossover(const CppnGenome &a, const CppnGenome &b, double fitness_a, double fitness_b,
                            Rng &rng) {
    const bool a_fitter = fitness_a >= fitness_b;
    const CppnGenome &fit = a_fitter ? a : b;
    const CppnGenome &other = a_fitter ? b : a;
    CppnGenome child;
    child.nodes = fit.nodes;
    child.links.reserve(fit.links.size());
    auto oit = other.links.begin();
    for (const auto &l : fit.links) {
        while (oit != other.links.end() && oit->innovation < l.innovation) ++oit;
        if (oit != other.links.end() && oit->innovation == l.innovation) {
            const CppnLink &src = bernoulli(rng, 0.5) ? l : *oit;
            child.links.push_back({l.innovation, l.from, l.to, src.weight, src.enabled});
        } else {
            child.links.push_back(l);
        }
    }
    return child;
}

inline void to_json(nlohmann::json &j, const CppnGenome &g) {
    auto nodes = nlohmann::json::array();
    for (const auto &n : g.nodes) nodes.push_back({n.id, std::string(to_string(n.activation))});
    auto links = nlohmann::json::array();
    for (const auto &l : g.links) links.push_back({l.innovation, l.from, l.to, l.weight, l.enabled});
    j = {{"nodes", nodes}, {"links", links}};
}

inline void from_json(const nlohmann::json &j, CppnGenome &g) {
    g = {};
    for (const auto &n : j.at("nodes"))
        g.nodes.push_back({n.at(0).get<int>(), activation_from_string(n.at(1).get<std::string>())});
    for (const auto &l : j.at("links"))
        g.links.push_back({l.at(0).get<std::uint64_t>(), l.at(1).get<int>(), l.at(2).get<int>(),
                           l.at(3).get<double>(), l.at(4).get<bool>()});
}

} // namespace morphevo
