#pragma once

#include <compare>
#include <map>
#include <optional>
#include <vector>

#include <json.hpp>

#include "bodyplan.hpp"
#include "common.hpp"
#include "controller.hpp"

namespace morphevo {

/// Component-count signature. Casters have no controller I/O and are left out.
struct ArchiveKey {
    int wheels = 0, legs = 0, sensors = 0;
    auto operator<=>(const ArchiveKey &) const = default;

    ElmanSpec spec() const { return {sensors, wheels + legs}; }
};

inline ArchiveKey archive_key(const BodyPlan &plan) {
    return {plan.count(ComponentType::wheel), plan.count(ComponentType::leg), plan.count(ComponentType::sensor)};
}

struct ArchiveEntry {
    std::vector<double> weights;
    double performance = 0.0;
    ElmanSpec spec;
};

/// Best controller found so far for each component signature.
class ControllerArchive {
public:
    /// Stores when the key is new or `performance` is strictly better.
    bool update(const ArchiveKey &key, const std::vector<double> &weights, double performance) {
        const ElmanSpec spec = key.spec();
        if (weights.size() != weights_dim(spec)) throw InterfaceError("archive update: weights do not match key");
        auto it = entries_.find(key);
        if (it != entries_.end() && !(performance > it->second.performance)) return false;
        entries_[key] = {weights, performance, spec};
        return true;
    }

    std::optional<ArchiveEntry> lookup(const ArchiveKey &key) const {
        auto it = entries_.find(key);
        if (it == entries_.end()) return std::nullopt;
        return it->second;
    }

    std::size_t size() const { return entries_.size(); }
    const std::map<ArchiveKey, ArchiveEntry> &entries() const { return entries_; }

private:
    std::map<ArchiveKey, ArchiveEntry> entries_;
};

inline void to_json(nlohmann::json &j, const ControllerArchive &a) {
    j = nlohmann::json::array();
    for (const auto &[k, e] : a.entries())
        j.push_back({{"wheels", k.wheels},
                     {"legs", k.legs},
                     {"sensors", k.sensors},
                     {"performance", e.performance},
                     {"n_in", e.spec.n_in},
                     {"n_out", e.spec.n_out},
                     {"weights", e.weights}});
}

} // namespace morphevo
