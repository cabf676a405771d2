#pragma once

#include <cstdint>
#include <vector>

#include "json.hpp"

namespace mltm {

// An agent's aggregation protocol: join once the fraction of layers whose
// threshold test fires reaches delta. OR joins on any single layer
// (delta = 1/m), AND demands every layer (delta = 1).
enum class ProtocolKind { Or, And, Threshold };

struct ProtocolSpec {
    ProtocolKind kind = ProtocolKind::Or;
    double delta = 0.0;  // meaningful only for Threshold; must lie in (0, 1]

    static ProtocolSpec any_layer() { return {ProtocolKind::Or, 0.0}; }
    static ProtocolSpec all_layers() { return {ProtocolKind::And, 0.0}; }
    static ProtocolSpec threshold(double delta) { return {ProtocolKind::Threshold, delta}; }
};

// Smallest number of firing layers that satisfies the protocol on an m-layer
// network: the least integer a with delta <= a/m, computed with a small slack
// so that delta values sitting exactly on a grid point (e.g. 2/3 written as
// 0.6666666666666666) do not round up. Clamped to [1, m].
int layer_quota(const ProtocolSpec& spec, int m);

struct ProtocolSequence {
    std::vector<ProtocolSpec> agents;

    int size() const { return static_cast<int>(agents.size()); }

    static ProtocolSequence uniform(int n, ProtocolKind kind);
    // Mask bit i set => agent i uses AND, otherwise OR.
    static ProtocolSequence from_mask(int n, uint64_t and_mask);

    // Document format: array of n entries, each "OR", "AND", or a number in
    // (0, 1]. Throws ValidationError on length or value problems.
    static ProtocolSequence from_json(const nlohmann::json& doc, int n);
    static ProtocolSequence from_file(const std::string& path, int n);
    nlohmann::json to_json() const;

    // Per-agent layer quotas for an m-layer network.
    std::vector<int> quotas(int m) const;

    // True when every agent is pure OR or pure AND under m layers (the
    // regime required by the exact enumeration and Bayes-net backends).
    bool is_or_and(int m) const;
};

}  // namespace mltm
