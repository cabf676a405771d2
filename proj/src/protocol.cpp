#include "mltm/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "mltm/errors.hpp"

namespace mltm {

int layer_quota(const ProtocolSpec& spec, int m) {
    switch (spec.kind) {
        case ProtocolKind::Or:
            return 1;
        case ProtocolKind::And:
            return m;
        case ProtocolKind::Threshold: {
            int a = static_cast<int>(std::ceil(spec.delta * m - 1e-9));
            return std::clamp(a, 1, m);
        }
    }
    return 1;  // unreachable
}

ProtocolSequence ProtocolSequence::uniform(int n, ProtocolKind kind) {
    ProtocolSequence seq;
    seq.agents.assign(n, {kind, 0.0});
    return seq;
}

ProtocolSequence ProtocolSequence::from_mask(int n, uint64_t and_mask) {
    ProtocolSequence seq;
    seq.agents.reserve(n);
    for (int i = 0; i < n; ++i)
        seq.agents.push_back((and_mask >> i) & 1 ? ProtocolSpec::all_layers()
                                                 : ProtocolSpec::any_layer());
    return seq;
}

ProtocolSequence ProtocolSequence::from_json(const nlohmann::json& root, int n) {
    // Accept the bare array or a {"protocols": [...]} document.
    const nlohmann::json& doc =
        root.is_object() && root.contains("protocols") ? root.at("protocols") : root;
    if (!doc.is_array())
        throw ValidationError("protocol document must be a JSON array or {\"protocols\": [...]}");
    if (static_cast<int>(doc.size()) != n)
        throw ValidationError("protocol array has " + std::to_string(doc.size()) +
                              " entries, expected n = " + std::to_string(n));
    ProtocolSequence seq;
    seq.agents.reserve(n);
    for (const auto& v : doc) {
        if (v.is_string()) {
            const std::string s = v.get<std::string>();
            if (s == "OR")
                seq.agents.push_back(ProtocolSpec::any_layer());
            else if (s == "AND")
                seq.agents.push_back(ProtocolSpec::all_layers());
            else
                throw ValidationError("protocol entries must be \"OR\", \"AND\", or a number: \"" +
                                      s + "\"");
        } else if (v.is_number()) {
            double d = v.get<double>();
            if (!std::isfinite(d) || d <= 0.0 || d > 1.0)
                throw ValidationError("numeric protocol thresholds must lie in (0, 1]");
            seq.agents.push_back(ProtocolSpec::threshold(d));
        } else {
            throw ValidationError("protocol entries must be \"OR\", \"AND\", or a number");
        }
    }
    return seq;
}

ProtocolSequence ProtocolSequence::from_file(const std::string& path, int n) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path + ": " + std::string(e.what()));
    }
    return from_json(doc, n);
}

nlohmann::json ProtocolSequence::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& p : agents) {
        switch (p.kind) {
            case ProtocolKind::Or: arr.push_back("OR"); break;
            case ProtocolKind::And: arr.push_back("AND"); break;
            case ProtocolKind::Threshold: arr.push_back(p.delta); break;
        }
    }
    return arr;
}

std::vector<int> ProtocolSequence::quotas(int m) const {
    std::vector<int> q;
    q.reserve(agents.size());
    for (const auto& p : agents) q.push_back(layer_quota(p, m));
    return q;
}

bool ProtocolSequence::is_or_and(int m) const {
    for (const auto& p : agents) {
        int a = layer_quota(p, m);
        if (a != 1 && a != m) return false;
    }
    return true;
}

}  // namespace mltm
