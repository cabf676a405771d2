#include "mltm/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <queue>
#include <sstream>

#include "mltm/errors.hpp"

namespace mltm {

namespace {

constexpr double kWeightSumTol = 1e-9;

[[noreturn]] void fail(const std::string& msg) { throw ValidationError(msg); }

nlohmann::json parse_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        fail(path + ": " + e.what());
    }
    return doc;
}

int require_int(const nlohmann::json& doc, const char* key, int min_value) {
    if (!doc.contains(key) || !doc[key].is_number_integer())
        fail(std::string("missing or non-integer \"") + key + "\"");
    int v = doc[key].get<int>();
    if (v < min_value)
        fail(std::string("\"") + key + "\" must be at least " + std::to_string(min_value));
    return v;
}

}  // namespace

int MultiplexNetwork::nonempty_layers(int agent) const {
    int count = 0;
    for (int k = 0; k < m; ++k)
        if (!out[k][agent].empty()) ++count;
    return count;
}

MultiplexNetwork load_network(const nlohmann::json& doc) {
    if (!doc.is_object()) fail("network document must be a JSON object");
    MultiplexNetwork net;
    net.n = require_int(doc, "n", 1);
    net.m = require_int(doc, "m", 1);
    if (!doc.contains("layers") || !doc["layers"].is_array())
        fail("missing \"layers\" array");
    if (static_cast<int>(doc["layers"].size()) != net.m)
        fail("\"layers\" has " + std::to_string(doc["layers"].size()) + " entries, expected m = " +
             std::to_string(net.m));

    net.out.assign(net.m, std::vector<std::vector<Edge>>(net.n));
    // weight presence per (layer, agent): mixing weighted and unweighted
    // edges in one neighborhood has no sensible normalization, so reject it.
    std::vector<std::vector<int8_t>> weighted(net.m, std::vector<int8_t>(net.n, -1));

    for (int k = 0; k < net.m; ++k) {
        const auto& layer = doc["layers"][k];
        std::string where = "layer " + std::to_string(k + 1);
        if (!layer.is_object() || !layer.contains("edges") || !layer["edges"].is_array())
            fail(where + ": expected an object with an \"edges\" array");
        if (layer.contains("name")) {
            if (!layer["name"].is_string()) fail(where + ": \"name\" must be a string");
            net.layer_names.resize(net.m);
            net.layer_names[k] = layer["name"].get<std::string>();
        }
        for (const auto& e : layer["edges"]) {
            if (!e.is_object() || !e.contains("from") || !e.contains("to"))
                fail(where + ": every edge needs \"from\" and \"to\"");
            if (!e["from"].is_number_integer() || !e["to"].is_number_integer())
                fail(where + ": edge endpoints must be integers");
            int from = e["from"].get<int>(), to = e["to"].get<int>();
            if (from < 1 || from > net.n || to < 1 || to > net.n)
                fail(where + ": edge (" + std::to_string(from) + "," + std::to_string(to) +
                     ") out of range 1.." + std::to_string(net.n));
            if (from == to)
                fail(where + ": agent " + std::to_string(from) + " observes itself");
            std::optional<double> w;
            if (e.contains("weight")) {
                if (!e["weight"].is_number()) fail(where + ": \"weight\" must be a number");
                w = e["weight"].get<double>();
                if (!std::isfinite(*w) || *w <= 0.0)
                    fail(where + ": edge (" + std::to_string(from) + "," + std::to_string(to) +
                         ") has nonpositive weight");
            }
            int8_t& mode = weighted[k][from - 1];
            int8_t this_mode = w.has_value() ? 1 : 0;
            if (mode == -1)
                mode = this_mode;
            else if (mode != this_mode)
                fail(where + ": agent " + std::to_string(from) +
                     " mixes weighted and unweighted edges");
            auto& list = net.out[k][from - 1];
            for (const auto& prev : list)
                if (prev.to == to - 1)
                    fail(where + ": duplicate edge (" + std::to_string(from) + "," +
                         std::to_string(to) + ")");
            list.push_back({to - 1, w.value_or(0.0)});
        }
    }

    // Normalize each neighborhood: unweighted lists split attention evenly;
    // weighted lists must already sum to 1 within tolerance and are then
    // renormalized exactly so downstream products stay clean.
    for (int k = 0; k < net.m; ++k) {
        for (int i = 0; i < net.n; ++i) {
            auto& list = net.out[k][i];
            if (list.empty()) continue;
            std::sort(list.begin(), list.end(),
                      [](const Edge& a, const Edge& b) { return a.to < b.to; });
            if (weighted[k][i] == 0) {
                double w = 1.0 / static_cast<double>(list.size());
                for (auto& e : list) e.weight = w;
            } else {
                double sum = 0.0;
                for (const auto& e : list) sum += e.weight;
                if (std::fabs(sum - 1.0) > kWeightSumTol) {
                    std::ostringstream msg;
                    msg << "layer " << (k + 1) << ": agent " << (i + 1)
                        << ": attention weights sum to " << sum << ", expected 1";
                    fail(msg.str());
                }
                for (auto& e : list) e.weight /= sum;
            }
        }
    }

    if (doc.contains("names")) {
        if (!doc["names"].is_array() || static_cast<int>(doc["names"].size()) != net.n)
            fail("\"names\" must be an array of n strings");
        for (const auto& s : doc["names"]) {
            if (!s.is_string()) fail("\"names\" must be an array of n strings");
            net.agent_names.push_back(s.get<std::string>());
        }
    }
    return net;
}

MultiplexNetwork load_network_file(const std::string& path) {
    return load_network(parse_json_file(path));
}

nlohmann::json serialize_network(const MultiplexNetwork& net) {
    nlohmann::json doc;
    doc["n"] = net.n;
    doc["m"] = net.m;
    doc["layers"] = nlohmann::json::array();
    for (int k = 0; k < net.m; ++k) {
        nlohmann::json layer;
        if (!net.layer_names.empty() && !net.layer_names[k].empty())
            layer["name"] = net.layer_names[k];
        auto& edges = layer["edges"] = nlohmann::json::array();
        for (int i = 0; i < net.n; ++i)
            for (const auto& e : net.out[k][i])
                edges.push_back({{"from", i + 1}, {"to", e.to + 1}, {"weight", e.weight}});
        doc["layers"].push_back(std::move(layer));
    }
    if (!net.agent_names.empty()) doc["names"] = net.agent_names;
    return doc;
}

MonoplexNetwork project(const MultiplexNetwork& net) {
    MonoplexNetwork g;
    g.n = net.n;
    g.out.assign(net.n, {});
    for (int i = 0; i < net.n; ++i) {
        std::vector<int> targets;
        for (int k = 0; k < net.m; ++k)
            for (const auto& e : net.out[k][i]) targets.push_back(e.to);
        std::sort(targets.begin(), targets.end());
        targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
        if (targets.empty()) continue;
        double w = 1.0 / static_cast<double>(targets.size());
        for (int t : targets) g.out[i].push_back({t, w});
    }
    return g;
}

namespace {

// Parents-first order via Kahn's algorithm on the observation digraph:
// an agent is emitted only after everything it observes. Min-heap makes the
// order canonical. Returns an empty vector on a cycle.
std::vector<int> topo_or_empty(const MonoplexNetwork& g) {
    std::vector<int> pending(g.n);
    std::vector<std::vector<int>> observers(g.n);  // observers[j]: agents with an edge to j
    for (int i = 0; i < g.n; ++i) {
        pending[i] = static_cast<int>(g.out[i].size());
        for (const auto& e : g.out[i]) observers[e.to].push_back(i);
    }
    std::priority_queue<int, std::vector<int>, std::greater<int>> ready;
    for (int i = 0; i < g.n; ++i)
        if (pending[i] == 0) ready.push(i);
    std::vector<int> order;
    order.reserve(g.n);
    while (!ready.empty()) {
        int i = ready.top();
        ready.pop();
        order.push_back(i);
        for (int j : observers[i])
            if (--pending[j] == 0) ready.push(j);
    }
    if (static_cast<int>(order.size()) != g.n) order.clear();
    return order;
}

}  // namespace

bool is_dag(const MonoplexNetwork& g) { return !topo_or_empty(g).empty() || g.n == 0; }

std::vector<int> topological_order(const MonoplexNetwork& g) {
    auto order = topo_or_empty(g);
    if (g.n > 0 && order.empty()) fail("the aggregate projection contains a cycle");
    return order;
}

bool is_polytree(const MonoplexNetwork& g) {
    if (!is_dag(g)) return false;
    // Union-find over the undirected skeleton; a joining edge inside one
    // component closes an undirected cycle.
    std::vector<int> parent(g.n);
    for (int i = 0; i < g.n; ++i) parent[i] = i;
    auto find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (int i = 0; i < g.n; ++i)
        for (const auto& e : g.out[i]) {
            int a = find(i), b = find(e.to);
            if (a == b) return false;
            parent[a] = b;
        }
    return true;
}

std::vector<int> parse_seeds(const nlohmann::json& root, int n) {
    // Accept the bare array or a {"seeds": [...]} document.
    const nlohmann::json& doc =
        root.is_object() && root.contains("seeds") ? root.at("seeds") : root;
    if (!doc.is_array()) fail("seed document must be a JSON array of agent ids");
    std::vector<int> seeds;
    for (const auto& v : doc) {
        if (!v.is_number_integer()) fail("seed ids must be integers");
        int id = v.get<int>();
        if (id < 1 || id > n)
            fail("seed id " + std::to_string(id) + " out of range 1.." + std::to_string(n));
        seeds.push_back(id - 1);
    }
    std::sort(seeds.begin(), seeds.end());
    if (std::adjacent_find(seeds.begin(), seeds.end()) != seeds.end())
        fail("duplicate seed id");
    return seeds;
}

std::vector<int> parse_seeds_file(const std::string& path, int n) {
    return parse_seeds(parse_json_file(path), n);
}

nlohmann::json serialize_seeds(const std::vector<int>& seeds) {
    nlohmann::json arr = nlohmann::json::array();
    for (int s : seeds) arr.push_back(s + 1);
    return arr;
}

}  // namespace mltm
