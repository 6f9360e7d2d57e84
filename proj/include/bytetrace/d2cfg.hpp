#pragma once

#include "bytetrace/backend.hpp"
#include "bytetrace/sources.hpp"

#include <nlohmann/json.hpp>

#include <deque>
#include <exception>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace bytetrace {

struct ExploreConfig {
    /// 0 means unlimited.
    int max_depth = 0;
    bool stop_on_sink = true;
    std::size_t max_nodes = 5000;

    void validate() const
    {
        if (max_nodes == 0) {
            throw BadConfig("max_nodes must be > 0");
        }
        if (max_depth < 0) {
            throw BadConfig("max_depth must be >= 0");
        }
    }
};

using Edge = std::pair<MethodRef, MethodRef>;
using EdgeSet = std::set<std::pair<std::string, std::string>>;

/// Dataflow-aware call graph grown from one sensitive call site.
struct DataflowGraph {
    MethodRef root;
    std::string data_type;
    SensitiveApi root_api;
    std::set<MethodRef> nodes;
    std::set<Edge> edges;
    std::map<MethodRef, SummaryResult> node_summaries;
    std::set<MethodRef> sink_nodes;
    /// Nodes in the order they were discovered (breadth first).
    std::vector<MethodRef> discovery_order;
    bool truncated = false;
    /// Diagnostics such as targets without a body.
    std::vector<std::string> notes;

    std::vector<MethodRef> successors(const MethodRef& m) const
    {
        std::vector<MethodRef> out;
        for (auto it = edges.lower_bound({m, MethodRef{}});
             it != edges.end() && it->first == m; ++it) {
            out.push_back(it->second);
        }
        return out;
    }

    std::size_t out_degree(const MethodRef& m) const
    {
        return successors(m).size();
    }
};

/// Raised when the backend fails mid-exploration. Carries what was built.
class ExplorationFailed : public Error {
public:
    ExplorationFailed(DataflowGraph partial, std::exception_ptr cause,
                      bool backend_unavailable, const std::string& what)
        : Error(what),
          partial_(std::move(partial)),
          cause_(std::move(cause)),
          backend_unavailable_(backend_unavailable)
    {
    }

    const DataflowGraph& partial() const noexcept { return partial_; }
    std::exception_ptr cause() const noexcept { return cause_; }
    bool backend_unavailable() const noexcept { return backend_unavailable_; }

private:
    DataflowGraph partial_;
    std::exception_ptr cause_;
    bool backend_unavailable_;
};

/// Queue-driven exploration from one root site.
///
/// Each dequeued method is summarized once; every validated next method
/// becomes a node (first discovery only) and an edge from the current
/// method. The summary of the discovering caller is passed on as the
/// previous summary. Edges to already-known nodes are still recorded, so
/// cycles terminate without losing edges.
inline DataflowGraph build_graph(const RootSite& site, Summarizer& summarizer,
                                 const ExploreConfig& cfg = {})
{
    cfg.validate();
    const auto& index = summarizer.index();
    if (!index.contains(site.method)) {
        throw Error("root method not in index: " + site.method.str());
    }

    DataflowGraph g;
    g.root = site.method;
    g.data_type = site.api.data_type;
    g.root_api = site.api;
    g.nodes.insert(g.root);
    g.discovery_order.push_back(g.root);

    struct Pending {
        MethodRef method;
        int depth;
        std::string previous_summary;
    };
    std::deque<Pending> queue{{g.root, 0, {}}};

    while (!queue.empty()) {
        auto [method, depth, previous] = std::move(queue.front());
        queue.pop_front();

        const auto* rec = index.find(method);
        if (rec->is_abstract_or_native()) {
            g.notes.push_back("unresolved dispatch: " + method.str()
                              + " has no body");
        }

        SummaryRequest req{*rec, previous, g.data_type, site.api,
                           cfg.stop_on_sink};
        SummaryResult result;
        try {
            result = summarizer.summarize(req);
        }
        catch (const BackendUnavailable& e) {
            throw ExplorationFailed(g, std::current_exception(), true, e.what());
        }
        catch (const InvalidResponse& e) {
            throw ExplorationFailed(g, std::current_exception(), false,
                                    e.what());
        }

        if (result.leak_here) {
            g.sink_nodes.insert(method);
        }
        const bool expand = !(cfg.stop_on_sink && result.leak_here);
        if (expand) {
            for (const auto& next : result.next_methods) {
                if (!index.contains(next)) {
                    continue;
                }
                if (g.nodes.contains(next)) {
                    g.edges.insert({method, next});
                    continue;
                }
                if (cfg.max_depth > 0 && depth + 1 > cfg.max_depth) {
                    continue;
                }
                if (g.nodes.size() >= cfg.max_nodes) {
                    g.truncated = true;
                    continue;
                }
                g.nodes.insert(next);
                g.edges.insert({method, next});
                g.discovery_order.push_back(next);
                queue.push_back({next, depth + 1, result.summary});
            }
        }
        g.node_summaries.emplace(method, std::move(result));
    }
    return g;
}

/// Convenience form with a run-local cache.
inline DataflowGraph build_graph(const RootSite& site, const MethodIndex& index,
                                 SummarizerBackend& backend,
                                 const ExploreConfig& cfg = {})
{
    Summarizer summarizer(backend, index);
    return build_graph(site, summarizer, cfg);
}

inline EdgeSet edge_set(const DataflowGraph& g)
{
    EdgeSet out;
    for (const auto& [from, to] : g.edges) {
        out.emplace(from.str(), to.str());
    }
    return out;
}

enum class GraphFormat { Dot, Json };

namespace detail {
    inline std::string dot_quote(const std::string& s)
    {
        std::string out = "\"";
        for (char c : s) {
            if (c == '"' || c == '\\') {
                out += '\\';
            }
            out += c;
        }
        return out + "\"";
    }
}

inline nlohmann::ordered_json graph_to_json(const DataflowGraph& g)
{
    nlohmann::ordered_json j;
    j["root"] = g.root.str();
    j["data_type"] = g.data_type;
    auto& nodes = j["nodes"] = nlohmann::ordered_json::array();
    for (const auto& n : g.nodes) {
        nodes.push_back(n.str());
    }
    auto& edges = j["edges"] = nlohmann::ordered_json::array();
    for (const auto& [a, b] : g.edges) {
        edges.push_back({a.str(), b.str()});
    }
    auto& sinks = j["sinks"] = nlohmann::ordered_json::array();
    for (const auto& s : g.sink_nodes) {
        sinks.push_back(s.str());
    }
    j["truncated"] = g.truncated;
    return j;
}

/// Deterministic rendering; nodes and edges are in canonical order.
inline std::string export_graph(const DataflowGraph& g, GraphFormat format)
{
    if (format == GraphFormat::Json) {
        return graph_to_json(g).dump(2) + "\n";
    }
    std::string out = "digraph dataflow {\n";
    out += "  graph [label=" + detail::dot_quote(g.data_type + ": " + g.root.str())
            + "];\n";
    for (const auto& n : g.nodes) {
        out += "  " + detail::dot_quote(n.str());
        if (g.sink_nodes.contains(n)) {
            out += " [shape=doubleoctagon]";
        }
        out += ";\n";
    }
    for (const auto& [a, b] : g.edges) {
        out += "  " + detail::dot_quote(a.str()) + " -> "
                + detail::dot_quote(b.str()) + ";\n";
    }
    out += "}\n";
    return out;
}

/// Edges of a graph file written by export_graph (JSON form).
inline EdgeSet edges_from_graph_json(const nlohmann::json& doc)
{
    if (!doc.is_object() || !doc.contains("edges") || !doc["edges"].is_array()) {
        throw BadConfig("graph JSON: missing array field 'edges'");
    }
    EdgeSet out;
    for (const auto& e : doc["edges"]) {
        if (!e.is_array() || e.size() != 2 || !e[0].is_string()
            || !e[1].is_string()) {
            throw BadConfig("graph JSON: each edge must be [caller, callee]");
        }
        auto a = try_parse_method_ref(e[0].get<std::string>());
        auto b = try_parse_method_ref(e[1].get<std::string>());
        if (!a || !b) {
            throw BadConfig("graph JSON: bad signature in edge " + e.dump());
        }
        out.emplace(a->str(), b->str());
    }
    return out;
}

} // namespace bytetrace
