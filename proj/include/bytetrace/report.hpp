#pragma once

#include "bytetrace/d2cfg.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cctype>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace bytetrace {

enum class FlowAction { Collected, Stored, Logged, Transmitted, Passed };

inline std::string_view to_string(FlowAction a)
{
    switch (a) {
    case FlowAction::Collected: return "Collected";
    case FlowAction::Stored: return "Stored";
    case FlowAction::Logged: return "Logged";
    case FlowAction::Transmitted: return "Transmitted";
    case FlowAction::Passed: return "Passed";
    }
    return "Passed";
}

/// Maps free-text actions onto the fixed vocabulary by keyword; anything
/// unrecognized is "Passed".
inline FlowAction normalize_action(std::string_view text)
{
    std::string s(text);
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    auto has = [&](std::initializer_list<std::string_view> words) {
        return std::any_of(words.begin(), words.end(), [&](auto w) {
            return s.find(w) != std::string::npos;
        });
    };
    if (has({"collect", "retriev", "obtain", "originat", "acquir"})) {
        return FlowAction::Collected;
    }
    if (has({"log"})) {
        return FlowAction::Logged;
    }
    if (has({"transmit", "send", "sent", "upload", "network"})) {
        return FlowAction::Transmitted;
    }
    if (has({"stor", "sav", "writ", "persist"})) {
        return FlowAction::Stored;
    }
    return FlowAction::Passed;
}

inline FlowAction action_for(SinkCategory c)
{
    switch (c) {
    case SinkCategory::Logging: return FlowAction::Logged;
    case SinkCategory::Storage: return FlowAction::Stored;
    case SinkCategory::Transmission: return FlowAction::Transmitted;
    }
    return FlowAction::Passed;
}

struct FlowStep {
    std::string step;
    std::string source_method;
    std::string reasoning;
    FlowAction action = FlowAction::Passed;

    friend bool operator==(const FlowStep&, const FlowStep&) = default;
};

struct FlowChain {
    std::vector<std::string> chain;
    std::string reasoning;

    friend bool operator==(const FlowChain&, const FlowChain&) = default;
};

struct LeakReport {
    std::vector<std::string> data_types_collected;
    std::vector<FlowStep> overall_data_flow;
    std::vector<std::string> all_sinks;
    std::vector<FlowChain> complete_data_flow;
    std::string label = "no leak";

    bool is_leak() const { return label == "leak"; }

    friend bool operator==(const LeakReport&, const LeakReport&) = default;
};

namespace detail {
    /// Summary text without machine-readable trailer lines.
    inline std::string readable_summary(const std::string& summary)
    {
        std::string out;
        std::size_t start = 0;
        while (start <= summary.size()) {
            auto nl = summary.find('\n', start);
            auto line = summary.substr(start, nl == std::string::npos
                                                      ? std::string::npos
                                                      : nl - start);
            if (!line.starts_with("TAINTED-PARAMS")) {
                out += (out.empty() ? "" : "\n") + line;
            }
            if (nl == std::string::npos) {
                break;
            }
            start = nl + 1;
        }
        return out;
    }

    /// Shortest root-to-target path; ties broken by canonical order.
    inline std::optional<std::vector<MethodRef>>
    shortest_path(const DataflowGraph& g, const MethodRef& target)
    {
        std::map<MethodRef, MethodRef> parent;
        std::set<MethodRef> seen{g.root};
        std::deque<MethodRef> queue{g.root};
        while (!queue.empty()) {
            auto cur = queue.front();
            queue.pop_front();
            if (cur == target) {
                std::vector<MethodRef> path{cur};
                while (path.back() != g.root) {
                    path.push_back(parent.at(path.back()));
                }
                std::reverse(path.begin(), path.end());
                return path;
            }
            for (auto& next : g.successors(cur)) {
                if (seen.insert(next).second) {
                    parent.emplace(next, cur);
                    queue.push_back(next);
                }
            }
        }
        return std::nullopt;
    }

    inline void all_paths(const DataflowGraph& g, const MethodRef& target,
                          std::vector<MethodRef>& stack,
                          std::set<MethodRef>& on_stack,
                          std::vector<std::vector<MethodRef>>& out)
    {
        if (stack.back() == target) {
            out.push_back(stack);
            return;
        }
        for (auto& next : g.successors(stack.back())) {
            if (on_stack.insert(next).second) {
                stack.push_back(next);
                all_paths(g, target, stack, on_stack, out);
                stack.pop_back();
                on_stack.erase(next);
            }
        }
    }
}

/// Builds the leak report of one finished (or truncated) graph.
///
/// With `all_routes` every simple root-to-sink path is kept; otherwise one
/// shortest path per sink.
inline LeakReport assemble_report(const DataflowGraph& g, bool all_routes = false)
{
    LeakReport r;
    r.data_types_collected = {g.data_type};
    const auto& dt = g.data_type;

    std::set<std::string> sink_seen;
    for (const auto& node : g.discovery_order) {
        auto it = g.node_summaries.find(node);
        if (it == g.node_summaries.end()) {
            continue;
        }
        const auto& s = it->second;
        const auto text = detail::readable_summary(s.summary);
        if (node == g.root) {
            r.overall_data_flow.push_back({"Get " + dt + " data", node.str(),
                                           text, FlowAction::Collected});
        }
        else if (s.sinks.empty() && g.out_degree(node) > 0) {
            r.overall_data_flow.push_back({"Pass " + dt + " data", node.str(),
                                           text, FlowAction::Passed});
        }

        std::set<std::string> chained;
        for (const auto& f : s.sinks) {
            const auto action = action_for(f.category);
            r.overall_data_flow.push_back(
                    {std::string(to_string(action)) + " " + dt + " data",
                     node.str(),
                     dt + " data reaches " + f.sink_ref.str() + " ("
                             + std::string(to_string(f.category)) + ").",
                     action});
            const auto sink = f.sink_ref.str();
            if (sink_seen.insert(sink).second) {
                r.all_sinks.push_back(sink);
            }
            if (!chained.insert(sink).second) {
                continue;
            }

            std::vector<std::vector<MethodRef>> paths;
            if (all_routes) {
                std::vector<MethodRef> stack{g.root};
                std::set<MethodRef> on_stack{g.root};
                detail::all_paths(g, node, stack, on_stack, paths);
            }
            else if (auto p = detail::shortest_path(g, node)) {
                paths.push_back(*std::move(p));
            }
            for (const auto& path : paths) {
                FlowChain chain;
                for (const auto& m : path) {
                    chain.chain.push_back(m.str());
                }
                chain.chain.push_back(sink);
                const auto hops = path.size() - 1;
                chain.reasoning = dt + " data is retrieved in "
                        + g.root.name + "()"
                        + (hops == 0 ? std::string(" and")
                                     : ", passed through " + std::to_string(hops)
                                               + " method call(s), and")
                        + " reaches " + sink + " ("
                        + std::string(to_string(f.category)) + ").";
                r.complete_data_flow.push_back(std::move(chain));
            }
        }
    }
    r.label = r.all_sinks.empty() ? "no leak" : "leak";
    return r;
}

inline constexpr std::string_view chain_separator = " → ";

inline nlohmann::ordered_json to_json(const LeakReport& r)
{
    nlohmann::ordered_json j;
    j["Data Types Collected"] = r.data_types_collected;
    auto& steps = j["Overall Data Flow"] = nlohmann::ordered_json::array();
    for (const auto& s : r.overall_data_flow) {
        steps.push_back({{"Step", s.step},
                         {"Source Method", s.source_method},
                         {"Reasoning", s.reasoning},
                         {"Action", to_string(s.action)}});
    }
    j["All Sinks"] = r.all_sinks;
    auto& flows = j["Complete Data Flow"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < r.complete_data_flow.size(); ++i) {
        const auto& c = r.complete_data_flow[i];
        std::string joined;
        for (const auto& sig : c.chain) {
            if (!joined.empty()) {
                joined += chain_separator;
            }
            joined += sig;
        }
        nlohmann::ordered_json flow;
        flow["dataflow " + std::to_string(i + 1)] = joined;
        flow["Reasoning"] = c.reasoning;
        flows.push_back(std::move(flow));
    }
    j["Label"] = nlohmann::ordered_json::array({r.label});
    return j;
}

inline LeakReport leak_report_from_json(const nlohmann::json& j)
{
    auto need = [&](const char* key) -> const nlohmann::json& {
        if (!j.is_object() || !j.contains(key)) {
            throw BadConfig(std::string("leak report: missing key '") + key + "'");
        }
        return j.at(key);
    };
    auto strings = [](const nlohmann::json& a, const char* key) {
        if (!a.is_array()) {
            throw BadConfig(std::string("leak report: '") + key
                            + "' must be an array");
        }
        std::vector<std::string> out;
        for (const auto& v : a) {
            if (!v.is_string()) {
                throw BadConfig(std::string("leak report: '") + key
                                + "' must hold strings");
            }
            out.push_back(v.get<std::string>());
        }
        return out;
    };

    LeakReport r;
    r.data_types_collected =
            strings(need("Data Types Collected"), "Data Types Collected");
    for (const auto& s : need("Overall Data Flow")) {
        r.overall_data_flow.push_back(
                {s.value("Step", ""), s.value("Source Method", ""),
                 s.value("Reasoning", ""),
                 normalize_action(s.value("Action", ""))});
    }
    r.all_sinks = strings(need("All Sinks"), "All Sinks");
    for (const auto& f : need("Complete Data Flow")) {
        FlowChain c;
        for (auto it = f.begin(); it != f.end(); ++it) {
            if (it.key() == "Reasoning") {
                c.reasoning = it.value().get<std::string>();
            }
            else if (it.key().starts_with("dataflow") && it.value().is_string()) {
                std::string_view rest = it.value().get_ref<const std::string&>();
                while (true) {
                    auto pos = rest.find(chain_separator);
                    c.chain.emplace_back(rest.substr(0, pos));
                    if (pos == std::string_view::npos) {
                        break;
                    }
                    rest.remove_prefix(pos + chain_separator.size());
                }
            }
        }
        r.complete_data_flow.push_back(std::move(c));
    }
    const auto& label = need("Label");
    if (label.is_array() && label.size() == 1 && label[0].is_string()) {
        r.label = label[0].get<std::string>();
    }
    else if (label.is_string()) {
        r.label = label.get<std::string>();
    }
    else {
        throw BadConfig("leak report: 'Label' must be [\"leak\"] or [\"no leak\"]");
    }
    if (r.label != "leak" && r.label != "no leak") {
        throw BadConfig("leak report: unknown label '" + r.label + "'");
    }
    return r;
}

/// App-level report file: a JSON array, one object per root.
inline std::string reports_to_string(const std::vector<LeakReport>& reports)
{
    auto arr = nlohmann::ordered_json::array();
    for (const auto& r : reports) {
        arr.push_back(to_json(r));
    }
    return arr.dump(4) + "\n";
}

inline std::vector<LeakReport> reports_from_string(std::string_view text)
{
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    }
    catch (const nlohmann::json::parse_error& e) {
        throw BadConfig(std::string("leak report: ") + e.what());
    }
    if (!doc.is_array()) {
        throw BadConfig("leak report file must hold a JSON array");
    }
    std::vector<LeakReport> out;
    for (const auto& j : doc) {
        out.push_back(leak_report_from_json(j));
    }
    return out;
}

// G-Eval -------------------------------------------------------------------

/// Judge scores, each 1-5.
struct DimensionScores {
    int data_type_identification = 1;
    int data_propagation_accuracy = 1;
    int sink_function_match = 1;
    int leakage_inference = 1;
    int coherence_and_fluency = 1;

    void validate() const
    {
        for (int v : {data_type_identification, data_propagation_accuracy,
                      sink_function_match, leakage_inference,
                      coherence_and_fluency}) {
            if (v < 1 || v > 5) {
                throw OutOfRange("dimension score " + std::to_string(v)
                                 + " outside [1,5]");
            }
        }
    }
};

struct GEvalScores {
    double coherence = 1;
    double fluency = 1;
    double consistency = 1;
    double relevance = 1;
};

inline GEvalScores map_geval(const DimensionScores& d)
{
    d.validate();
    GEvalScores g;
    g.coherence = d.coherence_and_fluency;
    g.fluency = d.coherence_and_fluency;
    g.consistency = (d.data_type_identification + d.data_propagation_accuracy
                     + d.leakage_inference)
            / 3.0;
    g.relevance = (d.data_propagation_accuracy + d.sink_function_match) / 2.0;
    return g;
}

/// Reads the judge's JSON reply (keys as in the evaluation prompt).
inline DimensionScores parse_dimension_scores(const nlohmann::json& j)
{
    auto get = [&](const char* key) {
        if (!j.is_object() || !j.contains(key) || !j[key].is_number_integer()) {
            throw BadConfig(std::string("judge scores: missing integer '") + key
                            + "'");
        }
        return j[key].get<int>();
    };
    DimensionScores d{get("data_type_identification"),
                      get("data_propagation_accuracy"),
                      get("sink_function_match"), get("leakage_inference"),
                      get("coherence_and_fluency")};
    d.validate();
    return d;
}

} // namespace bytetrace
