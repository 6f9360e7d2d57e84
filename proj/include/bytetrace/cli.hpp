#pragma once

// Command implementations behind tools/bytetrace. Each returns a process
// exit code: 0 success, 1 backend failure, 2 input error.

#include "bytetrace/d2cfg.hpp"
#include "bytetrace/evalkit.hpp"
#include "bytetrace/http_backend.hpp"
#include "bytetrace/report.hpp"
#include "bytetrace/smali.hpp"
#include "bytetrace/sources.hpp"
#include "bytetrace/taint_backend.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#ifndef BYTETRACE_DATA_DIR
#define BYTETRACE_DATA_DIR "data"
#endif

namespace bytetrace {

namespace fs = std::filesystem;

enum ExitCode : int { exit_ok = 0, exit_backend = 1, exit_input = 2 };

enum class BackendKind { Taint, Http };

struct RunConfig {
    std::vector<fs::path> smali_roots;
    fs::path source_list_path = fs::path(BYTETRACE_DATA_DIR) / "sources.json";
    BackendKind backend = BackendKind::Taint;
    BackendConfig http;
    /// Taint backend sink rules; empty path means the built-in defaults.
    fs::path sink_rules_path;
    ExploreConfig explore;
    fs::path output_dir = "bytetrace-out";
    unsigned parallelism = 1;
    /// Keep every root-to-sink route in reports, not just the shortest.
    bool all_routes = false;
    /// Treat each subdirectory of this directory as one app.
    fs::path batch_dir;

    void validate() const
    {
        if (parallelism < 1) {
            throw BadConfig("parallelism must be >= 1");
        }
        if (smali_roots.empty() && batch_dir.empty()) {
            throw BadConfig("at least one smali root is required");
        }
        explore.validate();
        if (backend == BackendKind::Http) {
            http.validate();
        }
    }
};

/// Overlays a JSON config object onto `cfg`. Unknown keys are rejected.
inline void apply_config_json(RunConfig& cfg, const nlohmann::json& j,
                              const fs::path& base = {})
{
    if (!j.is_object()) {
        throw BadConfig("config: top level must be an object");
    }
    auto path = [&](const nlohmann::json& v, const std::string& key) {
        if (!v.is_string()) {
            throw BadConfig("config: '" + key + "' must be a string");
        }
        fs::path p = v.get<std::string>();
        return p.is_relative() && !base.empty() ? base / p : p;
    };
    auto number = [](const nlohmann::json& v, const std::string& key) {
        if (!v.is_number()) {
            throw BadConfig("config: '" + key + "' must be a number");
        }
        return v.get<double>();
    };
    auto integer = [](const nlohmann::json& v, const std::string& key) {
        if (!v.is_number_integer()) {
            throw BadConfig("config: '" + key + "' must be an integer");
        }
        return v.get<long>();
    };
    for (auto it = j.begin(); it != j.end(); ++it) {
        const auto& key = it.key();
        const auto& v = it.value();
        if (key == "smali") {
            if (!v.is_array()) {
                throw BadConfig("config: 'smali' must be an array of paths");
            }
            cfg.smali_roots.clear();
            for (const auto& p : v) {
                cfg.smali_roots.push_back(path(p, key));
            }
        }
        else if (key == "sources") {
            cfg.source_list_path = path(v, key);
        }
        else if (key == "sinks") {
            cfg.sink_rules_path = path(v, key);
        }
        else if (key == "backend") {
            if (v == "taint") {
                cfg.backend = BackendKind::Taint;
            }
            else if (v == "http") {
                cfg.backend = BackendKind::Http;
            }
            else {
                throw BadConfig("config: 'backend' must be \"http\" or \"taint\"");
            }
        }
        else if (key == "endpoint") {
            if (!v.is_string()) {
                throw BadConfig("config: 'endpoint' must be a string");
            }
            cfg.http.endpoint_url = v.get<std::string>();
        }
        else if (key == "model") {
            if (!v.is_string()) {
                throw BadConfig("config: 'model' must be a string");
            }
            cfg.http.model_name = v.get<std::string>();
        }
        else if (key == "temperature") {
            cfg.http.temperature = number(v, key);
        }
        else if (key == "ctx") {
            cfg.http.context_window_tokens = integer(v, key);
        }
        else if (key == "max_retries") {
            cfg.http.max_retries = static_cast<int>(integer(v, key));
        }
        else if (key == "timeout") {
            cfg.http.timeout_seconds = number(v, key);
        }
        else if (key == "permits") {
            cfg.http.permits = static_cast<int>(integer(v, key));
        }
        else if (key == "stop_on_sink") {
            if (!v.is_boolean()) {
                throw BadConfig("config: 'stop_on_sink' must be a boolean");
            }
            cfg.explore.stop_on_sink = v.get<bool>();
        }
        else if (key == "max_depth") {
            cfg.explore.max_depth = static_cast<int>(integer(v, key));
        }
        else if (key == "max_nodes") {
            auto n = integer(v, key);
            if (n <= 0) {
                throw BadConfig("config: 'max_nodes' must be > 0");
            }
            cfg.explore.max_nodes = static_cast<std::size_t>(n);
        }
        else if (key == "out") {
            cfg.output_dir = path(v, key);
        }
        else if (key == "jobs") {
            auto n = integer(v, key);
            if (n < 1) {
                throw BadConfig("config: 'jobs' must be >= 1");
            }
            cfg.parallelism = static_cast<unsigned>(n);
        }
        else if (key == "all_routes") {
            if (!v.is_boolean()) {
                throw BadConfig("config: 'all_routes' must be a boolean");
            }
            cfg.all_routes = v.get<bool>();
        }
        else if (key == "batch") {
            cfg.batch_dir = path(v, key);
        }
        else {
            throw BadConfig("config: unknown key '" + key + "'");
        }
    }
}

inline RunConfig load_run_config(const fs::path& file)
{
    RunConfig cfg;
    try {
        apply_config_json(cfg, nlohmann::json::parse(read_file(file)),
                          file.parent_path());
    }
    catch (const nlohmann::json::parse_error& e) {
        throw BadConfig(file.string() + ": " + e.what());
    }
    return cfg;
}

/// Writes through a temporary file and renames it into place.
inline void write_atomic(const fs::path& path, std::string_view content)
{
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw BadConfig("cannot write " + tmp.string());
        }
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) {
            throw BadConfig("write failed: " + tmp.string());
        }
    }
    fs::rename(tmp, path);
}

inline std::string root_file_stem(std::size_t i)
{
    std::ostringstream ss;
    ss << "root_" << std::setw(3) << std::setfill('0') << i;
    return ss.str();
}

inline std::unique_ptr<SummarizerBackend> make_backend(const RunConfig& cfg)
{
    if (cfg.backend == BackendKind::Http) {
        return std::make_unique<HttpBackend>(cfg.http);
    }
    auto rules = cfg.sink_rules_path.empty() ? default_sink_rules()
                                             : load_sink_rules(cfg.sink_rules_path);
    return std::make_unique<TaintBackend>(std::move(rules));
}

struct RootOutcome {
    RootSite site;
    std::optional<DataflowGraph> graph;
    bool partial = false;
    std::string error;
};

struct AppOutcome {
    int exit_code = exit_ok;
    std::vector<RootOutcome> roots;
    std::vector<LeakReport> reports;
    std::string error;
    double seconds = 0;
};

namespace detail {
    inline void clear_previous_outputs(const fs::path& dir)
    {
        if (!fs::is_directory(dir)) {
            return;
        }
        for (const auto& e : fs::directory_iterator(dir)) {
            const auto name = e.path().filename().string();
            if (name.starts_with("root_") || name.starts_with("report.json")
                || name == "summary.json") {
                fs::remove(e.path());
            }
        }
    }

    inline std::string root_line(const std::string& id, const RootOutcome& r,
                                 const LeakReport& rep)
    {
        std::ostringstream ss;
        const auto& g = *r.graph;
        ss << id << " " << g.root.str() << " [" << g.data_type << "]"
           << " nodes=" << g.nodes.size() << " edges=" << g.edges.size()
           << " sinks=" << rep.all_sinks.size() << " label=" << rep.label;
        if (g.truncated) {
            ss << " truncated";
        }
        if (r.partial) {
            ss << " PARTIAL (" << r.error << ")";
        }
        return ss.str();
    }
}

/// Analyzes one app: parse, discover roots, explore each root, write the
/// per-root graphs (JSON + DOT), the report array and a run summary.
/// Backend failures leave ".partial" artifacts and yield exit code 1.
inline AppOutcome analyze_app(const RunConfig& cfg,
                              const std::vector<fs::path>& smali_roots,
                              const fs::path& out_dir, std::ostream& log)
{
    const auto started = std::chrono::steady_clock::now();
    AppOutcome app;
    MethodIndex index;
    std::vector<RootSite> roots;
    std::unique_ptr<SummarizerBackend> backend;
    try {
        cfg.explore.validate();
        index = load_smali_tree(smali_roots, cfg.parallelism);
        roots = find_roots(index, load_source_list(cfg.source_list_path));
        backend = make_backend(cfg);
        fs::create_directories(out_dir);
        detail::clear_previous_outputs(out_dir);
    }
    catch (const std::exception& e) {
        app.exit_code = exit_input;
        app.error = e.what();
        log << "error: " << e.what() << "\n";
        return app;
    }

    Summarizer summarizer(*backend, index);
    app.roots.resize(roots.size());
    std::atomic<std::size_t> cursor{0};
    auto worker = [&] {
        for (auto i = cursor++; i < roots.size(); i = cursor++) {
            auto& out = app.roots[i];
            out.site = roots[i];
            try {
                out.graph = build_graph(roots[i], summarizer, cfg.explore);
            }
            catch (const ExplorationFailed& e) {
                out.graph = e.partial();
                out.partial = true;
                out.error = e.what();
            }
        }
    };
    const auto jobs = std::max(1u, std::min<unsigned>(
                                           cfg.parallelism,
                                           static_cast<unsigned>(roots.size())));
    if (jobs == 1) {
        worker();
    }
    else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < jobs; ++t) {
            pool.emplace_back(worker);
        }
    }

    bool failed = false;
    nlohmann::ordered_json summary_roots = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < app.roots.size(); ++i) {
        const auto& r = app.roots[i];
        const auto stem = root_file_stem(i);
        const std::string suffix = r.partial ? ".partial" : "";
        failed = failed || r.partial;
        write_atomic(out_dir / (stem + ".json" + suffix),
                     export_graph(*r.graph, GraphFormat::Json));
        write_atomic(out_dir / (stem + ".dot" + suffix),
                     export_graph(*r.graph, GraphFormat::Dot));
        app.reports.push_back(assemble_report(*r.graph, cfg.all_routes));
        const auto& rep = app.reports.back();
        log << detail::root_line(stem, r, rep) << "\n";
        summary_roots.push_back({{"id", stem},
                                 {"root", r.graph->root.str()},
                                 {"data_type", r.graph->data_type},
                                 {"instruction_offset", r.site.instruction_offset},
                                 {"nodes", r.graph->nodes.size()},
                                 {"edges", r.graph->edges.size()},
                                 {"sinks", rep.all_sinks.size()},
                                 {"label", rep.label},
                                 {"truncated", r.graph->truncated},
                                 {"error", r.error}});
    }
    write_atomic(out_dir / (failed ? "report.json.partial" : "report.json"),
                 reports_to_string(app.reports));

    app.seconds = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - started)
                          .count();
    nlohmann::ordered_json summary;
    summary["roots"] = std::move(summary_roots);
    summary["methods"] = index.method_count();
    summary["classes"] = index.class_count();
    summary["backend"] = backend->identity();
    summary["backend_calls"] = summarizer.backend_calls();
    auto drops = nlohmann::ordered_json::array();
    for (const auto& d : summarizer.drops().entries()) {
        drops.push_back({{"method", d.method},
                         {"entry", d.entry},
                         {"reason", to_string(d.reason)}});
    }
    summary["dropped"] = std::move(drops);
    summary["seconds"] = app.seconds;
    write_atomic(out_dir / "summary.json", summary.dump(2) + "\n");

    if (failed) {
        app.exit_code = exit_backend;
        log << "backend failure: partial outputs written to " << out_dir.string()
            << "\n";
    }
    return app;
}

/// `analyze`: one app from cfg.smali_roots, or every subdirectory of
/// cfg.batch_dir as its own app. Batch failures are collected, not fatal.
inline int cmd_analyze(const RunConfig& cfg, std::ostream& log)
{
    try {
        cfg.validate();
    }
    catch (const Error& e) {
        log << "error: " << e.what() << "\n";
        return exit_input;
    }
    if (cfg.batch_dir.empty()) {
        return analyze_app(cfg, cfg.smali_roots, cfg.output_dir, log).exit_code;
    }

    if (!fs::is_directory(cfg.batch_dir)) {
        log << "error: batch directory not found: " << cfg.batch_dir.string()
            << "\n";
        return exit_input;
    }
    std::vector<fs::path> apps;
    for (const auto& e : fs::directory_iterator(cfg.batch_dir)) {
        if (e.is_directory()) {
            apps.push_back(e.path());
        }
    }
    std::sort(apps.begin(), apps.end());

    int worst = exit_ok;
    auto summary = nlohmann::ordered_json::array();
    for (const auto& app_dir : apps) {
        const auto name = app_dir.filename().string();
        log << "== " << name << "\n";
        auto outcome = analyze_app(cfg, {app_dir}, cfg.output_dir / name, log);
        worst = std::max(worst, outcome.exit_code);
        std::size_t leaks = 0;
        for (const auto& r : outcome.reports) {
            leaks += r.is_leak() ? 1 : 0;
        }
        summary.push_back({{"app", name},
                           {"exit_code", outcome.exit_code},
                           {"roots", outcome.roots.size()},
                           {"leaking_roots", leaks},
                           {"seconds", outcome.seconds},
                           {"error", outcome.error}});
    }
    fs::create_directories(cfg.output_dir);
    write_atomic(cfg.output_dir / "batch_summary.json", summary.dump(2) + "\n");
    std::size_t failures = 0;
    for (const auto& s : summary) {
        failures += s["exit_code"].get<int>() != exit_ok ? 1 : 0;
    }
    log << apps.size() << " app(s), " << failures << " failure(s)\n";
    return worst;
}

namespace detail {
    inline std::string pct(double v)
    {
        std::ostringstream ss;
        ss << std::fixed << std::setprecision(2) << v * 100.0;
        return ss.str();
    }

    inline EdgeSet load_predicted_edges(const fs::path& p)
    {
        EdgeSet edges;
        auto add_file = [&](const fs::path& f) {
            nlohmann::json doc;
            try {
                doc = nlohmann::json::parse(read_file(f));
            }
            catch (const nlohmann::json::parse_error& e) {
                throw BadConfig(f.string() + ": " + e.what());
            }
            auto part = edges_from_graph_json(doc);
            edges.insert(part.begin(), part.end());
        };
        if (fs::is_directory(p)) {
            std::vector<fs::path> files;
            for (const auto& e : fs::directory_iterator(p)) {
                const auto name = e.path().filename().string();
                if (name.starts_with("root_") && e.path().extension() == ".json"
                    && e.path().stem().extension().empty()) {
                    files.push_back(e.path());
                }
            }
            std::sort(files.begin(), files.end());
            for (const auto& f : files) {
                add_file(f);
            }
        }
        else {
            add_file(p);
        }
        return edges;
    }
}

inline std::string format_edge_metrics(const EdgeMetrics& m)
{
    std::ostringstream ss;
    ss << "TP        " << m.tp << "\n"
       << "FP        " << m.fp << "\n"
       << "FN        " << m.fn << "\n"
       << "Precision " << detail::pct(m.precision) << "\n"
       << "Recall    " << detail::pct(m.recall) << "\n"
       << "F1-score  " << detail::pct(m.f1) << "\n"
       << "F-beta    " << detail::pct(m.f_beta) << " (beta=" << m.beta << ")\n";
    return ss.str();
}

inline nlohmann::ordered_json to_json(const EdgeMetrics& m)
{
    return {{"tp", m.tp},
            {"fp", m.fp},
            {"fn", m.fn},
            {"precision", m.precision},
            {"recall", m.recall},
            {"f1", m.f1},
            {"f_beta", m.f_beta},
            {"beta", m.beta},
            {"degenerate", m.degenerate}};
}

/// `eval-graph`: predicted graph JSON (file, or output directory of
/// root_*.json) against a ground-truth edge file. Writes
/// "<predicted>.eval.json" (or "eval_graph.json" inside a directory).
inline int cmd_eval_graph(const fs::path& predicted, const fs::path& truth,
                          double beta, std::ostream& out)
{
    EdgeMetrics m;
    try {
        if (!(beta > 0)) {
            throw BadConfig("beta must be > 0");
        }
        m = compare_graphs(detail::load_predicted_edges(predicted),
                           load_ground_truth(truth), beta);
    }
    catch (const Error& e) {
        out << "error: " << e.what() << "\n";
        return exit_input;
    }
    out << format_edge_metrics(m);
    auto json_path = fs::is_directory(predicted)
            ? predicted / "eval_graph.json"
            : fs::path(predicted.string() + ".eval.json");
    write_atomic(json_path, to_json(m).dump(2) + "\n");
    return exit_ok;
}

struct ManifestCase {
    std::string case_id;
    std::string suite = "default";
    fs::path smali_dir;
    std::size_t expected_leaks = 0;
    std::vector<std::string> expected_sinks;
    /// Optional ground-truth edge file for graph evaluation.
    fs::path truth_edges;
    /// Optional pinned output of a default taint-backend run.
    nlohmann::json expected_output;
};

inline std::vector<ManifestCase> load_manifest(const fs::path& path)
{
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(read_file(path));
    }
    catch (const nlohmann::json::parse_error& e) {
        throw BadConfig(path.string() + ": " + e.what());
    }
    if (!doc.is_array()) {
        throw BadConfig(path.string() + ": manifest must be a JSON array");
    }
    const auto base = path.parent_path();
    std::vector<ManifestCase> cases;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const auto& e = doc[i];
        const auto where = path.string() + ": case " + std::to_string(i);
        if (!e.is_object() || !e.contains("case_id") || !e["case_id"].is_string()
            || !e.contains("smali_dir") || !e["smali_dir"].is_string()
            || !e.contains("expected_leaks")
            || !e["expected_leaks"].is_number_unsigned()) {
            throw BadConfig(where + ": needs case_id, smali_dir, expected_leaks");
        }
        ManifestCase c;
        c.case_id = e["case_id"].get<std::string>();
        c.smali_dir = base / e["smali_dir"].get<std::string>();
        c.expected_leaks = e["expected_leaks"].get<std::size_t>();
        if (e.contains("suite")) {
            c.suite = e["suite"].get<std::string>();
        }
        if (e.contains("expected_sinks")) {
            for (const auto& s : e["expected_sinks"]) {
                auto ref = s.is_string() ? try_parse_method_ref(s.get<std::string>())
                                         : std::nullopt;
                if (!ref) {
                    throw BadConfig(where + ": bad expected sink " + s.dump());
                }
                c.expected_sinks.push_back(ref->str());
            }
            if (c.expected_sinks.size() != c.expected_leaks) {
                throw BadConfig(where + ": expected_sinks must list one sink "
                                "per expected leak");
            }
        }
        if (e.contains("truth_edges")) {
            c.truth_edges = base / e["truth_edges"].get<std::string>();
        }
        if (e.contains("expected_output")) {
            c.expected_output = e["expected_output"];
        }
        cases.push_back(std::move(c));
    }
    return cases;
}

/// Distinct leaks in a report array, one entry (the sink signature) per
/// (data type, sink-bearing method, sink) triple.
inline std::vector<std::string>
detected_leaks(const std::vector<LeakReport>& reports)
{
    std::set<std::tuple<std::string, std::string, std::string>> seen;
    std::vector<std::string> sinks;
    for (const auto& r : reports) {
        const auto dt = r.data_types_collected.empty()
                ? std::string{}
                : r.data_types_collected.front();
        for (const auto& c : r.complete_data_flow) {
            if (c.chain.size() < 2) {
                continue;
            }
            const auto& sink = c.chain.back();
            const auto& at = c.chain[c.chain.size() - 2];
            if (seen.emplace(dt, at, sink).second) {
                sinks.push_back(sink);
            }
        }
    }
    return sinks;
}

struct SuiteTotals {
    std::size_t leaks = 0;
    std::size_t tp = 0;
    std::size_t fn = 0;
    std::size_t fp = 0;
};

/// Leak table: one column per suite plus the total, with the
/// precision/recall/F1 footer.
inline std::string format_leak_table(const std::map<std::string, SuiteTotals>& suites,
                                     const LeakScore& score)
{
    std::ostringstream ss;
    std::vector<std::pair<std::string, SuiteTotals>> cols(suites.begin(),
                                                          suites.end());
    SuiteTotals total;
    for (const auto& [_, t] : cols) {
        total.leaks += t.leaks;
        total.tp += t.tp;
        total.fn += t.fn;
        total.fp += t.fp;
    }
    cols.emplace_back("Total", total);
    std::vector<int> widths;
    for (const auto& [name, _] : cols) {
        widths.push_back(static_cast<int>(std::max<std::size_t>(10, name.size()) + 2));
    }

    auto row = [&](const std::string& name, auto get) {
        ss << std::left << std::setw(28) << name;
        for (std::size_t i = 0; i < cols.size(); ++i) {
            ss << std::right << std::setw(widths[i]) << get(cols[i].second);
        }
        ss << "\n";
    };
    ss << std::left << std::setw(28) << "";
    for (std::size_t i = 0; i < cols.size(); ++i) {
        ss << std::right << std::setw(widths[i]) << cols[i].first;
    }
    ss << "\n";
    row("Leaks", [](const SuiteTotals& t) { return t.leaks; });
    row("TP", [](const SuiteTotals& t) { return t.tp; });
    row("FN", [](const SuiteTotals& t) { return t.fn; });
    row("FP", [](const SuiteTotals& t) { return t.fp; });
    ss << std::left << std::setw(28) << "Precision, P = TP/(TP+FP)"
       << detail::pct(score.precision) << "%\n";
    ss << std::left << std::setw(28) << "Recall, R = TP/(TP+FN)"
       << detail::pct(score.recall) << "%\n";
    ss << std::left << std::setw(28) << "F1-score = 2PR/(P+R)"
       << detail::pct(score.f1) << "%\n";
    if (score.empty) {
        ss << "(no leaks expected or reported)\n";
    }
    return ss.str();
}

/// `eval-leaks`: scores results_dir/<case_id>/report.json against the
/// manifest. Missing case outputs are listed and yield exit code 2.
inline int cmd_eval_leaks(const fs::path& manifest, const fs::path& results_dir,
                          std::ostream& out)
{
    std::vector<ManifestCase> cases;
    try {
        cases = load_manifest(manifest);
    }
    catch (const Error& e) {
        out << "error: " << e.what() << "\n";
        return exit_input;
    }

    std::vector<std::string> missing;
    std::vector<LeakCaseResult> results;
    std::map<std::string, SuiteTotals> suites;
    auto per_case = nlohmann::ordered_json::array();
    for (const auto& c : cases) {
        const auto report = results_dir / c.case_id / "report.json";
        if (!fs::is_regular_file(report)) {
            missing.push_back(report.string());
            continue;
        }
        std::vector<LeakReport> reports;
        try {
            reports = reports_from_string(read_file(report));
        }
        catch (const Error& e) {
            out << "error: " << report.string() << ": " << e.what() << "\n";
            return exit_input;
        }
        auto detected = detected_leaks(reports);
        auto r = c.expected_sinks.empty() && c.expected_leaks > 0
                ? match_case(c.case_id, c.expected_leaks,
                             std::vector<std::string>(
                                     std::min(detected.size(), c.expected_leaks),
                                     "*"),
                             std::vector<std::string>(detected.size(), "*"))
                : match_case(c.case_id, c.expected_leaks, c.expected_sinks,
                             detected);
        auto& s = suites[c.suite];
        s.leaks += r.expected_leaks;
        s.tp += r.tp;
        s.fn += r.fn;
        s.fp += r.fp;
        per_case.push_back({{"case_id", r.case_id},
                            {"suite", c.suite},
                            {"expected_leaks", r.expected_leaks},
                            {"detected", r.detected},
                            {"tp", r.tp},
                            {"fp", r.fp},
                            {"fn", r.fn}});
        results.push_back(std::move(r));
    }
    if (!missing.empty()) {
        out << "error: missing case outputs:\n";
        for (const auto& m : missing) {
            out << "  " << m << "\n";
        }
        return exit_input;
    }

    const auto score = score_leaks(results);
    out << format_leak_table(suites, score);
    nlohmann::ordered_json j;
    j["cases"] = std::move(per_case);
    j["tp"] = score.tp;
    j["fp"] = score.fp;
    j["fn"] = score.fn;
    j["precision"] = score.precision;
    j["recall"] = score.recall;
    j["f1"] = score.f1;
    j["empty"] = score.empty;
    write_atomic(results_dir / "eval_leaks.json", j.dump(2) + "\n");
    return exit_ok;
}

} // namespace bytetrace
