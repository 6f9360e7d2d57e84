#include "bytetrace/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

namespace {

bool parse_bool(const std::string& s)
{
    if (s == "true" || s == "1" || s == "yes" || s == "on") {
        return true;
    }
    if (s == "false" || s == "0" || s == "no" || s == "off") {
        return false;
    }
    throw CLI::ValidationError("--stop-on-sink", "expected true or false, got " + s);
}

} // namespace

int main(int argc, char** argv)
{
    using namespace bytetrace;

    CLI::App app{"bytetrace: source-to-sink dataflow graphs for decompiled Android apps"};
    app.require_subcommand(1);

    // analyze ---------------------------------------------------------------
    auto* analyze = app.add_subcommand("analyze", "Build dataflow graphs and leak reports");
    std::string config_path;
    std::vector<std::string> smali;
    std::string sources, sinks, backend_name, endpoint, model, out, batch;
    double temperature = 0;
    long ctx = 0;
    std::string stop_on_sink;
    int max_depth = 0, max_retries = 0;
    std::size_t max_nodes = 0;
    unsigned jobs = 1;
    bool all_routes = false;

    analyze->add_option("--config", config_path, "JSON config file (flags win)")
            ->check(CLI::ExistingFile);
    auto* o_smali = analyze->add_option("--smali", smali, "Smali directory (repeatable)");
    auto* o_sources = analyze->add_option("--sources", sources, "Source list JSON");
    auto* o_sinks = analyze->add_option("--sinks", sinks, "Sink rules JSON (taint backend)");
    auto* o_backend = analyze->add_option("--backend", backend_name, "http or taint")
                              ->check(CLI::IsMember({"http", "taint"}));
    auto* o_endpoint = analyze->add_option("--endpoint", endpoint, "Chat endpoint URL");
    auto* o_model = analyze->add_option("--model", model, "Model name");
    auto* o_temp = analyze->add_option("--temperature", temperature,
                                       "Sampling temperature (default 0.2)");
    auto* o_ctx = analyze->add_option("--ctx", ctx, "Context window tokens (default 40000)");
    auto* o_retries = analyze->add_option("--max-retries", max_retries, "Retries per call");
    auto* o_stop = analyze->add_option("--stop-on-sink", stop_on_sink,
                                       "Stop expanding at a sink (default true)");
    auto* o_depth = analyze->add_option("--max-depth", max_depth, "0 = unlimited");
    auto* o_nodes = analyze->add_option("--max-nodes", max_nodes, "Node cap per root");
    auto* o_out = analyze->add_option("--out", out, "Output directory");
    auto* o_jobs = analyze->add_option("--jobs", jobs, "Worker threads")
                           ->check(CLI::PositiveNumber);
    auto* o_batch = analyze->add_option("--batch", batch,
                                        "Directory of app subdirectories");
    auto* f_all = analyze->add_flag("--all-routes", all_routes,
                                    "Report every root-to-sink route");

    // eval-graph ------------------------------------------------------------
    auto* eval_graph = app.add_subcommand("eval-graph", "Score graph edges against ground truth");
    std::string predicted, truth;
    double beta = 0.5;
    eval_graph->add_option("predicted", predicted, "Graph JSON or analyze output dir")
            ->required();
    eval_graph->add_option("truth", truth, "Ground-truth edges (caller<TAB>callee)")
            ->required();
    eval_graph->add_option("--beta", beta, "F-beta weight (default 0.5)");

    // eval-leaks ------------------------------------------------------------
    auto* eval_leaks = app.add_subcommand("eval-leaks", "Score leak reports against a manifest");
    std::string manifest, results;
    eval_leaks->add_option("manifest", manifest, "Case manifest JSON")->required();
    eval_leaks->add_option("results", results,
                           "Directory holding <case_id>/report.json")
            ->required();

    try {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? exit_ok : exit_input;
    }

    if (*eval_graph) {
        return cmd_eval_graph(predicted, truth, beta, std::cout);
    }
    if (*eval_leaks) {
        return cmd_eval_leaks(manifest, results, std::cout);
    }

    RunConfig cfg;
    try {
        if (!config_path.empty()) {
            cfg = load_run_config(config_path);
        }
        if (o_smali->count()) {
            cfg.smali_roots.assign(smali.begin(), smali.end());
        }
        if (o_sources->count()) {
            cfg.source_list_path = sources;
        }
        if (o_sinks->count()) {
            cfg.sink_rules_path = sinks;
        }
        if (o_backend->count()) {
            cfg.backend = backend_name == "http" ? BackendKind::Http : BackendKind::Taint;
        }
        // --endpoint beats the environment, which beats the config file.
        if (o_endpoint->count()) {
            cfg.http.endpoint_url = endpoint;
        }
        else if (const char* env = std::getenv("BYTETRACE_ENDPOINT"); env && *env) {
            cfg.http.endpoint_url = env;
        }
        if (o_model->count()) {
            cfg.http.model_name = model;
        }
        if (o_temp->count()) {
            cfg.http.temperature = temperature;
        }
        if (o_ctx->count()) {
            cfg.http.context_window_tokens = ctx;
        }
        if (o_retries->count()) {
            cfg.http.max_retries = max_retries;
        }
        if (o_stop->count()) {
            cfg.explore.stop_on_sink = parse_bool(stop_on_sink);
        }
        if (o_depth->count()) {
            cfg.explore.max_depth = max_depth;
        }
        if (o_nodes->count()) {
            cfg.explore.max_nodes = max_nodes;
        }
        if (o_out->count()) {
            cfg.output_dir = out;
        }
        if (o_jobs->count()) {
            cfg.parallelism = jobs;
        }
        if (o_batch->count()) {
            cfg.batch_dir = batch;
        }
        if (f_all->count()) {
            cfg.all_routes = true;
        }
    }
    catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_input;
    }
    return cmd_analyze(cfg, std::cout);
}
