#pragma once

#include "bytetrace/backend.hpp"
#include "bytetrace/d2cfg.hpp"
#include "bytetrace/evalkit.hpp"
#include "bytetrace/method_ref.hpp"
#include "bytetrace/prompt.hpp"
#include "bytetrace/report.hpp"
#include "bytetrace/response.hpp"
#include "bytetrace/smali.hpp"
#include "bytetrace/sources.hpp"
#include "bytetrace/summary.hpp"
#include "bytetrace/taint_backend.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#ifndef BYTETRACE_FIXTURES
#define BYTETRACE_FIXTURES "fixtures"
#endif

namespace bt_test {

namespace fs = std::filesystem;
using namespace bytetrace;

inline fs::path fixtures() { return BYTETRACE_FIXTURES; }
inline fs::path app_dir(const std::string& name) { return fixtures() / "apps" / name; }

inline MethodIndex load_app(const std::string& name)
{
    return load_smali_tree({app_dir(name)});
}

inline MethodIndex index_from(const std::string& smali, const std::string& path = "inline.smali")
{
    return build_index(parse_smali_file(path, smali));
}

inline std::vector<SensitiveApi> default_sources()
{
    return load_source_list(fs::path(BYTETRACE_DATA_DIR) / "sources.json");
}

inline SensitiveApi api(const std::string& sig, const std::string& data_type)
{
    return {*try_parse_api_signature(sig), data_type};
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag)
    {
        static std::atomic<int> counter{0};
        std::random_device rd;
        path_ = fs::temp_directory_path()
                / ("bytetrace-" + tag + "-" + std::to_string(rd()) + "-"
                   + std::to_string(counter++));
        fs::create_directories(path_);
    }
    ~TempDir()
    {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& rel) const { return path_ / rel; }

private:
    fs::path path_;
};

inline void write_text(const fs::path& p, const std::string& text)
{
    fs::create_directories(p.parent_path());
    std::ofstream(p, std::ios::binary) << text;
}

/// Backend that answers from a table of canned raw model outputs, run
/// through the same response parser as the HTTP backend.
class ScriptedBackend : public SummarizerBackend {
public:
    std::map<std::string, std::string> replies;
    std::string fallback = R"({"Summary": "nothing", "Next Methods": []})";
    std::atomic<int> calls{0};
    /// Throw BackendUnavailable when this method is summarized.
    std::string fail_on;

    std::string identity() const override { return "scripted"; }

    SummaryResult summarize(const SummaryRequest& req, const MethodIndex& index,
                            DropLog& drops) override
    {
        ++calls;
        const auto sig = req.record().signature.str();
        if (sig == fail_on) {
            throw BackendUnavailable("scripted outage at " + sig);
        }
        auto it = replies.find(sig);
        ResponseOptions opts;
        opts.sink_terminates = req.sink_terminates;
        opts.method = sig;
        return parse_response(it == replies.end() ? fallback : it->second, index,
                              drops, opts);
    }
};

inline RootSite only_root(const MethodIndex& index)
{
    auto roots = find_roots(index, default_sources());
    if (roots.size() != 1) {
        throw std::runtime_error("expected exactly one root, got "
                                 + std::to_string(roots.size()));
    }
    return roots.front();
}

inline std::string slurp(const fs::path& p) { return read_file(p); }

} // namespace bt_test
