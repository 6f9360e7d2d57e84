#pragma once

#include "bytetrace/error.hpp"
#include "bytetrace/method_ref.hpp"
#include "bytetrace/smali.hpp"
#include "bytetrace/sources.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bytetrace {

enum class SinkCategory { Logging, Storage, Transmission };

inline std::string_view to_string(SinkCategory c)
{
    switch (c) {
    case SinkCategory::Logging: return "Logging";
    case SinkCategory::Storage: return "Storage";
    case SinkCategory::Transmission: return "Transmission";
    }
    return "Logging";
}

inline std::optional<SinkCategory> parse_sink_category(std::string_view s)
{
    if (s == "Logging") {
        return SinkCategory::Logging;
    }
    if (s == "Storage") {
        return SinkCategory::Storage;
    }
    if (s == "Transmission") {
        return SinkCategory::Transmission;
    }
    return std::nullopt;
}

struct SinkFinding {
    MethodRef sink_ref;
    SinkCategory category = SinkCategory::Logging;
    std::string evidence;

    friend bool operator==(const SinkFinding&, const SinkFinding&) = default;
};

/// Validated output of one method summarization.
struct SummaryResult {
    std::string summary;
    std::vector<MethodRef> next_methods;
    std::vector<SinkFinding> sinks;
    bool leak_here = false;

    friend bool operator==(const SummaryResult&, const SummaryResult&) = default;
};

inline nlohmann::ordered_json to_json(const SummaryResult& r)
{
    nlohmann::ordered_json j;
    j["Summary"] = r.summary;
    auto& next = j["Next Methods"] = nlohmann::ordered_json::array();
    for (const auto& m : r.next_methods) {
        next.push_back(m.str());
    }
    auto& sinks = j["Sinks"] = nlohmann::ordered_json::array();
    for (const auto& s : r.sinks) {
        sinks.push_back({{"signature", s.sink_ref.str()},
                         {"category", to_string(s.category)},
                         {"evidence", s.evidence}});
    }
    j["Leak"] = r.leak_here;
    return j;
}

struct SummaryRequest {
    std::reference_wrapper<const MethodRecord> method;
    std::string previous_summary;
    std::string target_data_type;
    SensitiveApi root_api;
    /// When set, a sink hit empties the next-method list.
    bool sink_terminates = true;

    const MethodRecord& record() const { return method.get(); }
};

/// Matches sink calls either by class prefix ("Ljava/net/") or by a full
/// canonical signature.
struct SinkRule {
    std::string match;
    SinkCategory category = SinkCategory::Logging;

    bool is_signature() const
    {
        return match.find("->") != std::string::npos;
    }

    bool matches(const MethodRef& m) const
    {
        if (is_signature()) {
            return m.str() == match;
        }
        return m.class_descriptor.starts_with(match);
    }

    friend bool operator==(const SinkRule&, const SinkRule&) = default;
};

inline std::vector<SinkRule> default_sink_rules()
{
    return {
            {"Landroid/util/Log;", SinkCategory::Logging},
            {"Ljava/io/", SinkCategory::Storage},
            {"Landroid/content/SharedPreferences", SinkCategory::Storage},
            {"Ljava/net/", SinkCategory::Transmission},
            {"Lorg/apache/http/", SinkCategory::Transmission},
            {"Lcom/google/android/gms/wearable/", SinkCategory::Transmission},
    };
}

/// First matching rule wins.
inline std::optional<SinkCategory> match_sink(const std::vector<SinkRule>& rules,
                                              const MethodRef& m)
{
    for (const auto& r : rules) {
        if (r.matches(m)) {
            return r.category;
        }
    }
    return std::nullopt;
}

inline std::vector<SinkRule> parse_sink_rules(const nlohmann::json& doc)
{
    if (!doc.is_array()) {
        throw BadConfig("sink rules: top level must be an array");
    }
    std::vector<SinkRule> rules;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const auto& e = doc[i];
        const auto where = "sink rule " + std::to_string(i);
        if (!e.is_object()) {
            throw BadConfig(where + ": must be an object");
        }
        auto m = e.find("match");
        if (m == e.end() || !m->is_string() || m->get<std::string>().empty()) {
            throw BadConfig(where + ": field 'match' must be a non-empty string");
        }
        auto c = e.find("category");
        std::optional<SinkCategory> cat;
        if (c != e.end() && c->is_string()) {
            cat = parse_sink_category(c->get<std::string>());
        }
        if (!cat) {
            throw BadConfig(where + ": field 'category' must be one of "
                            "Logging, Storage, Transmission");
        }
        SinkRule rule{m->get<std::string>(), *cat};
        if (rule.is_signature()) {
            auto ref = try_parse_method_ref(rule.match);
            if (!ref) {
                throw BadConfig(where + ": field 'match' is not a method "
                                "signature: '" + rule.match + "'");
            }
            rule.match = ref->str();
        }
        rules.push_back(std::move(rule));
    }
    return rules;
}

inline std::vector<SinkRule> load_sink_rules(const std::filesystem::path& path)
{
    try {
        return parse_sink_rules(nlohmann::json::parse(read_file(path)));
    }
    catch (const nlohmann::json::parse_error& e) {
        throw BadConfig(path.string() + ": " + e.what());
    }
    catch (const BadConfig& e) {
        throw BadConfig(path.string() + ": " + e.what());
    }
}

/// Why a reported method was discarded.
enum class DropReason { BadSignature, Framework, NotInIndex, SinkLeaf, BadSink };

inline std::string_view to_string(DropReason r)
{
    switch (r) {
    case DropReason::BadSignature: return "bad-signature";
    case DropReason::Framework: return "framework";
    case DropReason::NotInIndex: return "hallucination";
    case DropReason::SinkLeaf: return "sink-leaf";
    case DropReason::BadSink: return "bad-sink";
    }
    return "unknown";
}

struct DropEntry {
    std::string method;     ///< method being summarized
    std::string entry;      ///< the discarded text as reported
    DropReason reason;

    friend bool operator==(const DropEntry&, const DropEntry&) = default;
};

/// Thread-safe record of everything the response filters discarded.
class DropLog {
public:
    void add(DropEntry e)
    {
        std::lock_guard lock(mutex_);
        entries_.push_back(std::move(e));
    }

    std::vector<DropEntry> entries() const
    {
        std::lock_guard lock(mutex_);
        return entries_;
    }

    std::size_t count(DropReason r) const
    {
        std::lock_guard lock(mutex_);
        return static_cast<std::size_t>(std::count_if(
                entries_.begin(), entries_.end(),
                [r](const DropEntry& e) { return e.reason == r; }));
    }

private:
    mutable std::mutex mutex_;
    std::vector<DropEntry> entries_;
};

} // namespace bytetrace
