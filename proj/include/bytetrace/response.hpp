#pragma once

#include "bytetrace/summary.hpp"

#include <nlohmann/json.hpp>

#include <regex>
#include <set>
#include <string>
#include <string_view>

namespace bytetrace {

/// Removes one leading/trailing markdown fence pair, if present.
inline std::string_view strip_code_fence(std::string_view raw)
{
    auto s = detail::trim(raw);
    if (!s.starts_with("```")) {
        return s;
    }
    auto nl = s.find('\n');
    if (nl == std::string_view::npos) {
        return {};
    }
    s = s.substr(nl + 1);
    s = detail::trim(s);
    if (s.ends_with("```")) {
        s.remove_suffix(3);
    }
    return detail::trim(s);
}

namespace detail {
    inline std::string sentence_around(const std::string& text,
                                       std::size_t pos, std::size_t len)
    {
        auto begin = text.rfind(". ", pos);
        begin = begin == std::string::npos ? 0 : begin + 2;
        auto end = text.find(". ", pos + len);
        end = end == std::string::npos ? text.size() : end + 1;
        return std::string(trim(std::string_view(text).substr(begin, end - begin)));
    }
}

/// Recovers sink calls from free summary text: embedded signatures that
/// match a sink rule, plus Java-style "Log.x(" mentions.
inline std::vector<SinkFinding>
extract_sinks_from_text(const std::string& summary,
                        const std::vector<SinkRule>& rules)
{
    static const std::regex sig_re(
            R"(\[*L[^\s;(),"'`]+;->[^\s:(),"'`]+:?\([^\s)]*\)\[*(?:L[^\s;(),"'`]+;|[ZBSCIJFDV]))");
    static const std::regex log_re(R"(\bLog\.([vdiwe])\s*\()");

    std::vector<SinkFinding> found;
    std::set<std::string> seen;
    auto add = [&](MethodRef ref, SinkCategory cat, std::string evidence) {
        if (seen.insert(ref.str()).second) {
            found.push_back({std::move(ref), cat, std::move(evidence)});
        }
    };

    for (auto it = std::sregex_iterator(summary.begin(), summary.end(), sig_re);
         it != std::sregex_iterator(); ++it) {
        auto ref = try_parse_method_ref(it->str());
        if (!ref) {
            continue;
        }
        if (auto cat = match_sink(rules, *ref)) {
            add(*ref, *cat,
                detail::sentence_around(summary, it->position(), it->length()));
        }
    }
    for (auto it = std::sregex_iterator(summary.begin(), summary.end(), log_re);
         it != std::sregex_iterator(); ++it) {
        MethodRef ref{"Landroid/util/Log;", (*it)[1].str(),
                      "Ljava/lang/String;Ljava/lang/String;", "I"};
        if (auto cat = match_sink(rules, ref)) {
            add(ref, *cat,
                detail::sentence_around(summary, it->position(), it->length()));
        }
    }
    return found;
}

struct ResponseOptions {
    std::vector<SinkRule> sink_rules = default_sink_rules();
    bool sink_terminates = true;
    /// Canonical signature of the summarized method, for the drop log.
    std::string method;
};

/// Turns raw model output into a validated SummaryResult.
///
/// Next-method entries are dropped, in this order, when they fail the
/// signature grammar, carry a framework prefix, or are absent from the
/// index. An optional "Sinks" array of {"signature", "category"} objects
/// overrides sink extraction from the summary text.
inline SummaryResult parse_response(std::string_view raw,
                                    const MethodIndex& index,
                                    DropLog& drops,
                                    const ResponseOptions& opts = {})
{
    auto body = strip_code_fence(raw);
    auto open = body.find('{');
    auto close = body.rfind('}');
    if (open == std::string_view::npos || close == std::string_view::npos
        || close < open) {
        throw InvalidResponse("no JSON object in model output");
    }
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(body.substr(open, close - open + 1));
    }
    catch (const nlohmann::json::parse_error& e) {
        throw InvalidResponse(std::string("unparseable JSON: ") + e.what());
    }
    if (!doc.is_object()) {
        throw InvalidResponse("model output is not a JSON object");
    }
    auto summary = doc.find("Summary");
    auto next = doc.find("Next Methods");
    if (summary == doc.end() || !summary->is_string()) {
        throw InvalidResponse("missing string field 'Summary'");
    }
    if (next == doc.end() || !next->is_array()) {
        throw InvalidResponse("missing array field 'Next Methods'");
    }

    SummaryResult result;
    result.summary = summary->get<std::string>();

    std::set<std::string> kept;
    for (const auto& entry : *next) {
        const auto text = entry.is_string() ? entry.get<std::string>()
                                            : entry.dump();
        auto ref = entry.is_string() ? try_parse_method_ref(text)
                                     : std::nullopt;
        if (!ref) {
            drops.add({opts.method, text, DropReason::BadSignature});
        }
        else if (is_framework(*ref)) {
            drops.add({opts.method, text, DropReason::Framework});
        }
        else if (!index.contains(*ref)) {
            drops.add({opts.method, text, DropReason::NotInIndex});
        }
        else if (kept.insert(ref->str()).second) {
            result.next_methods.push_back(*std::move(ref));
        }
    }

    if (auto sinks = doc.find("Sinks"); sinks != doc.end()) {
        if (!sinks->is_array()) {
            throw InvalidResponse("field 'Sinks' must be an array");
        }
        for (const auto& s : *sinks) {
            std::optional<MethodRef> ref;
            std::optional<SinkCategory> cat;
            if (s.is_object() && s.contains("signature")
                && s["signature"].is_string() && s.contains("category")
                && s["category"].is_string()) {
                ref = try_parse_method_ref(s["signature"].get<std::string>());
                cat = parse_sink_category(s["category"].get<std::string>());
            }
            if (!ref || !cat) {
                drops.add({opts.method, s.dump(), DropReason::BadSink});
                continue;
            }
            std::string evidence;
            if (auto ev = s.find("evidence"); ev != s.end() && ev->is_string()) {
                evidence = ev->get<std::string>();
            }
            result.sinks.push_back({*std::move(ref), *cat, std::move(evidence)});
        }
    }
    else {
        result.sinks = extract_sinks_from_text(result.summary, opts.sink_rules);
    }

    result.leak_here = !result.sinks.empty();
    if (result.leak_here && opts.sink_terminates) {
        for (const auto& m : result.next_methods) {
            drops.add({opts.method, m.str(), DropReason::SinkLeaf});
        }
        result.next_methods.clear();
    }
    return result;
}

} // namespace bytetrace
