#pragma once

#include "bytetrace/error.hpp"
#include "bytetrace/method_ref.hpp"
#include "bytetrace/smali.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace bytetrace {

/// A source-list selector. Without a descriptor it matches every overload
/// of `name` on `class_descriptor`.
struct ApiSignature {
    std::string class_descriptor;
    std::string name;
    std::optional<std::string> param_descriptor;
    std::optional<std::string> return_descriptor;

    bool has_descriptor() const { return param_descriptor.has_value(); }

    bool matches(const MethodRef& m) const
    {
        if (m.class_descriptor != class_descriptor || m.name != name) {
            return false;
        }
        return !has_descriptor()
                || (m.param_descriptor == *param_descriptor
                    && m.return_descriptor == *return_descriptor);
    }

    std::string str() const
    {
        auto s = class_descriptor + "->" + name;
        if (has_descriptor()) {
            s += ":(" + *param_descriptor + ")" + *return_descriptor;
        }
        return s;
    }

    friend bool operator==(const ApiSignature&, const ApiSignature&) = default;
};

inline std::optional<ApiSignature> try_parse_api_signature(std::string_view text)
{
    auto s = detail::trim(text);
    if (s.find('(') != std::string_view::npos) {
        auto m = try_parse_method_ref(s);
        if (!m) {
            return std::nullopt;
        }
        return ApiSignature{m->class_descriptor, m->name, m->param_descriptor,
                            m->return_descriptor};
    }
    auto parts = split_class_member(s);
    if (!parts || parts->first.front() != 'L') {
        return std::nullopt;
    }
    auto name = parts->second;
    if (name.empty()
        || name.find_first_of(":() \t;") != std::string_view::npos) {
        return std::nullopt;
    }
    return ApiSignature{std::string(parts->first), std::string(name),
                        std::nullopt, std::nullopt};
}

struct SensitiveApi {
    ApiSignature signature;
    std::string data_type;

    friend bool operator==(const SensitiveApi&, const SensitiveApi&) = default;
};

/// A call site of a sensitive API; the root of one dataflow exploration.
struct RootSite {
    MethodRef method;
    SensitiveApi api;
    std::size_t instruction_offset = 0;

    friend bool operator==(const RootSite&, const RootSite&) = default;
};

inline std::vector<SensitiveApi> parse_source_list(const nlohmann::json& doc)
{
    if (!doc.is_array()) {
        throw BadConfig("source list: top level must be an array");
    }
    std::vector<SensitiveApi> apis;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const auto& entry = doc[i];
        const auto where = "source list entry " + std::to_string(i);
        if (!entry.is_object()) {
            throw BadConfig(where + ": must be an object");
        }
        auto sig = entry.find("signature");
        if (sig == entry.end() || !sig->is_string()) {
            throw BadConfig(where + ": field 'signature' must be a string");
        }
        auto dt = entry.find("data_type");
        if (dt == entry.end() || !dt->is_string()
            || dt->get<std::string>().empty()) {
            throw BadConfig(where
                            + ": field 'data_type' must be a non-empty string");
        }
        auto parsed = try_parse_api_signature(sig->get<std::string>());
        if (!parsed) {
            throw BadConfig(where + ": field 'signature' is not a method "
                            "signature: '" + sig->get<std::string>() + "'");
        }
        apis.push_back({*std::move(parsed), dt->get<std::string>()});
    }
    return apis;
}

inline std::vector<SensitiveApi>
load_source_list(const std::filesystem::path& path)
{
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(read_file(path));
    }
    catch (const nlohmann::json::parse_error& e) {
        throw BadConfig(path.string() + ": " + e.what());
    }
    try {
        return parse_source_list(doc);
    }
    catch (const BadConfig& e) {
        throw BadConfig(path.string() + ": " + e.what());
    }
}

/// Every invoke of a listed API, ordered by caller signature then offset.
/// The first matching list entry wins when several match one call.
inline std::vector<RootSite> find_roots(const MethodIndex& index,
                                        const std::vector<SensitiveApi>& apis)
{
    std::vector<RootSite> roots;
    for (const auto& [key, rec] : index.methods()) {
        for (std::size_t i = 0; i < rec.instructions.size(); ++i) {
            const auto& target = rec.instructions[i].method_ref;
            if (!target) {
                continue;
            }
            for (const auto& api : apis) {
                if (api.signature.matches(*target)) {
                    roots.push_back({rec.signature, api, i});
                    break;
                }
            }
        }
    }
    return roots;
}

} // namespace bytetrace
