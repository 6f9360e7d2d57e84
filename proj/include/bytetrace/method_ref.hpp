#pragma once

#include "bytetrace/error.hpp"

#include <array>
#include <compare>
#include <cstddef>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>

namespace bytetrace {

namespace detail {
    inline bool is_primitive(char c, bool allow_void)
    {
        switch (c) {
        case 'Z': case 'B': case 'S': case 'C':
        case 'I': case 'J': case 'F': case 'D':
            return true;
        case 'V':
            return allow_void;
        default:
            return false;
        }
    }

    /// Consumes one type descriptor from the front of `s`. Returns the number
    /// of characters consumed, or 0 when `s` does not start with a descriptor.
    inline std::size_t scan_type(std::string_view s, bool allow_void)
    {
        std::size_t i = 0;
        while (i < s.size() && s[i] == '[') {
            ++i;
            allow_void = false;
        }
        if (i >= s.size()) {
            return 0;
        }
        if (s[i] == 'L') {
            auto semi = s.find(';', i);
            if (semi == std::string_view::npos || semi == i + 1) {
                return 0;
            }
            for (auto k = i + 1; k < semi; ++k) {
                const char c = s[k];
                if (c == '(' || c == ')' || c == ':' || c == ' ' || c == '\t'
                    || c == '>' || c == '[') {
                    return 0;
                }
            }
            return semi + 1;
        }
        return is_primitive(s[i], allow_void) ? i + 1 : 0;
    }

    inline std::string_view trim(std::string_view s)
    {
        const auto ws = " \t\r\n";
        auto b = s.find_first_not_of(ws);
        if (b == std::string_view::npos) {
            return {};
        }
        auto e = s.find_last_not_of(ws);
        return s.substr(b, e - b + 1);
    }
}

/// True when `s` is a sequence of zero or more parameter descriptors.
inline bool is_param_sequence(std::string_view s)
{
    while (!s.empty()) {
        auto n = detail::scan_type(s, false);
        if (n == 0) {
            return false;
        }
        s.remove_prefix(n);
    }
    return true;
}

inline bool is_type_descriptor(std::string_view s, bool allow_void = true)
{
    return !s.empty() && detail::scan_type(s, allow_void) == s.size();
}

/// Fully-qualified method identity: "<class>-><name>:(<params>)<return>".
struct MethodRef {
    std::string class_descriptor;
    std::string name;
    std::string param_descriptor;
    std::string return_descriptor;

    std::string str() const
    {
        std::string out;
        out.reserve(class_descriptor.size() + name.size()
                    + param_descriptor.size() + return_descriptor.size() + 5);
        out += class_descriptor;
        out += "->";
        out += name;
        out += ":(";
        out += param_descriptor;
        out += ')';
        out += return_descriptor;
        return out;
    }

    friend bool operator==(const MethodRef& a, const MethodRef& b)
    {
        return a.str() == b.str();
    }

    friend std::strong_ordering operator<=>(const MethodRef& a,
                                            const MethodRef& b)
    {
        return a.str() <=> b.str();
    }

    friend std::ostream& operator<<(std::ostream& os, const MethodRef& m)
    {
        return os << m.str();
    }
};

/// Splits "<class>-><name>" at the arrow following a valid class descriptor.
/// Returns the name-and-descriptor tail, or nullopt.
inline std::optional<std::pair<std::string_view, std::string_view>>
split_class_member(std::string_view s)
{
    auto n = detail::scan_type(s, false);
    if (n == 0 || s.substr(n, 2) != "->") {
        return std::nullopt;
    }
    return std::pair{s.substr(0, n), s.substr(n + 2)};
}

/// Parses the invoke-operand form "Lc;->m(P)R" or the canonical colon form
/// "Lc;->m:(P)R". Surrounding whitespace is ignored.
inline std::optional<MethodRef> try_parse_method_ref(std::string_view text)
{
    auto s = detail::trim(text);
    auto parts = split_class_member(s);
    if (!parts) {
        return std::nullopt;
    }
    auto [cls, rest] = *parts;
    if (cls.front() != 'L' && cls.front() != '[') {
        return std::nullopt;
    }

    auto open = rest.find('(');
    if (open == std::string_view::npos || open == 0) {
        return std::nullopt;
    }
    auto name = rest.substr(0, open);
    if (name.back() == ':') {
        name.remove_suffix(1);
    }
    if (name.empty()
        || name.find_first_of(":() \t;") != std::string_view::npos) {
        return std::nullopt;
    }

    auto close = rest.find(')', open);
    if (close == std::string_view::npos) {
        return std::nullopt;
    }
    auto params = rest.substr(open + 1, close - open - 1);
    auto ret = rest.substr(close + 1);
    if (!is_param_sequence(params) || !is_type_descriptor(ret)) {
        return std::nullopt;
    }
    return MethodRef{std::string(cls), std::string(name), std::string(params),
                     std::string(ret)};
}

inline MethodRef parse_method_ref(std::string_view text)
{
    if (auto m = try_parse_method_ref(text)) {
        return *std::move(m);
    }
    throw BadSignature("not a method signature: '" + std::string(text) + "'");
}

/// Class prefixes excluded from next-method lists.
inline constexpr std::array<std::string_view, 3> framework_prefixes{
        "Landroid/", "Landroidx/", "Lkotlin/"};

inline bool is_framework_class(std::string_view class_descriptor)
{
    for (auto p : framework_prefixes) {
        if (class_descriptor.starts_with(p)) {
            return true;
        }
    }
    return false;
}

inline bool is_framework(const MethodRef& m)
{
    return is_framework_class(m.class_descriptor);
}

} // namespace bytetrace

template <>
struct std::hash<bytetrace::MethodRef> {
    std::size_t operator()(const bytetrace::MethodRef& m) const noexcept
    {
        return std::hash<std::string>{}(m.str());
    }
};
