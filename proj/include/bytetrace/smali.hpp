#pragma once

#include "bytetrace/error.hpp"
#include "bytetrace/method_ref.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace bytetrace {

/// One Dalvik instruction as written in Smali.
///
/// Only the operands that matter for dataflow are decoded: the register list,
/// the invoked method, the string literal of const-string and the field of
/// field accesses. Everything else is kept in raw_text.
struct Instruction {
    std::string opcode;
    std::vector<std::string> registers;
    std::optional<MethodRef> method_ref;
    std::optional<std::string> string_literal;
    std::optional<std::string> field_ref;
    std::string raw_text;

    bool is_invoke() const { return opcode.starts_with("invoke-"); }

    friend bool operator==(const Instruction&, const Instruction&) = default;
};

struct MethodRecord {
    MethodRef signature;
    std::string class_name;
    std::vector<std::string> access_flags;
    std::vector<Instruction> instructions;
    std::vector<MethodRef> invoked;
    std::string source_file;
    std::size_t source_line = 0;

    bool has_flag(std::string_view flag) const
    {
        return std::find(access_flags.begin(), access_flags.end(), flag)
                != access_flags.end();
    }

    bool is_abstract_or_native() const
    {
        return has_flag("abstract") || has_flag("native");
    }

    friend bool operator==(const MethodRecord&, const MethodRecord&) = default;
};

/// App-wide method table keyed by canonical signature. Built once, then
/// read-only.
class MethodIndex {
public:
    using map_type = std::map<std::string, MethodRecord, std::less<>>;

    MethodIndex() = default;

    const MethodRecord* find(std::string_view signature) const
    {
        auto it = methods_.find(signature);
        return it == methods_.end() ? nullptr : &it->second;
    }

    const MethodRecord* find(const MethodRef& m) const { return find(m.str()); }

    bool contains(const MethodRef& m) const { return find(m) != nullptr; }
    bool contains(std::string_view signature) const
    {
        return find(signature) != nullptr;
    }

    const map_type& methods() const noexcept { return methods_; }
    std::size_t method_count() const noexcept { return methods_.size(); }
    std::size_t class_count() const noexcept { return class_count_; }

    friend bool operator==(const MethodIndex&, const MethodIndex&) = default;

private:
    friend MethodIndex build_index(std::vector<MethodRecord> records);

    map_type methods_;
    std::size_t class_count_ = 0;
};

namespace detail {
    inline bool is_register(std::string_view s)
    {
        if (s.size() < 2 || (s[0] != 'v' && s[0] != 'p')) {
            return false;
        }
        return std::all_of(s.begin() + 1, s.end(),
                           [](char c) { return c >= '0' && c <= '9'; });
    }

    inline bool is_opcode(std::string_view s)
    {
        if (s.empty() || s[0] < 'a' || s[0] > 'z') {
            return false;
        }
        return std::all_of(s.begin(), s.end(), [](char c) {
            return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-'
                    || c == '/';
        });
    }

    /// Drops a trailing "# comment" that is not inside a string literal.
    inline std::string_view strip_comment(std::string_view line)
    {
        bool in_string = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            const char c = line[i];
            if (in_string) {
                if (c == '\\') {
                    ++i;
                }
                else if (c == '"') {
                    in_string = false;
                }
            }
            else if (c == '"') {
                in_string = true;
            }
            else if (c == '#') {
                return trim(line.substr(0, i));
            }
        }
        return line;
    }

    /// Splits on commas outside quotes and braces.
    inline std::vector<std::string_view> split_operands(std::string_view s)
    {
        std::vector<std::string_view> out;
        bool in_string = false;
        int depth = 0;
        std::size_t start = 0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            const char c = s[i];
            if (in_string) {
                if (c == '\\') {
                    ++i;
                }
                else if (c == '"') {
                    in_string = false;
                }
                continue;
            }
            if (c == '"') {
                in_string = true;
            }
            else if (c == '{' || c == '(') {
                ++depth;
            }
            else if (c == '}' || c == ')') {
                --depth;
            }
            else if (c == ',' && depth == 0) {
                out.push_back(trim(s.substr(start, i - start)));
                start = i + 1;
            }
        }
        auto last = trim(s.substr(start));
        if (!last.empty() || !out.empty()) {
            out.push_back(last);
        }
        return out;
    }

    inline std::optional<std::string> unquote(std::string_view s)
    {
        if (s.size() < 2 || s.front() != '"' || s.back() != '"') {
            return std::nullopt;
        }
        s = s.substr(1, s.size() - 2);
        std::string out;
        out.reserve(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i] != '\\' || i + 1 == s.size()) {
                out += s[i];
                continue;
            }
            const char e = s[++i];
            switch (e) {
            case 'n': out += '\n'; break;
            case 't': out += '\t'; break;
            case 'r': out += '\r'; break;
            case 'b': out += '\b'; break;
            case 'f': out += '\f'; break;
            case 'u':
                // Non-ASCII escapes stay as written.
                out += "\\u";
                break;
            default: out += e; break;
            }
        }
        return out;
    }

    /// Expands "{v0, v1}" or "{v0 .. v3}" into register names.
    inline std::optional<std::vector<std::string>>
    parse_register_list(std::string_view braced)
    {
        std::vector<std::string> regs;
        auto inner = trim(braced.substr(1, braced.size() - 2));
        if (inner.empty()) {
            return regs;
        }
        if (auto dots = inner.find(".."); dots != std::string_view::npos) {
            auto first = trim(inner.substr(0, dots));
            auto last = trim(inner.substr(dots + 2));
            if (!is_register(first) || !is_register(last)
                || first[0] != last[0]) {
                return std::nullopt;
            }
            const int lo = std::stoi(std::string(first.substr(1)));
            const int hi = std::stoi(std::string(last.substr(1)));
            if (hi < lo) {
                return std::nullopt;
            }
            for (int r = lo; r <= hi; ++r) {
                regs.push_back(first[0] + std::to_string(r));
            }
            return regs;
        }
        for (auto tok : split_operands(inner)) {
            if (!is_register(tok)) {
                return std::nullopt;
            }
            regs.emplace_back(tok);
        }
        return regs;
    }

    inline bool is_field_op(std::string_view op)
    {
        return op.starts_with("iget") || op.starts_with("iput")
                || op.starts_with("sget") || op.starts_with("sput");
    }

    class SmaliParser {
    public:
        SmaliParser(std::string path, std::string_view text)
            : path_(std::move(path)), text_(text)
        {
        }

        std::vector<MethodRecord> run()
        {
            std::vector<MethodRecord> out;
            std::string_view rest = text_;
            while (next_line(rest)) {
                auto line = trim(current_);
                if (line.starts_with(".class")) {
                    if (!class_name_.empty()) {
                        fail("second .class directive");
                    }
                    auto tokens = words(line);
                    if (tokens.size() < 2
                        || !is_type_descriptor(tokens.back(), false)) {
                        fail("bad .class directive");
                    }
                    class_name_ = std::string(tokens.back());
                }
                else if (line.starts_with(".method")) {
                    if (class_name_.empty()) {
                        fail(".method before .class directive");
                    }
                    out.push_back(parse_method(line, rest));
                }
                else if (line.starts_with(".end method")) {
                    fail(".end method without .method");
                }
            }
            if (class_name_.empty()) {
                line_no_ = 1;
                fail("missing .class directive");
            }
            return out;
        }

    private:
        bool next_line(std::string_view& rest)
        {
            if (rest.empty()) {
                return false;
            }
            auto nl = rest.find('\n');
            current_ = rest.substr(0, nl);
            if (!current_.empty() && current_.back() == '\r') {
                current_.remove_suffix(1);
            }
            rest = nl == std::string_view::npos ? std::string_view{}
                                                : rest.substr(nl + 1);
            ++line_no_;
            return true;
        }

        [[noreturn]] void fail(const std::string& what) const
        {
            throw MalformedSmali(path_, line_no_, what);
        }

        static std::vector<std::string_view> words(std::string_view s)
        {
            std::vector<std::string_view> out;
            std::size_t i = 0;
            while (i < s.size()) {
                while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) {
                    ++i;
                }
                auto j = i;
                while (j < s.size() && s[j] != ' ' && s[j] != '\t') {
                    ++j;
                }
                if (j > i) {
                    out.push_back(s.substr(i, j - i));
                }
                i = j;
            }
            return out;
        }

        MethodRecord parse_method(std::string_view header,
                                  std::string_view& rest)
        {
            const auto start_line = line_no_;
            auto tokens = words(strip_comment(header));
            if (tokens.size() < 2) {
                fail("bad .method directive");
            }
            MethodRecord rec;
            rec.class_name = class_name_;
            rec.source_file = path_;
            rec.source_line = start_line;
            for (std::size_t i = 1; i + 1 < tokens.size(); ++i) {
                rec.access_flags.emplace_back(tokens[i]);
            }
            auto sig = try_parse_method_ref(class_name_ + "->"
                                            + std::string(tokens.back()));
            if (!sig) {
                fail("bad method signature '" + std::string(tokens.back())
                     + "'");
            }
            rec.signature = *std::move(sig);

            // Payload blocks whose lines are data, not instructions.
            std::string skip_until;
            int annotation_depth = 0;
            bool closed = false;
            while (next_line(rest)) {
                auto line = trim(current_);
                if (annotation_depth > 0) {
                    if (line.starts_with(".annotation")
                        || line.starts_with(".subannotation")) {
                        ++annotation_depth;
                    }
                    else if (line.starts_with(".end annotation")
                             || line.starts_with(".end subannotation")) {
                        --annotation_depth;
                    }
                    continue;
                }
                if (!skip_until.empty()) {
                    if (line.starts_with(skip_until)) {
                        skip_until.clear();
                    }
                    continue;
                }
                if (line.empty() || line[0] == '#' || line[0] == ':') {
                    continue;
                }
                if (line[0] == '.') {
                    if (line.starts_with(".end method")) {
                        closed = true;
                        break;
                    }
                    if (line.starts_with(".method")
                        || line.starts_with(".class")) {
                        line_no_ = start_line;
                        fail("unterminated .method block");
                    }
                    if (line.starts_with(".annotation")
                        || line.starts_with(".subannotation")) {
                        annotation_depth = 1;
                    }
                    else if (line.starts_with(".packed-switch")) {
                        skip_until = ".end packed-switch";
                    }
                    else if (line.starts_with(".sparse-switch")) {
                        skip_until = ".end sparse-switch";
                    }
                    else if (line.starts_with(".array-data")) {
                        skip_until = ".end array-data";
                    }
                    continue;
                }
                rec.instructions.push_back(parse_instruction(line));
                if (auto& m = rec.instructions.back().method_ref) {
                    rec.invoked.push_back(*m);
                }
            }
            if (!closed) {
                line_no_ = start_line;
                fail("unterminated .method block");
            }
            if (rec.is_abstract_or_native() != rec.instructions.empty()) {
                line_no_ = start_line;
                fail(rec.instructions.empty()
                             ? "concrete method without instructions"
                             : "abstract or native method with instructions");
            }
            return rec;
        }

        Instruction parse_instruction(std::string_view line)
        {
            Instruction ins;
            ins.raw_text = std::string(line);
            auto code = strip_comment(line);
            auto ws = code.find_first_of(" \t");
            auto opcode = code.substr(0, ws);
            if (!is_opcode(opcode)) {
                fail("unrecognized instruction '" + std::string(line) + "'");
            }
            ins.opcode = std::string(opcode);
            auto operands = ws == std::string_view::npos
                    ? std::string_view{}
                    : trim(code.substr(ws));
            auto parts = split_operands(operands);

            std::size_t next = 0;
            if (!parts.empty() && parts[0].starts_with("{")) {
                if (!parts[0].ends_with("}")) {
                    fail("unterminated register list");
                }
                auto regs = parse_register_list(parts[0]);
                if (!regs) {
                    fail("bad register list '" + std::string(parts[0]) + "'");
                }
                ins.registers = *std::move(regs);
                next = 1;
            }
            else {
                while (next < parts.size() && is_register(parts[next])) {
                    ins.registers.emplace_back(parts[next]);
                    ++next;
                }
            }

            // invoke-custom names a call site, not a method.
            if (ins.is_invoke() && !ins.opcode.starts_with("invoke-custom")) {
                if (next >= parts.size()) {
                    fail("invoke without target");
                }
                auto target = try_parse_method_ref(parts[next]);
                if (!target) {
                    fail("bad invoke target '" + std::string(parts[next])
                         + "'");
                }
                ins.method_ref = *std::move(target);
            }
            else if (ins.opcode.starts_with("const-string")) {
                if (next >= parts.size()
                    || !(ins.string_literal = unquote(parts[next]))) {
                    fail("const-string without literal");
                }
            }
            else if (is_field_op(ins.opcode)) {
                if (next >= parts.size()
                    || parts.back().find("->") == std::string_view::npos) {
                    fail("field access without field reference");
                }
                ins.field_ref = std::string(parts.back());
            }
            return ins;
        }

        std::string path_;
        std::string_view text_;
        std::string_view current_;
        std::size_t line_no_ = 0;
        std::string class_name_;
    };
}

/// Parses one .smali file into its method records, in source order.
inline std::vector<MethodRecord> parse_smali_file(const std::string& path,
                                                  std::string_view text)
{
    return detail::SmaliParser(path, text).run();
}

inline MethodIndex build_index(std::vector<MethodRecord> records)
{
    MethodIndex index;
    std::set<std::string> classes;
    for (auto& rec : records) {
        auto key = rec.signature.str();
        classes.insert(rec.class_name);
        auto [it, inserted] = index.methods_.try_emplace(key);
        if (!inserted) {
            throw DuplicateMethod(key, it->second.source_file, rec.source_file);
        }
        it->second = std::move(rec);
    }
    index.class_count_ = classes.size();
    return index;
}

inline std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw BadConfig("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// All *.smali files below the given roots, sorted for deterministic order.
inline std::vector<std::filesystem::path>
list_smali_files(const std::vector<std::filesystem::path>& roots)
{
    namespace fs = std::filesystem;
    std::vector<fs::path> files;
    for (const auto& root : roots) {
        if (fs::is_regular_file(root) && root.extension() == ".smali") {
            files.push_back(root);
            continue;
        }
        if (!fs::is_directory(root)) {
            throw BadConfig("smali root is not a directory: " + root.string());
        }
        for (const auto& entry : fs::recursive_directory_iterator(root)) {
            if (entry.is_regular_file() && entry.path().extension() == ".smali") {
                files.push_back(entry.path());
            }
        }
    }
    std::sort(files.begin(), files.end());
    return files;
}

/// Parses every .smali file under `roots` (multidex directories included)
/// with up to `jobs` threads and builds the index.
inline MethodIndex
load_smali_tree(const std::vector<std::filesystem::path>& roots,
                unsigned jobs = 1)
{
    auto files = list_smali_files(roots);
    std::vector<std::vector<MethodRecord>> parsed(files.size());
    std::vector<std::exception_ptr> errors(files.size());
    std::atomic<std::size_t> cursor{0};

    auto worker = [&] {
        for (auto i = cursor++; i < files.size(); i = cursor++) {
            try {
                parsed[i] = parse_smali_file(files[i].string(),
                                             read_file(files[i]));
            }
            catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    jobs = std::max(1u, std::min<unsigned>(jobs, files.size()));
    if (jobs == 1) {
        worker();
    }
    else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < jobs; ++t) {
            pool.emplace_back(worker);
        }
    }
    for (auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }

    std::vector<MethodRecord> all;
    for (auto& v : parsed) {
        std::move(v.begin(), v.end(), std::back_inserter(all));
    }
    return build_index(std::move(all));
}

} // namespace bytetrace
