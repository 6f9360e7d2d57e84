#pragma once

#include "bytetrace/backend.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace bytetrace {

/// Register and field taint within one method body.
struct TaintState {
    std::set<std::string> tainted_registers;
    std::set<std::string> tainted_fields;
    SensitiveApi origin;

    bool is_tainted(const std::string& reg) const
    {
        return tainted_registers.contains(reg);
    }

    void set(const std::string& reg, bool tainted)
    {
        if (tainted) {
            tainted_registers.insert(reg);
        }
        else {
            tainted_registers.erase(reg);
        }
    }

    bool any_tainted(const std::vector<std::string>& regs) const
    {
        return std::any_of(regs.begin(), regs.end(),
                           [this](const auto& r) { return is_tainted(r); });
    }
};

inline constexpr std::string_view tainted_params_tag = "TAINTED-PARAMS";

/// Renders the machine-readable trailer naming the tainted parameter
/// registers of `callee`: "TAINTED-PARAMS(<sig>):[p0,p2]".
inline std::string format_tainted_params(const MethodRef& callee,
                                         const std::vector<std::string>& regs)
{
    std::string s(tainted_params_tag);
    s += "(" + callee.str() + "):[";
    for (std::size_t i = 0; i < regs.size(); ++i) {
        s += (i ? "," : "") + regs[i];
    }
    return s + "]";
}

/// Parameter registers that a previous summary marks as tainted for
/// `method`. Both the keyed form and a bare "TAINTED-PARAMS:[...]" (which
/// applies to any method) are recognized.
inline std::set<std::string> parse_tainted_params(std::string_view summary,
                                                  const MethodRef& method)
{
    std::set<std::string> regs;
    const auto self = method.str();
    std::size_t pos = 0;
    while ((pos = summary.find(tainted_params_tag, pos)) != std::string_view::npos) {
        pos += tainted_params_tag.size();
        bool applies = true;
        if (pos < summary.size() && summary[pos] == '(') {
            auto end = summary.find("):[", pos);
            if (end == std::string_view::npos) {
                continue;
            }
            applies = summary.substr(pos + 1, end - pos - 1) == self;
            pos = end + 1;
        }
        if (summary.substr(pos, 2) != ":[") {
            continue;
        }
        auto close = summary.find(']', pos);
        if (close == std::string_view::npos) {
            break;
        }
        auto list = summary.substr(pos + 2, close - pos - 2);
        pos = close;
        if (!applies) {
            continue;
        }
        for (auto tok : detail::split_operands(list)) {
            if (detail::is_register(tok) && tok[0] == 'p') {
                regs.emplace(tok);
            }
        }
    }
    return regs;
}

namespace detail {
    inline bool is_binary_op(std::string_view op)
    {
        for (auto p : {"add-", "sub-", "rsub-", "mul-", "div-", "rem-", "and-",
                       "or-", "xor-", "shl-", "shr-", "ushr-", "cmp"}) {
            if (op.starts_with(p)) {
                return true;
            }
        }
        return false;
    }

    inline std::string short_name(const MethodRef& m) { return m.name + "()"; }

    /// Collects summary sentences in order, without repeats.
    class Narrative {
    public:
        void add(std::string sentence)
        {
            if (seen_.insert(sentence).second) {
                lines_.push_back(std::move(sentence));
            }
        }

        bool empty() const { return lines_.empty(); }

        std::string join() const
        {
            std::string out;
            for (const auto& l : lines_) {
                out += (out.empty() ? "" : " ") + l;
            }
            return out;
        }

    private:
        std::vector<std::string> lines_;
        std::set<std::string> seen_;
    };
}

/// Deterministic single forward pass over the instruction list.
///
/// Taint enters through the root API's result, through parameters named by
/// the previous summary's trailer, and moves through moves, conversions,
/// arithmetic, arrays and fields. Any call that receives a tainted register
/// yields a tainted result; framework calls also taint their receiver. A
/// tainted call to a sink rule is a finding; one to an indexed app method
/// becomes a next method. Branches are not modelled.
inline SummaryResult taint_summarize(const MethodRecord& method,
                                     const SummaryRequest& req,
                                     const std::vector<SinkRule>& rules,
                                     const MethodIndex& index)
{
    TaintState st;
    st.origin = req.root_api;
    const auto& data_type = req.target_data_type;

    detail::Narrative story;
    SummaryResult result;
    std::map<std::string, std::vector<std::string>> param_taint;
    bool returns_tainted = false;

    auto pre = parse_tainted_params(req.previous_summary, method.signature);
    for (const auto& r : pre) {
        st.set(r, true);
    }
    if (!pre.empty()) {
        std::string regs;
        for (const auto& r : pre) {
            regs += (regs.empty() ? "" : ", ") + r;
        }
        story.add("Sensitive " + data_type
                  + " data arrives through parameter register(s) " + regs
                  + " as described by the previous summary.");
    }

    bool pending = false;
    for (const auto& ins : method.instructions) {
        const auto& op = ins.opcode;
        const auto& regs = ins.registers;
        auto reg = [&](std::size_t i) -> const std::string& {
            static const std::string none;
            return i < regs.size() ? regs[i] : none;
        };
        auto t = [&](std::size_t i) { return i < regs.size() && st.is_tainted(regs[i]); };

        if (op.starts_with("move-result")) {
            if (!regs.empty()) {
                st.set(regs[0], pending);
            }
            pending = false;
            continue;
        }
        pending = false;

        if (ins.method_ref) {
            const auto& target = *ins.method_ref;
            const bool tainted_args = st.any_tainted(regs);
            if (req.root_api.signature.matches(target)) {
                pending = true;
                story.add("Sensitive " + data_type + " data is retrieved by "
                          "calling " + detail::short_name(target) + " ("
                          + target.str() + ").");
            }
            else if (!tainted_args) {
                continue;
            }
            else if (auto cat = match_sink(rules, target)) {
                result.sinks.push_back({target, *cat, ins.raw_text});
                story.add("The data reaches a " + std::string(to_string(*cat))
                          + " sink: " + target.str() + ".");
            }
            else if (!is_framework(target) && index.contains(target)) {
                pending = true;
                auto [it, first] = param_taint.try_emplace(target.str());
                if (first) {
                    result.next_methods.push_back(target);
                }
                auto& positions = it->second;
                for (std::size_t i = 0; i < regs.size(); ++i) {
                    auto p = "p" + std::to_string(i);
                    if (st.is_tainted(regs[i])
                        && std::find(positions.begin(), positions.end(), p)
                                == positions.end()) {
                        positions.push_back(p);
                    }
                }
                story.add("The data is passed to " + detail::short_name(target)
                          + " (" + target.str() + ").");
            }
            else {
                pending = true;
                if (!op.starts_with("invoke-static") && !regs.empty()) {
                    st.set(regs[0], true);
                }
            }
            continue;
        }
        if (op.starts_with("filled-new-array")) {
            pending = st.any_tainted(regs);
            continue;
        }
        if (op == "move-exception" || op.starts_with("const")
            || op == "new-instance" || op == "new-array"
            || op == "instance-of") {
            if (!regs.empty()) {
                st.set(regs[0], false);
            }
        }
        else if (op.starts_with("move")) {
            if (regs.size() >= 2) {
                st.set(regs[0], t(1));
            }
        }
        else if (op == "array-length" || op.find("-to-") != std::string::npos
                 || op.starts_with("neg-") || op.starts_with("not-")) {
            if (regs.size() >= 2) {
                st.set(regs[0], t(1));
            }
        }
        else if (op.starts_with("aget")) {
            if (regs.size() >= 2) {
                st.set(regs[0], t(1));
            }
        }
        else if (op.starts_with("aput")) {
            if (regs.size() >= 2 && t(0)) {
                st.set(regs[1], true);
            }
        }
        else if (op.starts_with("iget") || op.starts_with("sget")) {
            if (!regs.empty() && ins.field_ref) {
                const bool object_tainted = op.starts_with("iget") && t(1);
                st.set(regs[0], st.tainted_fields.contains(*ins.field_ref)
                                        || object_tainted);
            }
        }
        else if (op.starts_with("iput") || op.starts_with("sput")) {
            if (!regs.empty() && ins.field_ref) {
                if (t(0)) {
                    st.tainted_fields.insert(*ins.field_ref);
                    story.add("The data is stored in field " + *ins.field_ref
                              + ".");
                }
                else {
                    st.tainted_fields.erase(*ins.field_ref);
                }
            }
        }
        else if (detail::is_binary_op(op)) {
            if (op.find("/2addr") != std::string::npos) {
                st.set(reg(0), t(0) || t(1));
            }
            else if (regs.size() >= 3) {
                st.set(regs[0], t(1) || t(2));
            }
            else if (regs.size() == 2) {
                st.set(regs[0], t(1));
            }
        }
        else if (op.starts_with("return")) {
            if (t(0)) {
                returns_tainted = true;
            }
        }
    }

    if (returns_tainted) {
        story.add("The data is returned to the caller; return statements are "
                  "not sinks.");
    }
    result.leak_here = !result.sinks.empty();
    if (result.leak_here && req.sink_terminates
        && !result.next_methods.empty()) {
        result.next_methods.clear();
        story.add("A sink was hit, so no next methods are reported.");
    }
    if (story.empty()) {
        story.add("Method does not originate, store, or pass sensitive "
                  + data_type + " data. No sink detected.");
    }
    result.summary = story.join();
    for (const auto& next : result.next_methods) {
        result.summary += "\n" + format_tainted_params(next,
                                                       param_taint[next.str()]);
    }
    return result;
}

/// Model-free backend built on taint_summarize.
class TaintBackend : public SummarizerBackend {
public:
    explicit TaintBackend(std::vector<SinkRule> rules = default_sink_rules())
        : rules_(std::move(rules))
    {
    }

    std::string identity() const override { return "taint"; }

    SummaryResult summarize(const SummaryRequest& req, const MethodIndex& index,
                            DropLog&) override
    {
        return taint_summarize(req.record(), req, rules_, index);
    }

    const std::vector<SinkRule>& rules() const noexcept { return rules_; }

private:
    std::vector<SinkRule> rules_;
};

} // namespace bytetrace
