#pragma once

#include "bytetrace/d2cfg.hpp"
#include "bytetrace/error.hpp"
#include "bytetrace/method_ref.hpp"
#include "bytetrace/smali.hpp"

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

namespace bytetrace {

/// Weighted harmonic mean of precision and recall; 0 when both are 0.
inline double f_beta(double precision, double recall, double beta)
{
    const double b2 = beta * beta;
    const double denom = b2 * precision + recall;
    return denom > 0 ? (1 + b2) * precision * recall / denom : 0.0;
}

inline double f1_score(double precision, double recall)
{
    return precision + recall > 0
            ? 2 * precision * recall / (precision + recall)
            : 0.0;
}

struct EdgeMetrics {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    double precision = 0;
    double recall = 0;
    double f1 = 0;
    double f_beta = 0;
    double beta = 0.5;
    /// Set when a denominator was zero and a convention filled the value in.
    bool degenerate = false;
};

/// Metrics from raw counts. Empty denominators follow the convention
/// P = 1 when nothing was predicted and nothing was missed (else 0), and
/// symmetrically for recall.
inline EdgeMetrics metrics_from_counts(std::size_t tp, std::size_t fp,
                                       std::size_t fn, double beta)
{
    if (!(beta > 0)) {
        throw OutOfRange("beta must be > 0");
    }
    EdgeMetrics m;
    m.tp = tp;
    m.fp = fp;
    m.fn = fn;
    m.beta = beta;
    if (tp + fp > 0) {
        m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    }
    else {
        m.precision = fn == 0 ? 1.0 : 0.0;
        m.degenerate = true;
    }
    if (tp + fn > 0) {
        m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    }
    else {
        m.recall = fp == 0 ? 1.0 : 0.0;
        m.degenerate = true;
    }
    m.f1 = f1_score(m.precision, m.recall);
    m.f_beta = bytetrace::f_beta(m.precision, m.recall, beta);
    return m;
}

/// Metrics object built directly from precision and recall.
inline EdgeMetrics metrics_from_rates(double precision, double recall,
                                      double beta)
{
    if (!(beta > 0)) {
        throw OutOfRange("beta must be > 0");
    }
    EdgeMetrics m;
    m.precision = precision;
    m.recall = recall;
    m.beta = beta;
    m.f1 = f1_score(precision, recall);
    m.f_beta = bytetrace::f_beta(precision, recall, beta);
    return m;
}

inline EdgeMetrics compare_graphs(const EdgeSet& predicted, const EdgeSet& truth,
                                  double beta = 0.5)
{
    std::size_t tp = 0;
    for (const auto& e : predicted) {
        tp += truth.contains(e) ? 1 : 0;
    }
    return metrics_from_counts(tp, predicted.size() - tp, truth.size() - tp,
                               beta);
}

/// Tab-separated "caller<TAB>callee" lines; blank lines and '#' comments
/// are ignored. Signatures are normalized to the canonical form.
inline EdgeSet parse_ground_truth(std::string_view text,
                                  const std::string& origin = "ground truth")
{
    EdgeSet edges;
    std::size_t line_no = 0;
    while (!text.empty()) {
        auto nl = text.find('\n');
        auto line = detail::trim(text.substr(0, nl));
        text = nl == std::string_view::npos ? std::string_view{}
                                            : text.substr(nl + 1);
        ++line_no;
        if (line.empty() || line.front() == '#') {
            continue;
        }
        auto tab = line.find('\t');
        const auto where = origin + ":" + std::to_string(line_no);
        if (tab == std::string_view::npos
            || line.find('\t', tab + 1) != std::string_view::npos) {
            throw BadConfig(where + ": expected caller<TAB>callee");
        }
        auto caller = try_parse_method_ref(line.substr(0, tab));
        auto callee = try_parse_method_ref(line.substr(tab + 1));
        if (!caller || !callee) {
            throw BadConfig(where + ": malformed method signature");
        }
        edges.emplace(caller->str(), callee->str());
    }
    return edges;
}

inline EdgeSet load_ground_truth(const std::filesystem::path& path)
{
    return parse_ground_truth(read_file(path), path.string());
}

struct LeakCaseResult {
    std::string case_id;
    std::size_t expected_leaks = 0;
    std::size_t detected = 0;
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
};

struct LeakScore {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    double precision = 1;
    double recall = 1;
    double f1 = 1;
    /// No leaks expected and none reported.
    bool empty = false;
};

inline LeakScore score_leak_totals(std::size_t tp, std::size_t fp,
                                   std::size_t fn)
{
    auto m = metrics_from_counts(tp, fp, fn, 1.0);
    LeakScore s;
    s.tp = tp;
    s.fp = fp;
    s.fn = fn;
    s.precision = m.precision;
    s.recall = m.recall;
    s.f1 = m.f1;
    s.empty = tp + fp + fn == 0;
    return s;
}

inline LeakScore score_leaks(const std::vector<LeakCaseResult>& cases)
{
    std::size_t tp = 0, fp = 0, fn = 0;
    for (const auto& c : cases) {
        tp += c.tp;
        fp += c.fp;
        fn += c.fn;
    }
    return score_leak_totals(tp, fp, fn);
}

/// Scores one case by matching detected sink signatures against the
/// expected ones as multisets.
inline LeakCaseResult match_case(std::string case_id, std::size_t expected_leaks,
                                 std::vector<std::string> expected_sinks,
                                 std::vector<std::string> detected_sinks)
{
    LeakCaseResult r;
    r.case_id = std::move(case_id);
    r.expected_leaks = expected_leaks;
    r.detected = detected_sinks.size();
    std::sort(expected_sinks.begin(), expected_sinks.end());
    std::sort(detected_sinks.begin(), detected_sinks.end());
    std::vector<std::string> common;
    std::set_intersection(expected_sinks.begin(), expected_sinks.end(),
                          detected_sinks.begin(), detected_sinks.end(),
                          std::back_inserter(common));
    r.tp = std::min(common.size(), expected_leaks);
    r.fp = r.detected - r.tp;
    r.fn = expected_leaks - r.tp;
    return r;
}

} // namespace bytetrace
