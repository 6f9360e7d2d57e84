#pragma once

#include "bytetrace/summary.hpp"

#include <atomic>
#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <string>

namespace bytetrace {

/// Produces a SummaryResult for one method. Implementations must be safe to
/// call concurrently.
class SummarizerBackend {
public:
    virtual ~SummarizerBackend() = default;

    /// Stable name used as part of the cache key.
    virtual std::string identity() const = 0;

    virtual SummaryResult summarize(const SummaryRequest& req,
                                    const MethodIndex& index,
                                    DropLog& drops) = 0;
};

/// Re-applies the result contract regardless of which backend produced it:
/// next methods are indexed, non-framework and unique; leak_here implies
/// sinks; a leaking node under sink termination has no next methods.
inline void enforce_contract(SummaryResult& r, const MethodIndex& index,
                             DropLog& drops, const std::string& method,
                             bool sink_terminates)
{
    std::vector<MethodRef> kept;
    std::set<std::string> seen;
    for (auto& m : r.next_methods) {
        if (is_framework(m)) {
            drops.add({method, m.str(), DropReason::Framework});
        }
        else if (!index.contains(m)) {
            drops.add({method, m.str(), DropReason::NotInIndex});
        }
        else if (seen.insert(m.str()).second) {
            kept.push_back(std::move(m));
        }
    }
    r.next_methods = std::move(kept);
    r.leak_here = !r.sinks.empty();
    if (r.leak_here && sink_terminates && !r.next_methods.empty()) {
        for (const auto& m : r.next_methods) {
            drops.add({method, m.str(), DropReason::SinkLeaf});
        }
        r.next_methods.clear();
    }
}

/// Front end over a backend: validation, drop log and a per-run cache keyed
/// by (method, data type, root API, previous-summary hash, backend
/// identity, sink termination).
class Summarizer {
public:
    Summarizer(SummarizerBackend& backend, const MethodIndex& index)
        : backend_(backend), index_(index), identity_(backend.identity())
    {
    }

    SummaryResult summarize(const SummaryRequest& req)
    {
        const auto key = cache_key(req);
        {
            std::lock_guard lock(mutex_);
            if (auto it = cache_.find(key); it != cache_.end()) {
                ++hits_;
                return it->second;
            }
        }
        ++calls_;
        const auto method = req.record().signature.str();
        auto result = backend_.summarize(req, index_, drops_);
        enforce_contract(result, index_, drops_, method, req.sink_terminates);

        std::lock_guard lock(mutex_);
        // First completed result for a key is the one retained.
        return cache_.try_emplace(key, std::move(result)).first->second;
    }

    const MethodIndex& index() const noexcept { return index_; }
    DropLog& drops() noexcept { return drops_; }
    const DropLog& drops() const noexcept { return drops_; }

    /// Number of requests forwarded to the backend.
    std::size_t backend_calls() const noexcept { return calls_; }
    std::size_t cache_hits() const noexcept { return hits_; }

private:
    std::string cache_key(const SummaryRequest& req) const
    {
        return req.record().signature.str() + '\x1f' + req.target_data_type
                + '\x1f' + req.root_api.signature.str() + '\x1f'
                + std::to_string(std::hash<std::string>{}(req.previous_summary))
                + '\x1f' + identity_ + '\x1f'
                + (req.sink_terminates ? "stop" : "continue");
    }

    SummarizerBackend& backend_;
    const MethodIndex& index_;
    std::string identity_;
    DropLog drops_;
    std::mutex mutex_;
    std::map<std::string, SummaryResult> cache_;
    std::atomic<std::size_t> calls_{0};
    std::atomic<std::size_t> hits_{0};
};

} // namespace bytetrace
