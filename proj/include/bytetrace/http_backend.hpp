#pragma once

#include "bytetrace/backend.hpp"
#include "bytetrace/prompt.hpp"
#include "bytetrace/response.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <atomic>
#include <memory>
#include <semaphore>
#include <string>

namespace bytetrace {

struct BackendConfig {
    std::string endpoint_url = "http://localhost:11434/api/chat";
    std::string model_name = "gemma3";
    double temperature = 0.2;
    long context_window_tokens = 40000;
    int max_retries = 2;
    double timeout_seconds = 120.0;
    /// Concurrent requests allowed in flight.
    int permits = 4;

    void validate() const
    {
        if (temperature < 0) {
            throw BadConfig("temperature must be >= 0");
        }
        if (context_window_tokens <= 0) {
            throw BadConfig("context window must be > 0");
        }
        if (max_retries < 0) {
            throw BadConfig("max_retries must be >= 0");
        }
        if (timeout_seconds <= 0) {
            throw BadConfig("timeout must be > 0");
        }
        if (permits < 1) {
            throw BadConfig("permits must be >= 1");
        }
    }
};

/// Chat request body in the shape accepted by common local model servers.
inline nlohmann::json make_chat_body(const BackendConfig& cfg,
                                     const std::string& prompt)
{
    return {
            {"model", cfg.model_name},
            {"messages", nlohmann::json::array(
                                 {{{"role", "user"}, {"content", prompt}}})},
            {"temperature", cfg.temperature},
            {"stream", false},
            {"options", {{"num_ctx", cfg.context_window_tokens}}},
    };
}

/// Generated text from either choices[0].message.content or
/// message.content.
inline std::string extract_chat_content(std::string_view response_body)
{
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(response_body);
    }
    catch (const nlohmann::json::parse_error& e) {
        throw InvalidResponse(std::string("response is not JSON: ") + e.what());
    }
    if (doc.is_object()) {
        if (auto c = doc.find("choices");
            c != doc.end() && c->is_array() && !c->empty()) {
            const auto& first = (*c)[0];
            if (first.is_object() && first.contains("message")
                && first["message"].is_object()
                && first["message"].contains("content")
                && first["message"]["content"].is_string()) {
                return first["message"]["content"].get<std::string>();
            }
        }
        if (auto m = doc.find("message"); m != doc.end() && m->is_object()) {
            if (auto c = m->find("content"); c != m->end() && c->is_string()) {
                return c->get<std::string>();
            }
        }
    }
    throw InvalidResponse("response carries no message content");
}

class TransportError : public Error {
public:
    using Error::Error;
};

/// Sends one JSON request body and returns the response body.
class ChatTransport {
public:
    virtual ~ChatTransport() = default;
    virtual std::string post(const std::string& body) = 0;
};

class HttpTransport : public ChatTransport {
public:
    HttpTransport(const std::string& url, double timeout_seconds)
        : timeout_(timeout_seconds)
    {
        auto scheme = url.find("://");
        if (scheme == std::string::npos) {
            throw BadConfig("endpoint URL must include a scheme: " + url);
        }
        auto slash = url.find('/', scheme + 3);
        host_ = url.substr(0, slash);
        path_ = slash == std::string::npos ? "/" : url.substr(slash);
        if (url.compare(0, scheme, "http") != 0) {
            throw BadConfig("only http:// endpoints are supported: " + url);
        }
    }

    std::string post(const std::string& body) override
    {
        httplib::Client client(host_);
        const auto sec = static_cast<time_t>(timeout_);
        const auto usec = static_cast<time_t>((timeout_ - sec) * 1e6);
        client.set_connection_timeout(sec, usec);
        client.set_read_timeout(sec, usec);
        client.set_write_timeout(sec, usec);
        auto res = client.Post(path_, body, "application/json");
        if (!res) {
            throw TransportError("request to " + host_ + path_ + " failed: "
                                 + httplib::to_string(res.error()));
        }
        if (res->status < 200 || res->status >= 300) {
            throw TransportError("request to " + host_ + path_
                                 + " returned HTTP "
                                 + std::to_string(res->status));
        }
        return res->body;
    }

private:
    std::string host_;
    std::string path_;
    double timeout_;
};

/// Model-backed summarizer. Re-issues the identical prompt on transport
/// failure or unusable output, at most max_retries extra times.
class HttpBackend : public SummarizerBackend {
public:
    HttpBackend(BackendConfig cfg, std::unique_ptr<ChatTransport> transport,
                std::vector<SinkRule> sink_rules = default_sink_rules())
        : cfg_(std::move(cfg)),
          transport_(std::move(transport)),
          rules_(std::move(sink_rules)),
          permits_(cfg_.permits)
    {
        cfg_.validate();
    }

    explicit HttpBackend(BackendConfig cfg)
        : HttpBackend(cfg, std::make_unique<HttpTransport>(cfg.endpoint_url,
                                                           cfg.timeout_seconds))
    {
    }

    std::string identity() const override
    {
        return "http:" + cfg_.endpoint_url + "#" + cfg_.model_name;
    }

    SummaryResult summarize(const SummaryRequest& req, const MethodIndex& index,
                            DropLog& drops) override
    {
        const auto body = make_chat_body(cfg_, build_prompt(req)).dump();
        ResponseOptions opts{rules_, req.sink_terminates,
                             req.record().signature.str()};

        std::string last_error;
        bool transport_failed = false;
        for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
            ++attempts_;
            try {
                std::string raw;
                {
                    permits_.acquire();
                    struct Release {
                        std::counting_semaphore<1024>& s;
                        ~Release() { s.release(); }
                    } release{permits_};
                    raw = transport_->post(body);
                }
                // Drops from discarded attempts are not logged.
                DropLog local;
                auto result = parse_response(extract_chat_content(raw), index,
                                             local, opts);
                for (auto& e : local.entries()) {
                    drops.add(std::move(e));
                }
                return result;
            }
            catch (const TransportError& e) {
                transport_failed = true;
                last_error = e.what();
            }
            catch (const InvalidResponse& e) {
                transport_failed = false;
                last_error = e.what();
            }
        }
        const auto what = req.record().signature.str() + ": "
                + std::to_string(cfg_.max_retries + 1) + " attempt(s) failed: "
                + last_error;
        if (transport_failed) {
            throw BackendUnavailable(what);
        }
        throw InvalidResponse(what);
    }

    const BackendConfig& config() const noexcept { return cfg_; }
    std::size_t attempts() const noexcept { return attempts_; }

private:
    BackendConfig cfg_;
    std::unique_ptr<ChatTransport> transport_;
    std::vector<SinkRule> rules_;
    std::counting_semaphore<1024> permits_;
    std::atomic<std::size_t> attempts_{0};
};

} // namespace bytetrace
