#pragma once

#include "attnlens/experiment/service.hpp"

#include <memory>
#include <string>
#include <string_view>

namespace attnlens::experiment {

struct ApiResponse {
    int status = 200;
    std::string content_type = "application/json";
    std::string body;
};

// Routes one request against the service. Endpoints:
//   POST /sessions                    {participant_id, experiment_id, seed?, consent?}
//   GET  /sessions/{id}/next          trial payload or {"done": true}
//   POST /sessions/{id}/responses     {trial_index, answer, reaction_time_s}
//   GET  /experiments/{id}/export     line-delimited response records
//   GET  /healthz
// Errors come back as {"error": {"kind", "message"}} with 400 (input),
// 404 (not_found), 409 (sequencing) or 500.
ApiResponse handle_request(ExperimentService& service, std::string_view method,
                           std::string_view path, std::string_view body);

// Thread-pooled HTTP front end over handle_request.
class HttpServer {
public:
    explicit HttpServer(ExperimentService& service);
    ~HttpServer();

    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    // Binds host:port (port 0 picks a free one) and returns the bound port.
    int bind(const std::string& host, int port);
    // Blocks serving requests until stop().
    void run();
    void stop();
    void wait_until_ready() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace attnlens::experiment
