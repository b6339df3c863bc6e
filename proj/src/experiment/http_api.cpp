#include "attnlens/experiment/http_api.hpp"

#include "attnlens/error.hpp"

#include <httplib.h>
#include <json.hpp>

#include <vector>

namespace attnlens::experiment {

using nlohmann::json;

namespace {

ApiResponse json_response(int status, const json& j) { return {status, "application/json", j.dump()}; }

ApiResponse error_response(int status, std::string_view kind, const std::string& message) {
    return json_response(status, {{"error", {{"kind", kind}, {"message", message}}}});
}

int status_for(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::input:
        return 400;
    case ErrorKind::not_found:
        return 404;
    case ErrorKind::sequencing:
        return 409;
    default:
        return 500;
    }
}

std::vector<std::string_view> split_path(std::string_view path) {
    if (auto q = path.find('?'); q != std::string_view::npos) {
        path = path.substr(0, q);
    }
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (start <= path.size()) {
        auto end = path.find('/', start);
        if (end == std::string_view::npos) {
            end = path.size();
        }
        if (end > start) {
            parts.push_back(path.substr(start, end - start));
        }
        start = end + 1;
    }
    return parts;
}

json parse_body(std::string_view body) {
    json j = json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        fail(ErrorKind::input, "request body must be a JSON object");
    }
    return j;
}

template <class T>
T required(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) {
        fail(ErrorKind::input, std::string("missing field '") + key + "'");
    }
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        fail(ErrorKind::input, std::string("field '") + key + "' has the wrong type");
    }
}

json session_json(const Session& s) {
    return {{"session_id", s.session_id},   {"participant", s.participant},
            {"experiment_id", s.experiment_id}, {"trial_count", s.plan.size()},
            {"cursor", s.cursor},           {"instructions", to_string(s.instructions)},
            {"created_at", s.created_at}};
}

ApiResponse create_session(ExperimentService& service, std::string_view body) {
    const json j = parse_body(body);
    const auto participant = required<std::string>(j, "participant_id");
    const auto experiment = required<std::string>(j, "experiment_id");
    if (auto c = j.find("consent"); c != j.end() && !(c->is_boolean() && c->get<bool>())) {
        fail(ErrorKind::input, "consent was not given");
    }
    std::uint64_t seed = fnv1a(participant);
    if (j.contains("seed")) {
        seed = required<std::uint64_t>(j, "seed");
    }
    return json_response(201, session_json(service.create_session(participant, experiment, seed)));
}

ApiResponse submit(ExperimentService& service, const std::string& session_id,
                   std::string_view body) {
    const json j = parse_body(body);
    const auto index = required<std::size_t>(j, "trial_index");
    const auto answer = required<std::string>(j, "answer");
    const auto rt = required<double>(j, "reaction_time_s");
    const auto r = service.submit_response(session_id, index, answer, rt);
    // Accuracy stays server-side so the participant gets no feedback.
    return json_response(200, {{"accepted", true},
                               {"trial_index", r.trial_index},
                               {"validity", to_string(r.validity)}});
}

ApiResponse route(ExperimentService& service, std::string_view method, std::string_view path,
                  std::string_view body) {
    const auto parts = split_path(path);
    const bool get = method == "GET";
    const bool post = method == "POST";
    if (parts.size() == 1 && parts[0] == "healthz" && get) {
        return json_response(200, {{"status", "ok"}, {"experiments", service.experiment_ids()}});
    }
    if (parts.size() == 1 && parts[0] == "sessions" && post) {
        return create_session(service, body);
    }
    if (parts.size() == 3 && parts[0] == "sessions") {
        const std::string id(parts[1]);
        if (parts[2] == "next" && get) {
            auto payload = service.next_trial(id);
            if (!payload) {
                return json_response(200, {{"done", true}});
            }
            return {200, "application/json", render::payload_to_json(*payload)};
        }
        if (parts[2] == "responses" && post) {
            return submit(service, id, body);
        }
    }
    if (parts.size() == 3 && parts[0] == "experiments" && parts[2] == "export" && get) {
        return {200, "application/x-ndjson", service.export_responses(std::string(parts[1]))};
    }
    return error_response(404, "not_found",
                          "no route for " + std::string(method) + " " + std::string(path));
}

} // namespace

ApiResponse handle_request(ExperimentService& service, std::string_view method,
                           std::string_view path, std::string_view body) {
    try {
        return route(service, method, path, body);
    } catch (const Error& e) {
        return error_response(status_for(e.kind()), to_string(e.kind()), e.what());
    } catch (const std::exception& e) {
        return error_response(500, "internal", e.what());
    }
}

struct HttpServer::Impl {
    explicit Impl(ExperimentService& s) : service(s) {}
    ExperimentService& service;
    httplib::Server server;
};

HttpServer::HttpServer(ExperimentService& service)
    : impl_(std::make_unique<Impl>(service)) {
    auto handler = [this](const httplib::Request& req, httplib::Response& res) {
        const auto out = handle_request(impl_->service, req.method, req.path, req.body);
        res.status = out.status;
        res.set_content(out.body, out.content_type);
    };
    impl_->server.Get(".*", handler);
    impl_->server.Post(".*", handler);
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
    if (port == 0) {
        const int bound = impl_->server.bind_to_any_port(host);
        if (bound < 0) {
            fail(ErrorKind::io, "cannot bind " + host);
        }
        return bound;
    }
    if (!impl_->server.bind_to_port(host, port)) {
        fail(ErrorKind::io, "cannot bind " + host + ":" + std::to_string(port));
    }
    return port;
}

void HttpServer::run() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
    if (impl_->server.is_running()) {
        impl_->server.stop();
    }
}

void HttpServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

} // namespace attnlens::experiment
