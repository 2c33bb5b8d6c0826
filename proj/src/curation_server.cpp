#include "gcp/curation.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "gcp/error.hpp"
#include "gcp/imaging.hpp"

using nlohmann::json;

namespace gcp {

namespace {

void send_json(httplib::Response& res, const json& body, int status = 200) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

template <typename Raster>
void send_png(httplib::Response& res, const Raster& raster) {
    const auto bytes = encode_png(raster);
    res.set_content(reinterpret_cast<const char*>(bytes.data()), bytes.size(), "image/png");
}

std::size_t size_param(const httplib::Request& req, const char* name, std::size_t fallback) {
    if (!req.has_param(name))
        return fallback;
    const std::string text = req.get_param_value(name);
    try {
        std::size_t pos = 0;
        const long long v = std::stoll(text, &pos);
        if (pos != text.size() || v < 0)
            throw std::invalid_argument(text);
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        throw ValidationError(std::string(name) + " must be a non-negative integer, got '" + text + "'");
    }
}

// Every handler goes through here so errors map to status codes in one place.
template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
    return [fn](const httplib::Request& req, httplib::Response& res) {
        try {
            fn(req, res);
        } catch (const NotFoundError& e) {
            send_json(res, {{"error", e.what()}}, 404);
        } catch (const ValidationError& e) {
            send_json(res, {{"error", e.what()}}, 400);
        } catch (const json::exception& e) {
            send_json(res, {{"error", std::string("bad request body: ") + e.what()}}, 400);
        } catch (const std::exception& e) {
            spdlog::error("{} {}: {}", req.method, req.path, e.what());
            send_json(res, {{"error", e.what()}}, 500);
        }
    };
}

} // namespace

struct CurationServer::Impl {
    CurationStore& store;
    ServerOptions options;
    httplib::Server http;
    int port = -1;

    Impl(CurationStore& s, ServerOptions o) : store(s), options(std::move(o)) {}

    void routes() {
        http.Get("/api/groups", guarded([this](const httplib::Request&, httplib::Response& res) {
            send_json(res, store.groups());
        }));

        http.Get("/api/candidates", guarded([this](const httplib::Request& req, httplib::Response& res) {
            std::optional<std::string> group;
            if (req.has_param("group") && !req.get_param_value("group").empty())
                group = req.get_param_value("group");
            const std::size_t page = size_param(req, "page", 0);
            const std::size_t page_size = size_param(req, "page_size", 20);
            if (page_size == 0)
                throw ValidationError("page_size must be positive");
            send_json(res, store.next_candidates(group, page, page_size));
        }));

        http.Get(R"(/api/sample/([^/]+)/(image|mask|overlay))",
                 guarded([this](const httplib::Request& req, httplib::Response& res) {
                     const std::string id = req.matches[1];
                     const std::string kind = req.matches[2];
                     if (kind == "image")
                         send_png(res, store.image(id));
                     else if (kind == "mask")
                         send_png(res, store.mask(id));
                     else
                         send_png(res, store.overlay(id));
                 }));

        http.Post("/api/verdict", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const json body = json::parse(req.body);
            if (!body.is_object())
                throw ValidationError("verdict body must be an object");
            Verdict v;
            v.sample_id = body.at("sample_id").get<std::string>();
            v.decision = decision_from_string(body.at("decision").get<std::string>());
            v.reason = body.value("reason", std::string{});
            v.label = body.value("label", std::string{});
            v.reviewer = body.value("reviewer", std::string{});
            const VerdictOutcome out = store.apply_verdict(std::move(v));
            json reply{{"status", to_string(out.status)}, {"changed", out.changed}};
            if (out.replacement_id)
                reply["replacement_id"] = *out.replacement_id;
            send_json(res, reply);
        }));

        http.Get("/api/stats", guarded([this](const httplib::Request&, httplib::Response& res) {
            send_json(res, store.stats());
        }));

        if (options.ui_dir && !http.set_mount_point("/ui", options.ui_dir->string()))
            throw IoError("cannot serve UI from " + options.ui_dir->string());
    }
};

CurationServer::CurationServer(CurationStore& store, ServerOptions options)
    : impl_(std::make_unique<Impl>(store, std::move(options))) {
    impl_->routes();
}

CurationServer::~CurationServer() { stop(); }

int CurationServer::bind() {
    auto& o = impl_->options;
    if (o.port == 0) {
        impl_->port = impl_->http.bind_to_any_port(o.host);
    } else {
        impl_->port = impl_->http.bind_to_port(o.host, o.port) ? o.port : -1;
    }
    if (impl_->port < 0)
        throw NetworkError("cannot bind " + o.host + ":" + std::to_string(o.port));
    return impl_->port;
}

void CurationServer::listen() {
    if (impl_->port < 0)
        bind();
    spdlog::info("serving {} on http://{}:{}", impl_->store.dataset_dir().string(), impl_->options.host, impl_->port);
    if (!impl_->http.listen_after_bind() && impl_->http.is_valid())
        throw NetworkError("server on port " + std::to_string(impl_->port) + " stopped unexpectedly");
}

void CurationServer::stop() {
    if (impl_)
        impl_->http.stop();
}

} // namespace gcp
