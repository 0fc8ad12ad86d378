#include <httplib.h>

#include "semtag/error.hpp"
#include "semtag/review/review.hpp"

namespace semtag::review {

struct HttpServer::Impl {
  ReviewService& service;
  ServeOptions options;
  httplib::Server server;
  bool bound = false;

  Impl(ReviewService& s, ServeOptions o) : service(s), options(std::move(o)) {}
};

namespace {

void send(httplib::Response& res, const Response& r) {
  res.status = r.status;
  if (!r.raw.empty() || r.content_type != "application/json") {
    res.set_content(r.raw, r.content_type);
  } else {
    res.set_content(r.body.dump(), "application/json");
  }
}

Response fail(int status, const std::string& message) {
  Response r;
  r.status = status;
  r.body = {{"error", message}};
  return r;
}

}  // namespace

HttpServer::HttpServer(ReviewService& service, ServeOptions options)
    : impl_(std::make_unique<Impl>(service, std::move(options))) {
  auto& s = impl_->server;
  auto& svc = impl_->service;

  s.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                         {"Access-Control-Allow-Headers", "Content-Type"},
                         {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  s.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  s.Get("/api/queue", [&svc](const httplib::Request& req, httplib::Response& res) {
    const std::string status = req.has_param("status") ? req.get_param_value("status") : "pending";
    std::optional<std::size_t> limit;
    if (req.has_param("limit")) {
      try {
        std::size_t used = 0;
        const auto v = req.get_param_value("limit");
        limit = std::stoul(v, &used);
        if (used != v.size() || v[0] == '-') throw std::invalid_argument("limit");
      } catch (const std::exception&) {
        send(res, fail(400, "limit must be a non-negative integer"));
        return;
      }
    }
    send(res, svc.queue(status, limit));
  });
  s.Get(R"(/api/item/([^/]+))", [&svc](const httplib::Request& req, httplib::Response& res) {
    send(res, svc.item(req.matches[1]));
  });
  s.Post("/api/decision", [&svc](const httplib::Request& req, httplib::Response& res) {
    nlohmann::json body;
    try {
      body = nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::parse_error& e) {
      send(res, fail(400, std::string("body is not JSON: ") + e.what()));
      return;
    }
    send(res, svc.decide(body));
  });
  s.Get("/api/stats", [&svc](const httplib::Request&, httplib::Response& res) { send(res, svc.stats()); });
  s.Get("/api/export", [&svc](const httplib::Request&, httplib::Response& res) {
    send(res, svc.export_jsonl());
  });
  s.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string what = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    send(res, fail(500, what));
  });
  if (impl_->options.static_dir) {
    if (!s.set_mount_point("/", impl_->options.static_dir->string())) {
      throw ValidationError("static directory not found: " + impl_->options.static_dir->string());
    }
  }
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind() {
  int port = impl_->options.port;
  if (port == 0) {
    port = impl_->server.bind_to_any_port(impl_->options.host);
    if (port < 0) throw Error("cannot bind " + impl_->options.host);
  } else if (!impl_->server.bind_to_port(impl_->options.host, port)) {
    throw Error("cannot bind " + impl_->options.host + ":" + std::to_string(port));
  }
  impl_->bound = true;
  return port;
}

void HttpServer::listen() {
  if (!impl_->bound) bind();
  impl_->server.listen_after_bind();
}

void HttpServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

}  // namespace semtag::review
