// SPDX-License-Identifier: Apache-2.0
#include <map>
#include <random>

#include <fmt/format.h>
#include <httplib.h>
#include <spdlog/spdlog.h>

#include "bagpilot/error.hpp"
#include "bagpilot/mcp/server.hpp"

namespace bagpilot::mcp {

namespace {

constexpr const char* kSessionHeader = "Mcp-Session-Id";

void allow_cors(httplib::Response& res) {
  res.set_header("Access-Control-Allow-Origin", "*");
  res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
  res.set_header("Access-Control-Allow-Headers", "Content-Type, Mcp-Session-Id");
  res.set_header("Access-Control-Expose-Headers", "Mcp-Session-Id");
}

}  // namespace

struct HttpTransport::Impl {
  explicit Impl(ToolServer& t) : tools(t), rng(std::random_device{}()) {}

  std::string new_session_id() {
    return fmt::format("{:016x}{:016x}", rng(), rng());
  }

  void handle_rpc(const httplib::Request& req, httplib::Response& res) {
    allow_cors(res);
    std::lock_guard lock(mutex);
    const auto sid = req.get_header_value(kSessionHeader);
    Connection* conn = nullptr;
    std::unique_ptr<Connection> fresh;
    if (auto it = connections.find(sid); !sid.empty() && it != connections.end()) {
      conn = it->second.get();
    } else {
      // Unknown or absent session: a throwaway connection, so only an
      // initialize succeeds and it opens a new session.
      fresh = std::make_unique<Connection>(tools);
      conn = fresh.get();
    }
    const auto response = conn->handle_text(req.body);
    if (fresh && fresh->initialized()) {
      const auto id = new_session_id();
      connections.emplace(id, std::move(fresh));
      res.set_header(kSessionHeader, id);
    } else if (!sid.empty() && !fresh) {
      res.set_header(kSessionHeader, sid);
    }
    if (!response) {
      res.status = 202;
      return;
    }
    res.set_content(*response, "application/json");
  }

  ToolServer& tools;
  std::mutex mutex;
  std::mt19937_64 rng;
  std::map<std::string, std::unique_ptr<Connection>> connections;
  httplib::Server server;
  std::thread thread;
};

HttpTransport::HttpTransport(ToolServer& tools) : impl_(std::make_unique<Impl>(tools)) {
  auto& s = impl_->server;
  s.Post("/rpc", [this](const httplib::Request& req, httplib::Response& res) { impl_->handle_rpc(req, res); });
  s.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    allow_cors(res);
    res.set_content("ok", "text/plain");
  });
  s.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
    allow_cors(res);
    res.status = 204;
  });
  s.set_logger([](const httplib::Request& req, const httplib::Response& res) {
    spdlog::debug("http {} {} -> {}", req.method, req.path, res.status);
  });
}

HttpTransport::~HttpTransport() { stop(); }

int HttpTransport::start(const std::string& host, int port) {
  auto& s = impl_->server;
  const int bound = port == 0 ? s.bind_to_any_port(host) : (s.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error(Errc::IoFailure, fmt::format("cannot listen on {}:{}", host, port));
  impl_->thread = std::thread([&s] { s.listen_after_bind(); });
  s.wait_until_ready();
  spdlog::info("listening on http://{}:{}/rpc", host, bound);
  return bound;
}

void HttpTransport::run(const std::string& host, int port) {
  auto& s = impl_->server;
  if (!s.bind_to_port(host, port)) throw Error(Errc::IoFailure, fmt::format("cannot listen on {}:{}", host, port));
  spdlog::info("listening on http://{}:{}/rpc", host, port);
  s.listen_after_bind();
}

void HttpTransport::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace bagpilot::mcp
