#include "cellsift/service.hpp"

#include <atomic>
#include <map>
#include <random>
#include <shared_mutex>
#include <stdexcept>
#include <thread>

#include "cellsift/cellsift.h"
#include "httplib.h"
#include "json.hpp"

namespace cellsift::service {
namespace {

using json = nlohmann::ordered_json;

struct Handle {
  cellsift_session* s = nullptr;
  explicit Handle(cellsift_session* p) : s(p) {}
  ~Handle() { cellsift_session_destroy(s); }
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
};

struct Owned {
  char* p = nullptr;
  ~Owned() { cellsift_string_free(p); }
  std::string str() const { return p ? std::string(p) : std::string(); }
};

int http_status(cellsift_status st) {
  switch (st) {
    case CELLSIFT_OK: return 200;
    case CELLSIFT_E_LABEL_MISMATCH: return 409;
    case CELLSIFT_E_INTERNAL:
    case CELLSIFT_E_NOT_TRAINED:
    case CELLSIFT_E_LENGTH_DRIFT:
    case CELLSIFT_E_FEATURE_LENGTH_MISMATCH:
    case CELLSIFT_E_BAD_PROBABILITY:
      return 500;
    default: return 400;
  }
}

void send_error(httplib::Response& res, int code, const std::string& error, const std::string& message) {
  json body = {{"error", error}, {"message", message}};
  res.status = code;
  res.set_content(body.dump(), "application/json");
}

void send_status(httplib::Response& res, cellsift_status st) {
  send_error(res, http_status(st), cellsift_status_name(st), cellsift_last_error());
}

void send_json(httplib::Response& res, std::string body) {
  res.status = 200;
  res.set_content(std::move(body), "application/json");
}

}  // namespace

struct Server::Impl {
  Options options;
  httplib::Server http;
  mutable std::shared_mutex mutex;
  std::map<std::string, std::shared_ptr<Handle>> sessions;
  std::atomic<std::uint64_t> counter{0};
  std::uint64_t salt = 0;
  int port = -1;
  std::thread thread;

  explicit Impl(Options o) : options(std::move(o)) {
    std::random_device rd;
    salt = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    routes();
  }

  std::string new_id() {
    const std::uint64_t n = ++counter;
    char buf[40];
    std::snprintf(buf, sizeof buf, "%08llx%08llx", static_cast<unsigned long long>(salt & 0xffffffffULL),
                  static_cast<unsigned long long>(n));
    return buf;
  }

  std::shared_ptr<Handle> find(const std::string& id) const {
    std::shared_lock lock(mutex);
    auto it = sessions.find(id);
    return it == sessions.end() ? nullptr : it->second;
  }

  // Resolves {id} or answers 404.
  std::shared_ptr<Handle> lookup(const httplib::Request& req, httplib::Response& res) const {
    auto h = find(req.matches[1]);
    if (!h) send_error(res, 404, "NotFound", "unknown session '" + std::string(req.matches[1]) + "'");
    return h;
  }

  template <class F>
  void string_call(const httplib::Request& req, httplib::Response& res, F&& f) {
    auto h = lookup(req, res);
    if (!h) return;
    Owned out;
    const auto st = f(h->s, &out.p);
    if (st != CELLSIFT_OK) return send_status(res, st);
    send_json(res, out.str());
  }

  void persist(const std::string& id, cellsift_session* s) {
    if (!options.snapshot_dir) return;
    std::error_code ec;
    std::filesystem::create_directories(*options.snapshot_dir, ec);
    const auto path = (*options.snapshot_dir / (id + ".json")).string();
    cellsift_session_save(s, path.c_str());
  }

  void routes() {
    http.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
    http.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) {
      res.set_header("Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type");
      res.status = 204;
    });

    http.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
      std::string body = req.body;
      // A multipart upload carries the CSV as a file part and the config as a field.
      if (req.is_multipart_form_data()) {
        json j = json::object();
        if (req.has_file("csv")) j["csv"] = req.get_file_value("csv").content;
        if (req.has_file("ground_truth_csv")) j["ground_truth_csv"] = req.get_file_value("ground_truth_csv").content;
        if (req.has_file("config")) {
          try {
            j["config"] = json::parse(req.get_file_value("config").content);
          } catch (const json::exception& e) {
            return send_error(res, 400, "Decode", e.what());
          }
        }
        body = j.dump();
      }
      cellsift_session* s = nullptr;
      const auto st = cellsift_session_create(body.c_str(), &s);
      if (st != CELLSIFT_OK) return send_status(res, st);
      auto handle = std::make_shared<Handle>(s);
      const auto id = new_id();
      {
        std::unique_lock lock(mutex);
        sessions.emplace(id, handle);
      }
      persist(id, s);
      res.status = 201;
      res.set_content(json{{"session_id", id}}.dump(), "application/json");
    });

    http.Get(R"(/sessions/([0-9a-f]+)/batch)", [this](const httplib::Request& req, httplib::Response& res) {
      string_call(req, res, [](cellsift_session* s, char** out) { return cellsift_session_batch(s, out); });
    });

    http.Post(R"(/sessions/([0-9a-f]+)/labels)", [this](const httplib::Request& req, httplib::Response& res) {
      auto h = lookup(req, res);
      if (!h) return;
      Owned out;
      const auto st = cellsift_session_submit(h->s, req.body.c_str(), &out.p);
      if (st != CELLSIFT_OK) return send_status(res, st);
      persist(req.matches[1], h->s);
      send_json(res, out.str());
    });

    http.Get(R"(/sessions/([0-9a-f]+)/status)", [this](const httplib::Request& req, httplib::Response& res) {
      string_call(req, res, [](cellsift_session* s, char** out) { return cellsift_session_status(s, out); });
    });

    http.Get(R"(/sessions/([0-9a-f]+)/report)", [this](const httplib::Request& req, httplib::Response& res) {
      string_call(req, res, [](cellsift_session* s, char** out) { return cellsift_session_report(s, out); });
    });

    http.Get(R"(/sessions/([0-9a-f]+)/explain)", [this](const httplib::Request& req, httplib::Response& res) {
      if (!find(req.matches[1])) return send_error(res, 404, "NotFound", "unknown session");
      std::size_t row = 0, col = 0;
      try {
        row = std::stoull(req.get_param_value("row"));
        col = std::stoull(req.get_param_value("col"));
      } catch (const std::exception&) {
        return send_error(res, 400, "Decode", "explain needs integer query parameters row and col");
      }
      string_call(req, res, [&](cellsift_session* s, char** out) {
        return cellsift_session_explain(s, row, col, out);
      });
    });

    http.Get(R"(/sessions/([0-9a-f]+)/result)", [this](const httplib::Request& req, httplib::Response& res) {
      auto h = lookup(req, res);
      if (!h) return;
      Owned out;
      const auto st = cellsift_session_result(h->s, &out.p);
      if (st != CELLSIFT_OK) return send_status(res, st);
      auto body = std::make_shared<std::string>(out.str());
      res.status = 200;
      res.set_chunked_content_provider("application/json", [body](std::size_t offset, httplib::DataSink& sink) {
        constexpr std::size_t kChunk = 1 << 14;
        if (offset < body->size()) {
          const auto n = std::min(kChunk, body->size() - offset);
          sink.write(body->data() + offset, n);
        }
        if (offset + kChunk >= body->size()) sink.done();
        return true;
      });
    });

    http.Delete(R"(/sessions/([0-9a-f]+))", [this](const httplib::Request& req, httplib::Response& res) {
      std::shared_ptr<Handle> removed;
      {
        std::unique_lock lock(mutex);
        auto it = sessions.find(req.matches[1]);
        if (it == sessions.end()) return send_error(res, 404, "NotFound", "unknown session");
        removed = std::move(it->second);
        sessions.erase(it);
      }
      send_json(res, json{{"deleted", std::string(req.matches[1])}}.dump());
    });

    // Anything under /sessions/ that did not match a route is an unknown session.
    http.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (res.status == 404 && res.body.empty()) send_error(res, 404, "NotFound", "no such resource");
    });
    http.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
      std::string msg = "unexpected failure";
      try {
        std::rethrow_exception(ep);
      } catch (const std::exception& e) {
        msg = e.what();
      } catch (...) {
      }
      send_error(res, 500, "Internal", msg);
    });
  }
};

Server::Server(Options options) : impl_(std::make_unique<Impl>(std::move(options))) {}

Server::~Server() { stop(); }

int Server::bind() {
  if (impl_->port >= 0) return impl_->port;
  int p = -1;
  if (impl_->options.port == 0) {
    p = impl_->http.bind_to_any_port(impl_->options.host);
  } else if (impl_->http.bind_to_port(impl_->options.host, impl_->options.port)) {
    p = impl_->options.port;
  }
  if (p < 0) {
    throw std::runtime_error("cannot bind " + impl_->options.host + ":" + std::to_string(impl_->options.port));
  }
  impl_->port = p;
  return p;
}

void Server::listen() {
  bind();
  impl_->http.listen_after_bind();
}

int Server::start() {
  const int p = bind();
  impl_->thread = std::thread([this] { impl_->http.listen_after_bind(); });
  impl_->http.wait_until_ready();
  return p;
}

void Server::stop() {
  if (!impl_) return;
  impl_->http.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

int Server::port() const noexcept { return impl_->port; }

std::size_t Server::session_count() const {
  std::shared_lock lock(impl_->mutex);
  return impl_->sessions.size();
}

}  // namespace cellsift::service
