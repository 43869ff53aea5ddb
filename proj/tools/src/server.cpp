#include "vocalfit/cli/server.hpp"

#include <fstream>
#include <mutex>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "vocalfit/error.hpp"
#include "vocalfit/mushra.hpp"

namespace vocalfit::cli {

namespace fs = std::filesystem;
using nlohmann::json;

struct StudyServer::Impl {
  ServeOptions options;
  std::vector<TrialManifest> screens;
  httplib::Server server;
  std::mutex append_mutex;
  int port = -1;

  void respond(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  void handle_upload(const httplib::Request& req, httplib::Response& res) {
    json doc = json::parse(req.body, nullptr, false);
    if (doc.is_discarded()) {
      respond(res, 400, {{"errors", {"body is not JSON"}}});
      return;
    }
    if (doc.is_object()) doc = json::array({doc});
    const auto check = validate_scores(doc, screens);
    if (!check.ok()) {
      respond(res, 400, {{"errors", check.errors}, {"warnings", check.warnings}});
      return;
    }
    {
      std::lock_guard lock(append_mutex);
      std::ofstream f(options.results_file, std::ios::app);
      if (!f) {
        respond(res, 500, {{"errors", {"cannot open results file"}}});
        return;
      }
      for (const auto& set : doc) f << set.dump() << '\n';
    }
    respond(res, 200, {{"accepted", doc.size()}, {"warnings", check.warnings}});
  }
};

StudyServer::StudyServer(ServeOptions options) : impl_(std::make_unique<Impl>()) {
  impl_->options = std::move(options);
  auto& o = impl_->options;
  if (o.results_file.empty()) o.results_file = o.root / "results.jsonl";

  std::ifstream f(o.root / "manifest.json");
  if (!f) throw Error(Errc::IoError, "no manifest.json in " + o.root.string());
  try {
    impl_->screens = manifest_from_json(json::parse(f));
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaError, std::string("manifest.json: ") + e.what());
  }

  if (!impl_->server.set_mount_point("/", o.root.string())) {
    throw Error(Errc::IoError, "cannot serve " + o.root.string());
  }
  impl_->server.Post("/results", [this](const httplib::Request& req, httplib::Response& res) {
    impl_->handle_upload(req, res);
  });
}

StudyServer::~StudyServer() { stop(); }

int StudyServer::bind() {
  auto& o = impl_->options;
  if (o.port == 0) {
    impl_->port = impl_->server.bind_to_any_port(o.host);
  } else {
    impl_->port = impl_->server.bind_to_port(o.host, o.port) ? o.port : -1;
  }
  if (impl_->port < 0) throw Error(Errc::IoError, "cannot bind " + o.host);
  return impl_->port;
}

void StudyServer::serve() { impl_->server.listen_after_bind(); }

void StudyServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

}  // namespace vocalfit::cli
