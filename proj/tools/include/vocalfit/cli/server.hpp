#pragma once

#include <filesystem>
#include <memory>
#include <string>

namespace vocalfit::cli {

struct ServeOptions {
  std::filesystem::path root;          // bundle directory with manifest.json
  std::filesystem::path results_file;  // defaults to <root>/results.jsonl
  std::string host = "127.0.0.1";
  int port = 8080;                     // 0 picks a free port
};

// Static files under `root` plus POST /results, which validates a scores
// document against the bundle's manifest and appends each accepted score set
// as one JSON line.
class StudyServer {
 public:
  explicit StudyServer(ServeOptions options);
  ~StudyServer();

  StudyServer(const StudyServer&) = delete;
  StudyServer& operator=(const StudyServer&) = delete;

  // Binds and returns the port; IoError if binding fails.
  int bind();
  // Blocks until stop() is called.
  void serve();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace vocalfit::cli
