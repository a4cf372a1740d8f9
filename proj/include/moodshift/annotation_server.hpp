#pragma once

#include <memory>
#include <optional>
#include <string>

#include "moodshift/annotation.hpp"

namespace moodshift::annotation {

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 8080;                    // 0 picks a free port
  std::optional<std::string> ui_dir;  // static files mounted at "/"
  std::string data_dir;               // where export sidecars are written; empty disables
};

/// JSON API over an AnnotationStore:
///   GET  /api/rubric
///   GET  /api/next?annotator=NAME[&corpus=NAME]   200 task | 204
///   POST /api/labels {tweet_id, label, annotator, lease_id[, relabel]}
///   POST /api/labels/undo {annotator}
///   POST /api/leases/release {lease_id, annotator}
///   GET  /api/progress
///   GET  /api/export                    corpus stream (text/plain)
///   GET  /api/export/disagreements      sidecar rows (text/tab-separated-values)
/// Errors are {"error": message} with 400 (validation), 404 (unknown
/// tweet, corpus or nothing to undo) or 409 (lease conflict).
class AnnotationServer {
 public:
  AnnotationServer(AnnotationStore& store, ServerOptions opts);
  ~AnnotationServer();
  AnnotationServer(const AnnotationServer&) = delete;
  AnnotationServer& operator=(const AnnotationServer&) = delete;

  /// Binds the socket and returns the bound port; throws on failure.
  int bind();
  /// Serves until stop(); call bind() first.
  void serve();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace moodshift::annotation
