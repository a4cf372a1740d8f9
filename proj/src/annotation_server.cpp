#include "moodshift/annotation_server.hpp"

#include <filesystem>
#include <fstream>
#include <httplib.h>
#include <json.hpp>
#include <sstream>

namespace moodshift::annotation {

using json = nlohmann::ordered_json;

namespace {

std::string iso_time(TimePoint tp) {
  const std::time_t t = Clock::to_time_t(tp);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json task_json(const AnnotationTask& t) {
  json j;
  j["tweet"] = json::parse(format_record(LabeledTweet{t.tweet, std::nullopt, std::nullopt, 0}));
  j["lease_id"] = t.lease_id;
  j["lease_expires"] = iso_time(t.lease_expires);
  return j;
}

json record_json(const AnnotationRecord& r) { return json::parse(format_log_record(r)); }

json rubric_json() {
  const auto& r = rubric();
  json j;
  j["question"] = r.question;
  json defs = json::object();
  for (auto l : kAllLabels) defs[std::string(label_name(l))] = r.definitions[label_index(l)];
  j["definitions"] = defs;
  j["default_rule"] = r.default_rule;
  json cal = json::array();
  for (const auto& c : r.calibration)
    cal.push_back({{"case", c.case_id}, {"text", c.text}, {"label", std::string(label_name(c.hand_label))}});
  j["calibration"] = cal;
  return j;
}

json progress_json(const ProgressStats& s) {
  json j;
  j["total"] = s.total;
  j["labelled"] = s.labelled;
  json pc = json::object();
  for (auto l : kAllLabels) pc[std::string(label_name(l))] = s.per_class[label_index(l)];
  j["per_class"] = pc;
  json pa = json::object();
  for (const auto& [a, n] : s.per_annotator) pa[a] = n;
  j["per_annotator"] = pa;
  return j;
}

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(-1, ' ', false, json::error_handler_t::replace), "application/json");
}

void reply_error(httplib::Response& res, int status, const std::string& msg) { reply(res, status, {{"error", msg}}); }

json parse_body(const httplib::Request& req) {
  json j;
  try {
    j = json::parse(req.body);
  } catch (const json::parse_error&) {
    throw ValidationError("request body is not valid JSON");
  }
  if (!j.is_object()) throw ValidationError("request body must be an object");
  return j;
}

std::string field(const json& j, const char* key, bool required = true) {
  if (!j.contains(key)) {
    if (required) throw ValidationError(std::string("missing field '") + key + "'");
    return {};
  }
  if (!j[key].is_string()) throw ValidationError(std::string("field '") + key + "' must be a string");
  return j[key].get<std::string>();
}

template <typename F>
void guarded(httplib::Response& res, F&& f) {
  try {
    f();
  } catch (const ValidationError& e) {
    reply_error(res, 400, e.what());
  } catch (const NotFoundError& e) {
    reply_error(res, 404, e.what());
  } catch (const ConflictError& e) {
    reply_error(res, 409, e.what());
  } catch (const std::exception& e) {
    reply_error(res, 500, e.what());
  }
}

}  // namespace

struct AnnotationServer::Impl {
  AnnotationStore& store;
  ServerOptions opts;
  httplib::Server http;
  int port = -1;

  Impl(AnnotationStore& s, ServerOptions o) : store(s), opts(std::move(o)) { routes(); }

  void routes() {
    http.Get("/api/rubric", [](const httplib::Request&, httplib::Response& res) { reply(res, 200, rubric_json()); });

    http.Get("/api/next", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        if (req.has_param("corpus") && req.get_param_value("corpus") != store.corpus_name())
          throw NotFoundError("unknown corpus '" + req.get_param_value("corpus") + "'");
        if (!req.has_param("annotator")) throw ValidationError("missing query parameter 'annotator'");
        auto task = store.next_task(req.get_param_value("annotator"));
        if (!task) {
          res.status = 204;
          return;
        }
        reply(res, 200, task_json(*task));
      });
    });

    http.Post("/api/labels", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const auto body = parse_body(req);
        const bool relabel = body.contains("relabel") && body["relabel"].is_boolean() && body["relabel"].get<bool>();
        auto rec = store.submit_label(field(body, "tweet_id"), field(body, "label"), field(body, "annotator"),
                                      field(body, "lease_id", !relabel), relabel);
        reply(res, 200, record_json(rec));
      });
    });

    http.Post("/api/labels/undo", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const auto body = parse_body(req);
        auto r = store.undo(field(body, "annotator"));
        json j;
        j["record"] = record_json(r.tombstone);
        j["task"] = r.task ? task_json(*r.task) : json(nullptr);
        reply(res, 200, j);
      });
    });

    http.Post("/api/leases/release", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const auto body = parse_body(req);
        reply(res, 200, {{"released", store.release(field(body, "lease_id"), field(body, "annotator"))}});
      });
    });

    http.Get("/api/progress", [this](const httplib::Request&, httplib::Response& res) {
      guarded(res, [&] { reply(res, 200, progress_json(store.progress())); });
    });

    http.Get("/api/export", [this](const httplib::Request&, httplib::Response& res) {
      guarded(res, [&] {
        const auto exp = store.export_labels();
        std::ostringstream os;
        export_corpus(exp.dataset, os);
        const auto sidecar = format_disagreements(exp.disagreements);
        if (!opts.data_dir.empty()) {
          std::filesystem::create_directories(opts.data_dir);
          std::ofstream(std::filesystem::path(opts.data_dir) / "disagreements.tsv", std::ios::binary) << sidecar;
        }
        res.set_header("X-Disagreements", std::to_string(exp.disagreements.size()));
        res.status = 200;
        res.set_content(os.str(), "text/plain; charset=utf-8");
      });
    });

    http.Get("/api/export/disagreements", [this](const httplib::Request&, httplib::Response& res) {
      guarded(res, [&] {
        res.status = 200;
        res.set_content(format_disagreements(store.export_labels().disagreements),
                        "text/tab-separated-values; charset=utf-8");
      });
    });

    if (opts.ui_dir && !http.set_mount_point("/", *opts.ui_dir))
      throw std::runtime_error("UI directory not found: " + *opts.ui_dir);
  }
};

AnnotationServer::AnnotationServer(AnnotationStore& store, ServerOptions opts)
    : impl_(std::make_unique<Impl>(store, std::move(opts))) {}

AnnotationServer::~AnnotationServer() { stop(); }

int AnnotationServer::bind() {
  auto& i = *impl_;
  if (i.opts.port == 0) {
    i.port = i.http.bind_to_any_port(i.opts.host);
  } else {
    i.port = i.http.bind_to_port(i.opts.host, i.opts.port) ? i.opts.port : -1;
  }
  if (i.port < 0) throw std::runtime_error("cannot bind " + i.opts.host + ":" + std::to_string(i.opts.port));
  return i.port;
}

void AnnotationServer::serve() { impl_->http.listen_after_bind(); }

void AnnotationServer::stop() {
  if (impl_) impl_->http.stop();
}

}  // namespace moodshift::annotation
