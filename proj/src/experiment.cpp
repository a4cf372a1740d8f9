#include "moodshift/experiment.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace moodshift {

namespace fs = std::filesystem;

Dataset misclassified(std::span<const SentimentLabel> preds, const Dataset& ds) {
  if (preds.size() != ds.size())
    throw std::invalid_argument("misclassified: " + std::to_string(preds.size()) + " predictions for " +
                                std::to_string(ds.size()) + " items");
  const auto gold = ds.gold_labels();
  Dataset out(ds.name() + "-misclassified");
  for (std::size_t i = 0; i < preds.size(); ++i)
    if (preds[i] != gold[i]) out.add(ds[i]);
  return out;
}

namespace {

std::string fmt_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

std::string join(const std::vector<std::string>& xs) {
  std::string out;
  for (const auto& x : xs) {
    if (!out.empty()) out += ", ";
    out += x;
  }
  return out;
}

void add_train(std::vector<std::pair<std::string, std::string>>& out, const std::string& sec,
               const nn::TrainConfig& t) {
  out.emplace_back(sec + ".learning_rate", fmt_double(t.learning_rate));
  out.emplace_back(sec + ".batch_size", std::to_string(t.batch_size));
  out.emplace_back(sec + ".epochs", std::to_string(t.epochs));
  out.emplace_back(sec + ".weight_decay", fmt_double(t.weight_decay));
  out.emplace_back(sec + ".seed", std::to_string(t.seed));
  out.emplace_back(sec + ".optimizer", std::string(nn::optimizer_name(t.optimizer)));
}

}  // namespace

std::vector<std::pair<std::string, std::string>> ExperimentConfig::resolved() const {
  std::vector<std::pair<std::string, std::string>> out;
  out.emplace_back("experiment.source_corpus", source_corpus);
  out.emplace_back("experiment.target_corpus", target_corpus);
  out.emplace_back("experiment.source_checkpoint", source_checkpoint.value_or(""));
  out.emplace_back("experiment.stopwords", stopwords);
  out.emplace_back("experiment.output", output_dir);
  out.emplace_back("experiment.seed", std::to_string(seed));
  out.emplace_back("experiment.max_vocab", std::to_string(max_vocab));
  out.emplace_back("experiment.match_threshold", fmt_double(match_threshold));
  out.emplace_back("experiment.symmetric_bases", symmetric_bases ? "true" : "false");
  out.emplace_back("split.test_fraction", std::to_string(split.test_fraction.num) + "/" +
                                              std::to_string(split.test_fraction.den));
  out.emplace_back("split.seed", std::to_string(split.seed));
  out.emplace_back("split.stratified", split.stratified ? "true" : "false");
  out.emplace_back("model.max_len", std::to_string(model_cfg.max_len));
  out.emplace_back("model.d_model", std::to_string(model_cfg.d_model));
  out.emplace_back("model.n_heads", std::to_string(model_cfg.n_heads));
  out.emplace_back("model.n_layers", std::to_string(model_cfg.n_layers));
  out.emplace_back("model.d_ff", std::to_string(model_cfg.d_ff));
  out.emplace_back("model.dropout_rate", fmt_double(model_cfg.dropout_rate));
  add_train(out, "train", train_cfg);
  add_train(out, "finetune", finetune_cfg);
  out.emplace_back("lda.k", std::to_string(lda_cfg.k));
  out.emplace_back("lda.alpha", fmt_double(lda_cfg.effective_alpha()));
  out.emplace_back("lda.beta", fmt_double(lda_cfg.beta));
  out.emplace_back("lda.iterations", std::to_string(lda_cfg.iterations));
  out.emplace_back("lda.burn_in", std::to_string(lda_cfg.burn_in));
  out.emplace_back("lda.seed", std::to_string(lda_cfg.seed));
  out.emplace_back("lda.min_df", std::to_string(min_df));
  out.emplace_back("lda.topic_names_pre", join(topic_names_pre));
  out.emplace_back("lda.topic_names_post", join(topic_names_post));
  return out;
}

ExperimentConfig parse_experiment_config(const IniFile& ini) {
  static const std::vector<std::string> kTrainKeys = {"learning_rate", "batch_size", "epochs",
                                                       "weight_decay",  "seed",       "optimizer"};
  ini.check_known({
      {"experiment",
       {"source_corpus", "target_corpus", "source_checkpoint", "stopwords", "output", "seed", "max_vocab",
        "match_threshold", "symmetric_bases"}},
      {"split", {"test_fraction", "seed", "stratified"}},
      {"model", {"max_len", "d_model", "n_heads", "n_layers", "d_ff", "dropout_rate"}},
      {"train", kTrainKeys},
      {"finetune", kTrainKeys},
      {"lda", {"k", "alpha", "beta", "iterations", "burn_in", "seed", "min_df", "topic_names_pre", "topic_names_post"}},
      {"rules",
       {"negation_window", "negation_flip", "exclamation_boost", "exclamation_cap", "question_dampen",
        "question_floor", "caps_boost", "neg_cut", "pos_cut", "normalizer_alpha"}},
  });

  ExperimentConfig c;
  auto required_path = [&](const char* key) {
    auto p = ini.get_path("experiment", key);
    if (!p) throw ConfigError(ini.origin() + ": [experiment] " + key + " is required");
    return *p;
  };
  c.source_corpus = required_path("source_corpus");
  c.target_corpus = required_path("target_corpus");
  c.source_checkpoint = ini.get_path("experiment", "source_checkpoint");
  c.stopwords = required_path("stopwords");
  c.output_dir = ini.get_path("experiment", "output").value_or("experiment_out");
  c.seed = ini.get_u64("experiment", "seed", 0);
  c.max_vocab = ini.get_u64("experiment", "max_vocab", c.max_vocab);
  c.match_threshold = ini.get_double("experiment", "match_threshold", c.match_threshold);
  c.symmetric_bases = ini.get_bool("experiment", "symmetric_bases", false);

  if (auto f = ini.get("split", "test_fraction")) {
    try {
      c.split.test_fraction = Fraction::parse(*f);
    } catch (const std::exception& e) {
      throw ConfigError(ini.origin() + ": [split] test_fraction: " + e.what());
    }
  }
  c.split.seed = ini.get_u64("split", "seed", c.seed);
  c.split.stratified = ini.get_bool("split", "stratified", true);

  c.model_cfg = read_model_config(ini);
  nn::TrainConfig seeded;
  seeded.seed = c.seed;
  c.train_cfg = read_train_config(ini, "train", seeded);
  c.finetune_cfg = read_train_config(ini, "finetune", seeded);
  lda::LdaConfig lda_defaults;
  lda_defaults.seed = c.seed;
  c.lda_cfg = read_lda_config(ini, lda_defaults);
  c.min_df = ini.get_u64("lda", "min_df", c.min_df);
  c.topic_names_pre = ini.get_list("lda", "topic_names_pre");
  c.topic_names_post = ini.get_list("lda", "topic_names_post");
  return c;
}

ExperimentConfig load_experiment_config(const std::string& path) { return parse_experiment_config(IniFile::load(path)); }

void override_seed(ExperimentConfig& cfg, std::uint64_t seed) {
  cfg.seed = seed;
  cfg.split.seed = seed;
  cfg.train_cfg.seed = seed;
  cfg.finetune_cfg.seed = seed;
  cfg.lda_cfg.seed = seed;
}

LdaRun run_lda(const Dataset& ds, const std::set<std::string, std::less<>>& stopwords, std::size_t min_df,
               const lda::LdaConfig& cfg, const std::vector<std::string>& names) {
  LdaRun run;
  if (ds.empty()) {
    run.note = "no misclassified items; LDA skipped";
    return run;
  }
  lda::BowResult bow;
  try {
    bow = lda::build_bow(ds, stopwords, min_df);
  } catch (const lda::LdaError& e) {
    run.note = std::string("LDA skipped: ") + e.what();
    return run;
  }
  run.docs = bow.dtm.num_docs();
  run.dropped_docs = bow.dropped_docs;
  run.tokens = bow.dtm.num_tokens();
  lda::LdaConfig c = cfg;
  if (run.docs < 2) {
    run.note = "LDA skipped: only " + std::to_string(run.docs) + " document after filtering";
    return run;
  }
  if (static_cast<std::size_t>(c.k) > run.docs) {
    c.k = static_cast<int>(run.docs);
    run.note = "K clamped from " + std::to_string(cfg.k) + " to " + std::to_string(c.k) + " (only " +
               std::to_string(run.docs) + " documents)";
  }
  run.k_used = c.k;
  const auto model = lda::fit(bow.dtm, c);
  run.perplexity = lda::perplexity(model, bow.dtm);
  run.topics = lda::summarize(model, bow.dtm, names);
  return run;
}

namespace {

template <typename F>
auto stage(const char* name, F&& f) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void write_predictions_file(const fs::path& path, const Dataset& ds, const std::vector<SentimentLabel>& preds) {
  const auto gold = ds.gold_labels();
  std::vector<PredictionRow> rows;
  for (std::size_t i = 0; i < ds.size(); ++i) rows.push_back({ds[i].tweet.id, gold[i], preds[i]});
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_predictions(out, rows);
}

void write_topics(const fs::path& dir, const LdaRun& run) {
  fs::create_directories(dir);
  std::ofstream rep(dir / "topics.txt", std::ios::binary);
  if (!run.note.empty()) rep << "note: " << run.note << '\n';
  lda::write_topic_report(rep, run.topics);
  std::ofstream pie(dir / "pie.csv", std::ios::binary);
  lda::write_pie_data(pie, run.topics);
  if (!rep || !pie) throw std::runtime_error("cannot write topic files under " + dir.string());
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  ExperimentReport rep;
  const fs::path out = cfg.output_dir;

  stage("setup", [&] {
    fs::create_directories(out);
    auto shape = cfg.model_cfg;
    if (shape.vocab_size == 0) shape.vocab_size = nn::kReservedTokens.size();  // set from the vocabulary later
    shape.validate();
    cfg.train_cfg.validate();
    cfg.finetune_cfg.validate();
    cfg.lda_cfg.validate();
    return 0;
  });

  auto load = [](const std::string& path) {
    auto res = ingest_file(path);
    if (res.skipped > 0)
      throw CorpusError(path + ": " + std::to_string(res.skipped) + " invalid records (first: " +
                        res.diagnostics.front().message + ")");
    if (res.dataset.empty()) throw CorpusError(path + ": corpus is empty");
    res.dataset.gold_labels();
    return std::move(res.dataset);
  };
  const Dataset source = cfg.source_checkpoint ? Dataset() : stage("load-source", [&] { return load(cfg.source_corpus); });
  const Dataset target = stage("load-target", [&] { return load(cfg.target_corpus); });
  const auto stopwords = stage("load-stopwords", [&] { return lda::load_stopwords(cfg.stopwords); });
  rep.source_name = cfg.source_checkpoint ? fs::path(*cfg.source_checkpoint).filename().string() : source.name();
  rep.source_size = source.size();
  rep.target_name = target.name();
  rep.target_size = target.size();

  const nn::Checkpoint zero_shot_ckpt = stage("train-source", [&] {
    nn::Checkpoint ck;
    if (cfg.source_checkpoint) {
      ck = nn::load_checkpoint_file(*cfg.source_checkpoint);
    } else {
      const auto vocab = nn::build_vocab(source, cfg.max_vocab);
      ck = nn::train(nn::init_checkpoint(vocab, cfg.model_cfg, cfg.seed), source, cfg.train_cfg).checkpoint;
    }
    nn::save_checkpoint_file(ck, (out / "checkpoint_zero_shot").string());
    return ck;
  });

  const auto split = stage("split-target", [&] { return stratified_split(target, cfg.split); });
  rep.train_size = split.train.size();
  rep.test_size = split.test.size();

  const Dataset& pre_base = cfg.symmetric_bases ? split.test : target;
  const Dataset pre_miss = stage("zero-shot", [&] {
    const auto full = nn::predict(zero_shot_ckpt, target);
    rep.zero_shot_full = evaluate(confusion(target.gold_labels(), full.labels), "Zero-shot (full target)");
    write_predictions_file(out / "predictions_zero_shot.tsv", target, full.labels);
    const auto test = nn::predict(zero_shot_ckpt, split.test);
    rep.zero_shot = evaluate(confusion(split.test.gold_labels(), test.labels), "Zero-shot (target test)");
    Dataset m = misclassified(cfg.symmetric_bases ? test.labels : full.labels, pre_base);
    m.set_name("misclassified_pre");
    export_corpus_file(m, (out / "misclassified_pre.corpus").string());
    return m;
  });
  rep.misclassified_pre = {pre_miss.name(), pre_miss.size(),
                           cfg.symmetric_bases ? "target test split" : "full target set", pre_base.size()};

  rep.lda_pre = stage("lda-pre", [&] {
    auto run = run_lda(pre_miss, stopwords, cfg.min_df, cfg.lda_cfg, cfg.topic_names_pre);
    write_topics(out / "topics_pre", run);
    return run;
  });

  const nn::Checkpoint tuned = stage("fine-tune", [&] {
    auto ck = nn::fine_tune(zero_shot_ckpt, split.train, cfg.finetune_cfg, cfg.model_cfg).checkpoint;
    nn::save_checkpoint_file(ck, (out / "checkpoint_finetuned").string());
    return ck;
  });
  rep.provenance = tuned.corpora();

  const Dataset post_miss = stage("predict-test", [&] {
    const auto p = nn::predict(tuned, split.test);
    rep.fine_tuned = evaluate(confusion(split.test.gold_labels(), p.labels), "Fine-tuned (target test)");
    write_predictions_file(out / "predictions_finetuned.tsv", split.test, p.labels);
    Dataset m = misclassified(p.labels, split.test);
    m.set_name("misclassified_post");
    export_corpus_file(m, (out / "misclassified_post.corpus").string());
    return m;
  });
  rep.delta_f1 = rep.fine_tuned.overall_f1 - rep.zero_shot.overall_f1;
  rep.misclassified_post = {post_miss.name(), post_miss.size(), "target test split", split.test.size()};

  rep.lda_post = stage("lda-post", [&] {
    auto run = run_lda(post_miss, stopwords, cfg.min_df, cfg.lda_cfg, cfg.topic_names_post);
    write_topics(out / "topics_post", run);
    return run;
  });

  rep.topic_comparison = stage("topic-shift", [&] {
    return topic_shift(rep.lda_pre.topics, rep.lda_post.topics, cfg.match_threshold);
  });

  stage("report", [&] {
    write_text(out / "report.txt", render_report(rep));
    write_text(out / "report.lines", render_report_lines(rep));
    return 0;
  });
  return rep;
}

namespace {

void lda_block(std::ostringstream& os, const char* title, const LdaRun& run) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s: K=%d, %zu documents (%zu dropped), %zu tokens, perplexity %.3f\n", title,
                run.k_used, run.docs, run.dropped_docs, run.tokens, run.perplexity);
  os << buf;
  if (!run.note.empty()) os << "note: " << run.note << '\n';
  lda::write_topic_report(os, run.topics);
}

}  // namespace

std::string render_report(const ExperimentReport& r) {
  std::ostringstream os;
  char buf[256];
  os << "Domain transfer experiment\n\n";
  std::snprintf(buf, sizeof buf, "source: %s (%zu items)\n", r.source_name.c_str(), r.source_size);
  os << buf;
  std::snprintf(buf, sizeof buf, "target: %s (%zu items; train %zu, test %zu)\n", r.target_name.c_str(),
                r.target_size, r.train_size, r.test_size);
  os << buf;
  std::string chain;
  for (const auto& c : r.provenance) chain += (chain.empty() ? "" : " -> ") + c;
  os << "fine-tuned checkpoint corpora: " << chain << "\n\n";

  const std::vector<EvalReport> reports = {r.zero_shot_full, r.zero_shot, r.fine_tuned};
  os << render_table(reports) << '\n';
  std::snprintf(buf, sizeof buf, "delta overall F1 (fine-tuned minus zero-shot, target test): %+.4f\n\n", r.delta_f1);
  os << buf;

  os << "Misclassified sets\n";
  for (const auto* m : {&r.misclassified_pre, &r.misclassified_post}) {
    std::snprintf(buf, sizeof buf, "  %-20s %4zu of %4zu items (base: %s)\n", m->name.c_str(), m->size,
                  m->base_size, m->base.c_str());
    os << buf;
  }
  os << '\n';
  lda_block(os, "Topics before fine-tuning", r.lda_pre);
  os << '\n';
  lda_block(os, "Topics after fine-tuning", r.lda_post);
  os << '\n' << render_topic_comparison(r.topic_comparison);
  return os.str();
}

std::string render_report_lines(const ExperimentReport& r) {
  std::ostringstream os;
  char buf[256];
  auto kv = [&](const std::string& k, const std::string& v) { os << k << '=' << v << '\n'; };
  auto num = [&](const std::string& k, double v) {
    std::snprintf(buf, sizeof buf, "%.6f", v);
    kv(k, buf);
  };
  kv("source.name", r.source_name);
  kv("source.size", std::to_string(r.source_size));
  kv("target.name", r.target_name);
  kv("target.size", std::to_string(r.target_size));
  kv("split.train", std::to_string(r.train_size));
  kv("split.test", std::to_string(r.test_size));
  for (const auto& [key, e] : {std::pair<const char*, const EvalReport*>{"zero_shot_full", &r.zero_shot_full},
                               {"zero_shot", &r.zero_shot},
                               {"fine_tuned", &r.fine_tuned}}) {
    const std::string k = key;
    num(k + ".precision", e->overall_precision);
    num(k + ".recall", e->overall_recall);
    num(k + ".f1", e->overall_f1);
    num(k + ".accuracy", e->accuracy);
    for (const auto& c : e->per_class) num(k + ".f1." + std::string(label_name(c.label)), c.f1);
  }
  num("delta_f1", r.delta_f1);
  for (const auto& [key, m] : {std::pair<const char*, const MisclassifiedSet*>{"misclassified_pre", &r.misclassified_pre},
                               {"misclassified_post", &r.misclassified_post}}) {
    const std::string k = key;
    kv(k + ".size", std::to_string(m->size));
    kv(k + ".base", m->base);
    kv(k + ".base_size", std::to_string(m->base_size));
  }
  for (const auto& [key, run] :
       {std::pair<const char*, const LdaRun*>{"lda_pre", &r.lda_pre}, {"lda_post", &r.lda_post}}) {
    const std::string k = key;
    kv(k + ".k", std::to_string(run->k_used));
    kv(k + ".docs", std::to_string(run->docs));
    kv(k + ".tokens", std::to_string(run->tokens));
    num(k + ".perplexity", run->perplexity);
    for (const auto& t : run->topics) {
      std::snprintf(buf, sizeof buf, "%.1f", t.token_contribution);
      kv(k + ".topic" + std::to_string(t.topic_id + 1) + ".contribution", buf);
    }
  }
  kv("topic_shift.threshold", fmt_double(r.topic_comparison.match_threshold));
  kv("topic_shift.surviving", std::to_string(r.topic_comparison.surviving.size()));
  kv("topic_shift.disappeared", std::to_string(r.topic_comparison.disappeared.size()));
  kv("topic_shift.emergent", std::to_string(r.topic_comparison.emergent.size()));
  return os.str();
}

}  // namespace moodshift
