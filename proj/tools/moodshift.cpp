#include <CLI11.hpp>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "moodshift/annotation_server.hpp"
#include "moodshift/baselines.hpp"
#include "moodshift/config.hpp"
#include "moodshift/corpus.hpp"
#include "moodshift/experiment.hpp"
#include "moodshift/lda.hpp"
#include "moodshift/metrics.hpp"
#include "moodshift/nnclassifier.hpp"

#ifndef MOODSHIFT_DEFAULT_DATA
#define MOODSHIFT_DEFAULT_DATA "data"
#endif

using namespace moodshift;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string corpus;
};

class StageFailure : public std::runtime_error {
 public:
  StageFailure(const std::string& stage, const std::string& msg) : std::runtime_error(stage + ": " + msg) {}
};

template <typename F>
auto stage(const char* name, F&& f) {
  try {
    return f();
  } catch (const StageFailure&) {
    throw;
  } catch (const std::exception& e) {
    throw StageFailure(name, e.what());
  }
}

std::optional<IniFile> load_ini(const Common& c) {
  if (c.config.empty()) return std::nullopt;
  return IniFile::load(c.config);
}

Dataset load_corpus(const std::string& path) {
  auto res = ingest_file(path);
  for (const auto& d : res.diagnostics)
    std::cerr << path << (d.line ? ":" + std::to_string(d.line) : "") << ": " << (d.warning ? "warning: " : "")
              << d.message << '\n';
  if (res.skipped > 0) throw CorpusError(std::to_string(res.skipped) + " invalid records in " + path);
  return std::move(res.dataset);
}

void write_manifest(const std::string& sub, const Common& c, std::uint64_t seed,
                    std::vector<std::pair<std::string, std::string>> resolved, const std::vector<std::string>& inputs) {
  if (c.out.empty()) return;
  RunManifest m;
  m.subcommand = sub;
  m.seed = seed;
  m.resolved_config = std::move(resolved);
  for (const auto& p : inputs)
    if (!p.empty()) m.input_digests.emplace_back(p, file_digest(p));
  m.write(c.out);
}

std::string out_path(const Common& c, const std::string& file) { return (fs::path(c.out) / file).string(); }

void write_preds(const std::string& path, const Dataset& ds, const std::vector<SentimentLabel>& preds) {
  const auto gold = ds.gold_labels();
  std::vector<PredictionRow> rows;
  for (std::size_t i = 0; i < ds.size(); ++i) rows.push_back({ds[i].tweet.id, gold[i], preds[i]});
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_predictions(out, rows);
}

void add_common(CLI::App* sub, Common& c, bool need_corpus, bool need_out) {
  sub->add_option("--config", c.config, "INI config file")->check(CLI::ExistingFile);
  sub->add_option("--seed", c.seed, "Seed overriding the config");
  auto* o = sub->add_option("--out", c.out, "Output directory");
  if (need_out) o->required();
  auto* k = sub->add_option("--corpus", c.corpus, "Corpus file (line-delimited JSON)");
  if (need_corpus) k->required()->check(CLI::ExistingFile);
}

std::string default_data(const char* file) { return (fs::path(MOODSHIFT_DEFAULT_DATA) / file).string(); }

annotation::AnnotationServer* g_server = nullptr;
void on_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"moodshift: sentiment domain-transfer laboratory"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  // ingest
  Common ingest_c;
  auto* ingest_cmd = app.add_subcommand("ingest", "Validate and deduplicate a corpus");
  add_common(ingest_cmd, ingest_c, true, true);
  ingest_cmd->callback([&] {
    const auto& c = ingest_c;
    write_manifest("ingest", c, 0, {{"corpus", c.corpus}}, {c.corpus});
    auto res = stage("ingest", [&] { return ingest_file(c.corpus); });
    for (const auto& d : res.diagnostics)
      std::cerr << c.corpus << (d.line ? ":" + std::to_string(d.line) : "") << ": " << (d.warning ? "warning: " : "")
                << d.message << '\n';
    const auto deduped = stage("dedup", [&] { return dedup(res.dataset); });
    const auto path = out_path(c, deduped.name() + ".corpus");
    stage("export", [&] {
      export_corpus_file(deduped, path);
      return 0;
    });
    std::printf("records: %zu valid, %zu skipped, %zu duplicates dropped, %zu kept\n", res.dataset.size(),
                res.skipped, res.dataset.size() - deduped.size(), deduped.size());
    bool any_label = false;
    for (const auto& it : deduped) any_label = any_label || it.label.has_value();
    if (any_label) {
      for (const auto& [l, f] : label_distribution(deduped))
        std::printf("  %-8s %.3f\n", std::string(label_name(l)).c_str(), f);
    }
    std::printf("wrote %s\n", path.c_str());
  });

  // split
  Common split_c;
  std::string fraction;
  bool no_stratify = false;
  auto* split_cmd = app.add_subcommand("split", "Stratified train/test split");
  add_common(split_cmd, split_c, true, true);
  split_cmd->add_option("--test-fraction", fraction, "Test share as p/q or decimal (default 1/5)");
  split_cmd->add_flag("--no-stratify", no_stratify, "Shuffle all items together");
  split_cmd->callback([&] {
    const auto& c = split_c;
    const auto ini = load_ini(c);
    SplitSpec spec;
    if (ini) {
      if (auto f = ini->get("split", "test_fraction")) spec.test_fraction = Fraction::parse(*f);
      spec.seed = ini->get_u64("split", "seed", ini->get_u64("experiment", "seed", 0));
      spec.stratified = ini->get_bool("split", "stratified", true);
    }
    if (!fraction.empty()) spec.test_fraction = Fraction::parse(fraction);
    if (c.seed) spec.seed = *c.seed;
    if (no_stratify) spec.stratified = false;
    write_manifest("split", c, spec.seed,
                   {{"corpus", c.corpus},
                    {"split.test_fraction", std::to_string(spec.test_fraction.num) + "/" +
                                                std::to_string(spec.test_fraction.den)},
                    {"split.stratified", spec.stratified ? "true" : "false"}},
                   {c.corpus, c.config});
    const auto ds = stage("load", [&] { return load_corpus(c.corpus); });
    const auto parts = stage("split", [&] { return stratified_split(ds, spec); });
    stage("export", [&] {
      export_corpus_file(parts.train, out_path(c, parts.train.name() + ".corpus"));
      export_corpus_file(parts.test, out_path(c, parts.test.name() + ".corpus"));
      return 0;
    });
    std::printf("train %zu, test %zu\n", parts.train.size(), parts.test.size());
  });

  // baseline
  Common base_c;
  std::string engine = "lexicon";
  std::string lexicon_path = default_data("lexicon.tsv");
  auto* base_cmd = app.add_subcommand("baseline", "Rule-based lexicon classifier");
  add_common(base_cmd, base_c, true, false);
  base_cmd->add_option("--engine", engine, "lexicon | average")->check(CLI::IsMember({"lexicon", "average"}));
  base_cmd->add_option("--lexicon", lexicon_path, "Lexicon TSV")->check(CLI::ExistingFile);
  base_cmd->callback([&] {
    const auto& c = base_c;
    const auto ini = load_ini(c);
    const RuleConfig rules = ini ? read_rule_config(*ini) : RuleConfig{};
    rules.validate();
    write_manifest("baseline", c, 0, {{"corpus", c.corpus}, {"engine", engine}, {"lexicon", lexicon_path}},
                   {c.corpus, lexicon_path, c.config});
    const auto lex = stage("lexicon", [&] { return Lexicon::load_file(lexicon_path); });
    const auto ds = stage("load", [&] { return load_corpus(c.corpus); });
    const auto eng = parse_engine(engine);
    std::vector<SentimentLabel> preds;
    for (const auto& it : ds) preds.push_back(classify_text(it.tweet.text, lex, rules, eng));
    const auto rep = stage("evaluate", [&] {
      return evaluate(confusion(ds.gold_labels(), preds), engine == "lexicon" ? "Lexicon rules" : "Average polarity");
    });
    if (!c.out.empty()) stage("write", [&] {
        write_preds(out_path(c, "predictions.tsv"), ds, preds);
        return 0;
      });
    std::cout << render_table(std::span<const EvalReport>(&rep, 1));
  });

  // train
  Common train_c;
  std::size_t max_vocab = 5000;
  auto* train_cmd = app.add_subcommand("train", "Train the transformer classifier from scratch");
  add_common(train_cmd, train_c, true, true);
  train_cmd->add_option("--max-vocab", max_vocab, "Vocabulary size including reserved tokens");
  train_cmd->callback([&] {
    const auto& c = train_c;
    const auto ini = load_ini(c);
    nn::TransformerConfig mc = ini ? read_model_config(*ini) : nn::TransformerConfig{};
    nn::TrainConfig tc = ini ? read_train_config(*ini, "train") : nn::TrainConfig{};
    if (ini && !ini->has("train", "seed")) tc.seed = ini->get_u64("experiment", "seed", 0);
    if (c.seed) tc.seed = *c.seed;
    write_manifest("train", c, tc.seed,
                   {{"corpus", c.corpus},
                    {"train.learning_rate", std::to_string(tc.learning_rate)},
                    {"train.batch_size", std::to_string(tc.batch_size)},
                    {"train.epochs", std::to_string(tc.epochs)},
                    {"train.optimizer", std::string(nn::optimizer_name(tc.optimizer))},
                    {"max_vocab", std::to_string(max_vocab)}},
                   {c.corpus, c.config});
    const auto ds = stage("load", [&] { return load_corpus(c.corpus); });
    auto res = stage("train", [&] {
      const auto vocab = nn::build_vocab(ds, max_vocab);
      return nn::train(nn::init_checkpoint(vocab, mc, tc.seed), ds, tc);
    });
    stage("save", [&] {
      nn::save_checkpoint_file(res.checkpoint, out_path(c, "checkpoint"));
      std::ofstream h(out_path(c, "history.tsv"));
      h << "epoch\tloss\ttrain_accuracy\n";
      for (std::size_t i = 0; i < res.history.size(); ++i)
        h << i + 1 << '\t' << res.history[i].mean_loss << '\t' << res.history[i].train_accuracy << '\n';
      return 0;
    });
    for (std::size_t i = 0; i < res.history.size(); ++i)
      std::printf("epoch %zu  loss %.4f  train accuracy %.3f\n", i + 1, res.history[i].mean_loss,
                  res.history[i].train_accuracy);
  });

  // finetune
  Common ft_c;
  std::string ft_ckpt;
  auto* ft_cmd = app.add_subcommand("finetune", "Fine-tune a checkpoint on a new corpus");
  add_common(ft_cmd, ft_c, true, true);
  ft_cmd->add_option("--checkpoint", ft_ckpt, "Pretrained checkpoint")->required()->check(CLI::ExistingFile);
  ft_cmd->callback([&] {
    const auto& c = ft_c;
    const auto ini = load_ini(c);
    nn::TrainConfig tc = ini ? read_train_config(*ini, "finetune") : nn::TrainConfig{};
    if (ini && !ini->has("finetune", "seed")) tc.seed = ini->get_u64("experiment", "seed", 0);
    if (c.seed) tc.seed = *c.seed;
    std::optional<nn::TransformerConfig> expected;
    if (ini && ini->get("model", "d_model")) expected = read_model_config(*ini);
    write_manifest("finetune", c, tc.seed,
                   {{"corpus", c.corpus},
                    {"checkpoint", ft_ckpt},
                    {"finetune.learning_rate", std::to_string(tc.learning_rate)},
                    {"finetune.batch_size", std::to_string(tc.batch_size)},
                    {"finetune.epochs", std::to_string(tc.epochs)}},
                   {c.corpus, ft_ckpt, c.config});
    const auto pre = stage("load-checkpoint", [&] { return nn::load_checkpoint_file(ft_ckpt); });
    const auto ds = stage("load", [&] { return load_corpus(c.corpus); });
    auto res = stage("fine-tune", [&] { return nn::fine_tune(pre, ds, tc, expected); });
    stage("save", [&] {
      nn::save_checkpoint_file(res.checkpoint, out_path(c, "checkpoint"));
      return 0;
    });
    for (std::size_t i = 0; i < res.history.size(); ++i)
      std::printf("epoch %zu  loss %.4f  train accuracy %.3f\n", i + 1, res.history[i].mean_loss,
                  res.history[i].train_accuracy);
  });

  // eval
  Common eval_c;
  std::string eval_ckpt, eval_name;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a labelled corpus");
  add_common(eval_cmd, eval_c, true, false);
  eval_cmd->add_option("--checkpoint", eval_ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--name", eval_name, "Model name for the table block");
  eval_cmd->callback([&] {
    const auto& c = eval_c;
    write_manifest("eval", c, 0, {{"corpus", c.corpus}, {"checkpoint", eval_ckpt}}, {c.corpus, eval_ckpt});
    const auto ck = stage("load-checkpoint", [&] { return nn::load_checkpoint_file(eval_ckpt); });
    const auto ds = stage("load", [&] { return load_corpus(c.corpus); });
    const auto p = stage("predict", [&] { return nn::predict(ck, ds); });
    const auto rep = stage("evaluate", [&] {
      return evaluate(confusion(ds.gold_labels(), p.labels), eval_name.empty() ? ds.name() : eval_name);
    });
    if (!c.out.empty()) stage("write", [&] {
        write_preds(out_path(c, "predictions.tsv"), ds, p.labels);
        return 0;
      });
    std::cout << render_table(std::span<const EvalReport>(&rep, 1));
  });

  // lda
  Common lda_c;
  std::optional<int> k;
  std::string stopwords = default_data("stopwords.txt");
  std::size_t min_df = 1;
  std::vector<std::string> names;
  auto* lda_cmd = app.add_subcommand("lda", "Topic model a corpus");
  add_common(lda_cmd, lda_c, true, true);
  lda_cmd->add_option("--k", k, "Number of topics");
  lda_cmd->add_option("--stopwords", stopwords, "Stopword list")->check(CLI::ExistingFile);
  lda_cmd->add_option("--min-df", min_df, "Minimum document frequency");
  lda_cmd->add_option("--names", names, "Human topic names by topic id")->delimiter(',');
  lda_cmd->callback([&] {
    const auto& c = lda_c;
    const auto ini = load_ini(c);
    lda::LdaConfig cfg = ini ? read_lda_config(*ini) : lda::LdaConfig{};
    if (ini) min_df = ini->get_u64("lda", "min_df", min_df);
    if (k) cfg.k = *k;
    if (c.seed) cfg.seed = *c.seed;
    write_manifest("lda", c, cfg.seed,
                   {{"corpus", c.corpus},
                    {"lda.k", std::to_string(cfg.k)},
                    {"lda.alpha", std::to_string(cfg.effective_alpha())},
                    {"lda.beta", std::to_string(cfg.beta)},
                    {"lda.iterations", std::to_string(cfg.iterations)},
                    {"lda.min_df", std::to_string(min_df)}},
                   {c.corpus, stopwords, c.config});
    const auto ds = stage("load", [&] { return load_corpus(c.corpus); });
    const auto sw = stage("stopwords", [&] { return lda::load_stopwords(stopwords); });
    const auto bow = stage("bag-of-words", [&] { return lda::build_bow(ds, sw, min_df); });
    if (bow.dropped_docs) std::cerr << "note: " << bow.dropped_docs << " documents empty after filtering\n";
    const auto model = stage("fit", [&] { return lda::fit(bow.dtm, cfg); });
    const auto topics = lda::summarize(model, bow.dtm, names);
    stage("write", [&] {
      std::ofstream rep(out_path(c, "topics.txt"), std::ios::binary);
      lda::write_topic_report(rep, topics);
      std::ofstream pie(out_path(c, "pie.csv"), std::ios::binary);
      lda::write_pie_data(pie, topics);
      return 0;
    });
    std::printf("K=%d, %zu documents, %zu tokens, perplexity %.3f\n", cfg.k, bow.dtm.num_docs(),
                bow.dtm.num_tokens(), lda::perplexity(model, bow.dtm));
    lda::write_topic_report(std::cout, topics);
  });

  // report
  std::vector<std::string> pred_files;
  auto* report_cmd = app.add_subcommand("report", "Combine prediction files into one table");
  report_cmd->add_option("predictions", pred_files, "Prediction TSV files")->required()->check(CLI::ExistingFile);
  report_cmd->callback([&] {
    std::vector<EvalReport> reports;
    for (const auto& f : pred_files) {
      reports.push_back(stage("evaluate", [&] {
        const auto rows = read_predictions_file(f);
        std::vector<SentimentLabel> g, p;
        for (const auto& r : rows) {
          g.push_back(r.gold);
          p.push_back(r.pred);
        }
        return evaluate(confusion(g, p), fs::path(f).stem().string());
      }));
    }
    std::cout << render_table(reports);
  });

  // experiment
  Common exp_c;
  auto* exp_cmd = app.add_subcommand("experiment", "Run the full domain-transfer pipeline");
  add_common(exp_cmd, exp_c, false, false);
  exp_cmd->get_option("--config")->required();
  exp_cmd->callback([&] {
    auto& c = exp_c;
    auto cfg = stage("config", [&] { return load_experiment_config(c.config); });
    if (c.seed) override_seed(cfg, *c.seed);
    if (!c.out.empty()) cfg.output_dir = c.out;
    c.out = cfg.output_dir;
    std::vector<std::string> inputs = {c.config, cfg.source_corpus, cfg.target_corpus, cfg.stopwords};
    if (cfg.source_checkpoint) {
      inputs[1] = *cfg.source_checkpoint;
    }
    stage("manifest", [&] {
      write_manifest("experiment", c, cfg.seed, cfg.resolved(), inputs);
      return 0;
    });
    try {
      const auto rep = run_experiment(cfg);
      std::cout << render_report(rep);
    } catch (const StageError& e) {
      throw StageFailure("experiment", e.what());
    }
  });

  // serve
  Common serve_c;
  int port = 8080;
  std::string host = "127.0.0.1";
  std::string ui_dir;
  auto* serve_cmd = app.add_subcommand("serve", "Annotation service");
  add_common(serve_cmd, serve_c, true, false);
  serve_cmd->add_option("--port", port, "Port (0 picks a free one)");
  serve_cmd->add_option("--host", host, "Bind address");
  serve_cmd->add_option("--ui", ui_dir, "Serve the annotation UI from DIR")->expected(0, 1)->default_str("ui/dist");
  serve_cmd->callback([&] {
    const auto& c = serve_c;
    const char* env = std::getenv("MOODSHIFT_DATA_DIR");
    const std::string data_dir = env && *env ? env : "annotation_data";
    auto ds = stage("load", [&] { return load_corpus(c.corpus); });
    annotation::AnnotationStore store(std::move(ds), (fs::path(data_dir) / "annotations.log").string());
    annotation::ServerOptions opts;
    opts.host = host;
    opts.port = port;
    opts.data_dir = data_dir;
    if (serve_cmd->count("--ui")) opts.ui_dir = ui_dir.empty() ? "ui/dist" : ui_dir;
    annotation::AnnotationServer server(store, opts);
    const int bound = stage("bind", [&] { return server.bind(); });
    std::printf("serving %s (%zu tweets) on http://%s:%d, log in %s\n", store.corpus_name().c_str(), store.size(),
                host.c_str(), bound, data_dir.c_str());
    std::fflush(stdout);
    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    server.serve();
    g_server = nullptr;
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const StageFailure& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
