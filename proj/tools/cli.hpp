#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lexcluster/lexcluster.hpp"

namespace lexcluster::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

inline constexpr const char* kConfigEnv = "LEXCLUSTER_CONFIG";

/// JSON lines on stderr; verbosity 0 = warnings only, 1 = info, 2 = debug.
class Logger {
 public:
  explicit Logger(std::ostream& err) : err_(err) {}
  int verbosity = 1;
  std::string command;

  void warn(const std::string& msg) const { emit("warn", msg); }
  void info(const std::string& msg) const {
    if (verbosity >= 1) emit("info", msg);
  }
  void debug(const std::string& msg) const {
    if (verbosity >= 2) emit("debug", msg);
  }
  void error(const std::string& msg) const { emit("error", msg); }

 private:
  void emit(const char* level, const std::string& msg) const {
    ojson j;
    j["level"] = level;
    if (!command.empty()) j["command"] = command;
    j["msg"] = msg;
    err_ << j.dump() << '\n';
  }
  std::ostream& err_;
};

/// Config file values for options the user did not pass on the command line.
/// A key is looked up under the subcommand's section first, then at top level.
class ConfigSource {
 public:
  json doc = json::object();
  fs::path path;  // empty when no config file is in use

  const json* find(const std::string& section, const std::string& key) const {
    if (auto s = doc.find(section); s != doc.end() && s->is_object())
      if (auto v = s->find(key); v != s->end()) return &*v;
    if (auto v = doc.find(key); v != doc.end()) return &*v;
    return nullptr;
  }

  /// Resolves a path written in the config relative to the config's folder.
  std::string resolve(const std::string& p) const {
    if (p.empty() || fs::path(p).is_absolute() || path.empty()) return p;
    return (path.parent_path() / p).lexically_normal().string();
  }
};

inline ConfigSource load_config(const std::string& path) {
  ConfigSource c;
  if (path.empty()) return c;
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  try {
    c.doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError("config file " + path + ": " + e.what());
  }
  if (!c.doc.is_object()) throw SchemaError("config file " + path + " must hold a JSON object");
  c.path = path;
  return c;
}

/// Option registry: flags win, then config entries, then the initial value.
class Binder {
 public:
  template <typename T>
  CLI::Option* option(CLI::App* sub, const std::string& flags, T& var, const std::string& help) {
    CLI::Option* opt = sub->add_option(flags, var, help);
    if constexpr (std::is_arithmetic_v<T>) opt->capture_default_str();
    remember(sub, opt, var);
    return opt;
  }

  CLI::Option* flag(CLI::App* sub, const std::string& flags, bool& var, const std::string& help) {
    CLI::Option* opt = sub->add_flag(flags, var, help);
    remember(sub, opt, var);
    return opt;
  }

  /// Paths from the config are relative to the config file.
  CLI::Option* path(CLI::App* sub, const std::string& flags, std::string& var, const std::string& help) {
    CLI::Option* opt = sub->add_option(flags, var, help);
    bindings_.push_back({sub, opt, [&var](const ConfigSource& c, const json& v) {
                           var = c.resolve(v.get<std::string>());
                         }});
    return opt;
  }

  void apply(const CLI::App* active, const std::string& section, const ConfigSource& config) const {
    for (const auto& b : bindings_) {
      if (b.sub != active || b.opt->count() > 0) continue;
      const std::string key = key_of(b.opt);
      const json* v = config.find(section, key);
      if (!v) continue;
      try {
        b.set(config, *v);
      } catch (const json::exception& e) {
        throw ParameterError("config key \"" + key + "\": " + e.what());
      }
    }
  }

 private:
  struct Binding {
    const CLI::App* sub;
    const CLI::Option* opt;
    std::function<void(const ConfigSource&, const json&)> set;
  };

  template <typename T>
  void remember(CLI::App* sub, CLI::Option* opt, T& var) {
    bindings_.push_back({sub, opt, [&var](const ConfigSource&, const json& v) { var = v.get<T>(); }});
  }
  template <typename T>
  void remember(CLI::App* sub, CLI::Option* opt, std::optional<T>& var) {
    bindings_.push_back({sub, opt, [&var](const ConfigSource&, const json& v) {
                           if (!v.is_null()) var = v.get<T>();
                         }});
  }

  static std::string key_of(const CLI::Option* opt) {
    std::string name = opt->get_name(false, true);
    std::string key;
    for (char c : name) {
      if (c == '-' && key.empty()) continue;
      key += c == '-' ? '_' : c;
    }
    return key;
  }

  std::vector<Binding> bindings_;
};

/// Paths are validated before any work starts.
inline void require_input(const std::string& path, const std::string& what) {
  if (path.empty()) throw ParameterError("missing " + what + " path");
  if (!fs::exists(path)) throw IoError(what + " not found: " + path);
}

inline void require_output(const std::string& path, const std::string& what) {
  if (path.empty()) throw ParameterError("missing " + what + " path");
  fs::path p(path);
  if (p.has_parent_path() && !fs::is_directory(p.parent_path()))
    throw IoError("output directory for " + what + " does not exist: " + p.parent_path().string());
}

/// A corpus file is labeled when its first record carries a label.
inline CorpusKind detect_kind(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus file: " + path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      json j = json::parse(line);
      return j.is_object() && j.contains("label") ? CorpusKind::labeled : CorpusKind::unlabeled;
    } catch (const json::parse_error&) {
      return CorpusKind::unlabeled;  // load_corpus reports the parse error
    }
  }
  return CorpusKind::unlabeled;
}

struct TokenizerOptions {
  std::string stopwords;  // file; empty means the bundled list
  std::size_t min_len = 3;
  std::size_t max_len = 15;
  bool keep_urls = false;
  bool keep_mentions = false;
  bool no_lowercase = false;

  void add(Binder& b, CLI::App* sub) {
    b.path(sub, "--stopwords", stopwords, "Stopword file (one word per line)");
    b.option(sub, "--min-len", min_len, "Shortest kept token, in characters");
    b.option(sub, "--max-len", max_len, "Longest kept token, in characters");
    b.flag(sub, "--keep-urls", keep_urls, "Keep URL tokens");
    b.flag(sub, "--keep-mentions", keep_mentions, "Keep @mention tokens");
    b.flag(sub, "--no-lowercase", no_lowercase, "Do not lowercase");
  }

  TokenizerConfig config() const {
    TokenizerConfig c = TokenizerConfig::with_default_stopwords();
    if (!stopwords.empty()) {
      require_input(stopwords, "stopword file");
      c.stopwords = load_stopwords(stopwords);
    }
    c.min_len = min_len;
    c.max_len = max_len;
    c.strip_urls = !keep_urls;
    c.strip_mentions = !keep_mentions;
    c.lowercase = !no_lowercase;
    c.validate();
    return c;
  }
};

/// Loads a corpus and tokenizes it unless it was preprocessed already.
inline Corpus load_tokenized(const std::string& path, std::optional<CorpusKind> kind,
                             const TokenizerOptions& tok) {
  Corpus c = load_corpus(path, kind ? *kind : detect_kind(path));
  return c.tokenized() ? c : tokenize_corpus(c, tok.config());
}

inline std::string join_path(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

/// Everything one invocation shares across subcommands.
struct Context {
  Logger log;
  ConfigSource config;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  ojson summary;

  explicit Context(std::ostream& err) : log(err) {}

  std::uint64_t stage_seed(std::uint64_t offset) const { return seed + offset; }

  void input(const std::string& path) { summary["inputs"][path] = file_hash(path); }
  void output(const std::string& path, std::string_view content) {
    write_file_atomic(path, content);
    summary["outputs"].push_back(path);
  }
};

// ---- Subcommands ----------------------------------------------------------

struct PreprocessCmd {
  std::string input, out;
  TokenizerOptions tok;

  void add(Binder& b, CLI::App* sub) {
    b.path(sub, "--input,-i", input, "Corpus (JSONL)");
    b.path(sub, "--out,-o", out, "Tokenized corpus (JSONL)");
    tok.add(b, sub);
  }
  void run(Context& ctx) {
    require_input(input, "input corpus");
    require_output(out, "output corpus");
    Corpus raw = load_corpus(input, detect_kind(input));
    Corpus c = tokenize_corpus(raw, tok.config());
    ctx.input(input);
    ctx.output(out, serialize_corpus(c));
    ctx.summary["documents"] = c.size();
  }
};

struct StatsCmd {
  std::string input;
  TokenizerOptions tok;

  void add(Binder& b, CLI::App* sub) {
    b.path(sub, "--input,-i", input, "Corpus (JSONL)");
    tok.add(b, sub);
  }
  void run(Context& ctx) {
    require_input(input, "input corpus");
    Corpus c = load_tokenized(input, std::nullopt, tok);
    ctx.input(input);
    ctx.summary["stats"] = stats(c).to_json();
  }
};

struct SplitCmd {
  std::string input, out_train, out_test;
  double train_fraction = 0.7;

  void add(Binder& b, CLI::App* sub) {
    b.path(sub, "--input,-i", input, "Labeled corpus (JSONL)");
    b.path(sub, "--out-train", out_train, "Training part (JSONL)");
    b.path(sub, "--out-test", out_test, "Test part (JSONL)");
    b.option(sub, "--train-fraction", train_fraction, "Share of documents in the training part");
  }
  void run(Context& ctx) {
    require_input(input, "input corpus");
    require_output(out_train, "training split");
    require_output(out_test, "test split");
    Corpus c = load_corpus(input, detect_kind(input));
    const std::uint64_t s = ctx.stage_seed(seed_offset::split);
    auto [train, test] = split(c, {train_fraction, s});
    ctx.input(input);
    ctx.output(out_train, serialize_corpus(train));
    ctx.output(out_test, serialize_corpus(test));
    ctx.summary["stage_seed"] = s;
    ctx.summary["train_documents"] = train.size();
    ctx.summary["test_documents"] = test.size();
  }
};

struct BrownCmd {
  std::string input, out, dendrogram;
  std::size_t window = 1000;
  std::size_t k = 0;
  std::uint64_t min_count = 5;
  TokenizerOptions tok;

  void add(Binder& b, CLI::App* sub) {
    b.path(sub, "--input,-i", input, "Unlabeled corpus (JSONL)");
    b.path(sub, "--out,-o", out, "Cluster file for the cut at --k (cluster_id<TAB>word)");
    b.path(sub, "--dendrogram", dendrogram,
           "Prefix for PREFIX.paths.tsv and PREFIX.merges.tsv (the full merge tree)");
    b.option(sub, "--window", window, "Active cluster window size");
    b.option(sub, "--k", k, "Cut the tree into this many clusters (requires --out)");
    b.option(sub, "--min-count", min_count, "Drop words rarer than this");
    tok.add(b, sub);
  }
  void run(Context& ctx) {
    require_input(input, "input corpus");
    if (out.empty() && dendrogram.empty()) throw ParameterError("brown needs --out and/or --dendrogram");
    if (!out.empty()) {
      if (k == 0) throw ParameterError("--out needs --k");
      require_output(out, "cluster file");
    }
    if (!dendrogram.empty()) require_output(dendrogram + ".paths.tsv", "dendrogram");
    Corpus c = load_tokenized(input, std::nullopt, tok);
    Vocabulary vocab = build_vocabulary(c, min_count);
    ctx.log.info("vocabulary of " + std::to_string(vocab.size()) + " words; clustering");
    Dendrogram d = brown_cluster(count_bigrams(c, vocab), {window, true, false});
    ctx.input(input);
    if (!dendrogram.empty()) {
      ctx.output(dendrogram + ".paths.tsv", serialize_paths(d));
      ctx.output(dendrogram + ".merges.tsv", serialize_merges(d));
    }
    if (!out.empty()) ctx.output(out, serialize_clustering(cut(d, k, input)));
    ctx.summary["vocab_size"] = vocab.size();
    ctx.summary["merges"] = d.merges.size();
  }
};

struct EmbedCmd {
  std::string input, out, out_input;
  SgnsConfig sgns;
  std::uint64_t min_count = 5;
  TokenizerOptions tok;

  void add(Binder& b, CLI::App* sub) {
    b.path(sub, "--input,-i", input, "Unlabeled corpus (JSONL)");
    b.path(sub, "--out,-o", out, "Output-vector table in the text embedding format");
    b.path(sub, "--out-input", out_input, "Also write the input-vector table here");
    b.option(sub, "--dim", sgns.dim, "Embedding dimension");
    b.option(sub, "--window", sgns.window, "Context window radius");
    b.option(sub, "--negatives", sgns.negatives, "Negative samples per pair");
    b.option(sub, "--subsample", sgns.subsample_threshold, "Frequent-word subsampling threshold");
    b.option(sub, "--epochs", sgns.epochs, "Passes over the corpus");
    b.option(sub, "--learning-rate", sgns.initial_learning_rate, "Initial learning rate");
    b.option(sub, "--min-count", min_count, "Drop words rarer than this");
    tok.add(b, sub);
  }
  void run(Context& ctx) {
    require_input(input, "input corpus");
    require_output(out, "embedding file");
    if (!out_input.empty()) require_output(out_input, "input embedding file");
    Corpus c = load_tokenized(input, std::nullopt, tok);
    Vocabulary vocab = build_vocabulary(c, min_count);
    sgns.seed = ctx.stage_seed(seed_offset::embed);
    ctx.log.info("training " + std::to_string(sgns.dim) + "-d vectors for " + std::to_string(vocab.size()) +
                 " words");
    EmbeddingMatrix emb = sgns_train(c, vocab, sgns);
    ctx.input(input);
    ctx.output(out, serialize_embeddings(emb.vocab, emb.dim, emb.output));
    if (!out_input.empty()) ctx.output(out_input, serialize_embeddings(emb.vocab, emb.dim, emb.input));
    ctx.summary["stage_seed"] = sgns.seed;
    ctx.summary["vocab_size"] = vocab.size();
  }
};

struct KmeansCmd {
  std::string vectors, out;
  KmeansConfig km;

  void add(Binder& b, CLI::App* sub) {
    b.path(sub, "--vectors", vectors, "Embedding file (text format)");
    b.path(sub, "--out,-o", out, "Cluster file (cluster_id<TAB>word)");
    b.option(sub, "--k", km.k, "Number of clusters");
    b.option(sub, "--restarts", km.restarts, "Independent restarts; the lowest objective wins");
    b.option(sub, "--max-iters", km.max_iters, "Lloyd iterations per restart");
    b.option(sub, "--tolerance", km.tolerance, "Relative objective change that stops Lloyd");
    b.flag(sub, "--normalize", km.normalize, "Cluster unit-length vectors");
  }
  void run(Context& ctx) {
    require_input(vectors, "embedding file");
    require_output(out, "cluster file");
    EmbeddingMatrix emb = load_pretrained(vectors);
    km.seed = ctx.stage_seed(seed_offset::kmeans);
    WordClustering c = kmeans_cluster(emb, km, vectors);
    ctx.input(vectors);
    ctx.output(out, serialize_clustering(c));
    ctx.summary["stage_seed"] = km.seed;
    ctx.summary["objective"] = kmeans_objective(emb, c);
  }
};

/// Sparse rows: id<TAB>label<TAB>space-separated active feature indices.
inline std::string serialize_rows(const Corpus& c, const BinaryMatrix& x) {
  std::string out;
  for (std::size_t i = 0; i < c.size(); ++i) {
    out += c[i].id;
    out += '\t';
    out += c[i].label ? std::to_string(*c[i].label) : "";
    out += '\t';
    bool first = true;
    for (auto f : x.row(i)) {
      if (!first) out += ' ';
      out += std::to_string(f);
      first = false;
    }
    out += '\n';
  }
  return out;
}

struct FeaturizeCmd {
  std::string train, clusters, out, input, matrix;
  std::size_t k = 0;
  TokenizerOptions tok;

  void add(Binder& b, CLI::App* sub) {
    b.path(sub, "--train", train, "Labeled corpus for PMI selection (bag of words)");
    b.option(sub, "--k", k, "Number of PMI-selected words (bag of words)");
    b.path(sub, "--clusters", clusters, "Cluster file (bag of clusters)");
    b.path(sub, "--out,-o", out, "Feature spec (JSON)");
    b.path(sub, "--input,-i", input, "Corpus to featurize with the spec");
    b.path(sub, "--matrix", matrix, "Sparse feature rows for --input");
    tok.add(b, sub);
  }
  void run(Context& ctx) {
    if (clusters.empty() == train.empty())
      throw ParameterError("featurize needs exactly one of --train (bag of words) or --clusters");
    require_output(out, "feature spec");
    if (!input.empty()) {
      require_input(input, "input corpus");
      require_output(matrix, "feature matrix");
    }
    std::optional<FeatureSpec> spec;
    if (!clusters.empty()) {
      require_input(clusters, "cluster file");
      spec = FeatureSpec::clusters(std::make_shared<WordClustering>(load_clustering(clusters)), clusters);
      ctx.input(clusters);
    } else {
      require_input(train, "training corpus");
      if (k == 0) throw ParameterError("bag of words needs --k");
      Corpus t = load_tokenized(train, CorpusKind::labeled, tok);
      TopK top = select_top_k(pmi_scores(t), k);
      if (top.fewer_than_k)
        ctx.log.warn("only " + std::to_string(top.spec.dim()) + " words available for k=" + std::to_string(k));
      spec = top.spec;
      ctx.input(train);
    }
    ctx.output(out, spec->to_json().dump(2) + "\n");
    if (!input.empty()) {
      Corpus c = load_tokenized(input, std::nullopt, tok);
      ctx.input(input);
      ctx.output(matrix, serialize_rows(c, featurize_corpus(c, *spec)));
    }
    ctx.summary["dim"] = spec->dim();
    ctx.summary["feature_spec_hash"] = spec->hash();
  }
};

inline FeatureSpec load_spec(const std::string& path) {
  require_input(path, "feature spec");
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ParseError("feature spec " + path + ": " + e.what());
  }
  return FeatureSpec::from_json(j);
}

struct TrainCmd {
  std::string train, features, out;
  std::optional<double> lambda;
  std::vector<double> lambda_grid = default_lambda_grid();
  std::size_t folds = 0;
  TokenizerOptions tok;

  void add(Binder& b, CLI::App* sub) {
    b.path(sub, "--train", train, "Labeled training corpus (JSONL)");
    b.path(sub, "--features", features, "Feature spec (JSON)");
    b.path(sub, "--out,-o", out, "Model file (JSON)");
    b.option(sub, "--lambda", lambda, "Fixed L2 weight; otherwise chosen by cross-validation");
    b.option(sub, "--lambda-grid", lambda_grid, "Candidate L2 weights")->delimiter(',');
    b.option(sub, "--folds", folds, "Cross-validation folds; 0 means leave-one-out");
    tok.add(b, sub);
  }
  void run(Context& ctx) {
    require_input(train, "training corpus");
    require_output(out, "model file");
    FeatureSpec spec = load_spec(features);
    Corpus c = load_tokenized(train, CorpusKind::labeled, tok);
    const BinaryMatrix x = featurize_corpus(c, spec);
    const std::vector<int> y = labels_of(c);
    double chosen;
    if (lambda) {
      chosen = *lambda;
    } else {
      CvOptions cv;
      cv.folds = folds;
      LambdaSelection sel = loocv_select_lambda(x, y, lambda_grid, cv);
      chosen = sel.lambda;
      for (auto& [l, loss] : sel.mean_loss)
        ctx.log.debug("lambda " + format_real(l, 6) + " mean held-out loss " + format_real(loss, 9));
    }
    TrainedModel m = lr_train(x, y, chosen);
    m.feature_spec_hash = spec.hash();
    if (!m.converged)
      ctx.log.warn("no convergence after " + std::to_string(m.iterations) + " iterations; gradient norm " +
                   format_real(m.gradient_norm, 6));
    ctx.input(train);
    ctx.input(features);
    ctx.output(out, m.to_json().dump() + "\n");
    ctx.summary["lambda"] = chosen;
    ctx.summary["converged"] = m.converged;
    ctx.summary["gradient_norm"] = m.gradient_norm;
  }
};

struct ScoreCmd {
  std::string model, features, input, out;
  double threshold = 0.5;
  TokenizerOptions tok;

  void add(Binder& b, CLI::App* sub) {
    b.path(sub, "--model", model, "Model file (JSON)");
    b.path(sub, "--features", features, "Feature spec the model was trained with");
    b.path(sub, "--input,-i", input, "Corpus to score (JSONL)");
    b.path(sub, "--out,-o", out, "Scores (id<TAB>score<TAB>predicted label)");
    b.option(sub, "--threshold", threshold, "Positive when the score exceeds this");
  }
  void run(Context& ctx) {
    require_input(model, "model file");
    require_input(input, "input corpus");
    require_output(out, "score file");
    FeatureSpec spec = load_spec(features);
    json mj;
    try {
      mj = json::parse(read_file(model));
    } catch (const json::parse_error& e) {
      throw ParseError("model file " + model + ": " + e.what());
    }
    TrainedModel m = TrainedModel::from_json(mj);
    if (!m.feature_spec_hash.empty() && m.feature_spec_hash != spec.hash())
      throw FormatError("model " + model + " was trained with a different feature spec than " + features);
    Corpus c = load_tokenized(input, std::nullopt, tok);
    const BinaryMatrix x = featurize_corpus(c, spec);
    std::vector<double> scores(c.size());
    std::string text;
    for (std::size_t i = 0; i < c.size(); ++i) {
      scores[i] = score_row(m, x.row(i));
      text += c[i].id + '\t' + format_real(scores[i]) + '\t' + (scores[i] > threshold ? "1" : "0") + '\n';
    }
    ctx.input(model);
    ctx.input(features);
    ctx.input(input);
    ctx.output(out, text);
    if (c.both_classes()) ctx.summary["auc"] = auc(scores, labels_of(c));
  }
};

/// Experiment grid from the config document (top level or an "experiment"
/// section). Artifact paths are relative to the config file.
inline ExperimentGrid grid_from_config(const ConfigSource& config, std::uint64_t global_seed,
                                       std::vector<std::string>& artifacts) {
  ExperimentGrid g;
  auto get = [&](const char* key, auto& field) {
    if (const json* v = config.find("experiment", key)) {
      try {
        field = v->get<std::decay_t<decltype(field)>>();
      } catch (const json::exception& e) {
        throw ParameterError(std::string("grid key \"") + key + "\": " + e.what());
      }
    }
  };
  get("train_sizes", g.train_sizes);
  get("k_values", g.k_values);
  get("resamples", g.resamples);
  get("lambda_grid", g.lambda_grid);
  get("loo_max_size", g.loo_max_size);
  get("cv_folds", g.cv_folds);
  g.base_seed = global_seed + seed_offset::experiment;
  get("base_seed", g.base_seed);

  const json* schemes = config.find("experiment", "schemes");
  if (!schemes) {
    g.schemes = {Scheme::bow("BOW")};
    return g;
  }
  if (!schemes->is_array()) throw ParameterError("grid \"schemes\" must be an array");
  for (const json& sj : *schemes) {
    if (!sj.is_object()) throw ParameterError("each scheme must be a JSON object");
    Scheme s;
    const std::string type = sj.value("type", "");
    s.name = sj.value("name", type);
    if (s.name.empty()) throw ParameterError("scheme without a name or type");
    if (sj.contains("k_values")) s.k_values = sj["k_values"].get<std::vector<std::size_t>>();
    auto artifact = [&](const char* key) {
      if (!sj.contains(key)) throw ResolutionError("scheme " + s.name + " needs \"" + key + "\"");
      std::string p = config.resolve(sj[key].get<std::string>());
      if (!fs::exists(p)) throw ResolutionError("scheme " + s.name + ": " + key + " not found: " + p);
      artifacts.push_back(p);
      return p;
    };
    if (type == "bow") {
      s.kind = SchemeKind::bow;
    } else if (type == "brown") {
      s.kind = SchemeKind::brown;
      const std::string paths = artifact("paths");
      const std::string merges = artifact("merges");
      s.dendrogram = std::make_shared<Dendrogram>(load_dendrogram(paths, merges));
    } else if (type == "kmeans") {
      s.kind = SchemeKind::kmeans;
      s.embeddings = std::make_shared<EmbeddingMatrix>(load_pretrained(artifact("vectors")));
      s.kmeans.seed = sj.value("seed", global_seed + seed_offset::kmeans);
      s.kmeans.restarts = sj.value("restarts", s.kmeans.restarts);
      s.kmeans.max_iters = sj.value("max_iters", s.kmeans.max_iters);
      s.kmeans.normalize = sj.value("normalize", s.kmeans.normalize);
    } else if (type == "clusters") {
      s.kind = SchemeKind::fixed;
      const std::string file = artifact("file");
      s.clustering = std::make_shared<WordClustering>(load_clustering(file));
    } else {
      throw ParameterError("scheme " + s.name + " has unknown type \"" + type +
                           "\" (expected bow, brown, kmeans or clusters)");
    }
    g.schemes.push_back(std::move(s));
  }
  return g;
}

struct ExperimentCmd {
  std::string train, test, out;
  std::optional<std::size_t> resamples;
  TokenizerOptions tok;

  void add(Binder& b, CLI::App* sub) {
    b.path(sub, "--train", train, "Labeled training pool (JSONL)");
    b.path(sub, "--test", test, "Labeled test set (JSONL)");
    b.path(sub, "--out,-o", out, "Results folder (created if missing)");
    sub->add_option("--resamples", resamples, "Override the grid's resample count");
    tok.add(b, sub);
  }
  void run(Context& ctx) {
    require_input(train, "training corpus");
    require_input(test, "test corpus");
    if (out.empty()) throw ParameterError("missing results folder path");
    std::vector<std::string> artifacts;
    ExperimentGrid grid = grid_from_config(ctx.config, ctx.seed, artifacts);
    if (resamples) grid.resamples = *resamples;
    grid.validate();
    Corpus tr = load_tokenized(train, CorpusKind::labeled, tok);
    Corpus te = load_tokenized(test, CorpusKind::labeled, tok);
    fs::create_directories(out);

    GridOptions opts;
    opts.jobs = ctx.jobs;
    opts.log = [&](const std::string& m) { ctx.log.info(m); };
    ctx.log.info("running grid with " + std::to_string(grid.schemes.size()) + " schemes");
    GridResult r = run_grid(tr, te, grid, opts);

    std::vector<std::string> cluster_schemes;
    for (const auto& s : grid.schemes)
      if (s.uses_clusters()) cluster_schemes.push_back(s.name);
    ctx.input(train);
    ctx.input(test);
    if (!ctx.config.path.empty()) ctx.input(ctx.config.path.string());
    for (const auto& a : artifacts) ctx.input(a);
    const SummaryTable best = best_over_k_table(r, cluster_schemes);
    const SummaryTable best_k = best_k_table(r);
    ctx.output(join_path(out, "results_long.csv"), long_csv(r));
    ctx.output(join_path(out, "results.csv"), aggregated_csv(r));
    ctx.output(join_path(out, "best_over_k.csv"), best.csv());
    ctx.output(join_path(out, "best_over_k.txt"), best.text());
    ctx.output(join_path(out, "best_k.csv"), best_k.csv());
    ctx.output(join_path(out, "best_k.txt"), best_k.text());
    ctx.summary["base_seed"] = grid.base_seed;
    ctx.summary["cells"] = r.cells.size();
  }
};

struct GenSyntheticCmd {
  std::string out_dir;
  SyntheticConfig cfg;
  double positive_prior = 0.3;

  void add(Binder& b, CLI::App* sub) {
    b.path(sub, "--out-dir,-o", out_dir, "Folder for train/test/unlabeled JSONL and planted.tsv");
    b.option(sub, "--vocab-size", cfg.vocab_size, "Vocabulary size");
    b.option(sub, "--n-clusters", cfg.n_clusters, "Planted word clusters");
    b.option(sub, "--topics-per-doc", cfg.topics_per_doc, "Clusters mixed in one document");
    b.option(sub, "--doc-len-min", cfg.doc_len_min, "Shortest document, in tokens");
    b.option(sub, "--doc-len-max", cfg.doc_len_max, "Longest document, in tokens");
    b.option(sub, "--positive-prior", positive_prior, "Share of positive documents");
    b.option(sub, "--informative-clusters", cfg.informative_clusters, "Clusters that positives favor");
    b.option(sub, "--topic-boost", cfg.topic_boost, "How strongly positives favor them");
    b.option(sub, "--within-cluster-zipf", cfg.within_cluster_zipf, "Zipf exponent inside a cluster");
    b.option(sub, "--word-tilt", cfg.word_tilt, "Per-word class lean inside each cluster");
    b.option(sub, "--n-train", cfg.n_train, "Labeled training documents");
    b.option(sub, "--n-test", cfg.n_test, "Labeled test documents");
    b.option(sub, "--n-unlabeled", cfg.n_unlabeled, "Unlabeled documents");
  }
  void run(Context& ctx) {
    if (out_dir.empty()) throw ParameterError("missing --out-dir");
    if (!(positive_prior >= 0.0 && positive_prior <= 1.0))
      throw ParameterError("positive prior must lie in [0, 1]");
    cfg.positive_prior = positive_prior;
    cfg.negative_prior = 1.0 - positive_prior;
    cfg.seed = ctx.stage_seed(seed_offset::synthetic);
    SyntheticData d = gen_synthetic(cfg);
    fs::create_directories(out_dir);
    ctx.output(join_path(out_dir, "train.jsonl"), serialize_corpus(d.train));
    ctx.output(join_path(out_dir, "test.jsonl"), serialize_corpus(d.test));
    ctx.output(join_path(out_dir, "unlabeled.jsonl"), serialize_corpus(d.unlabeled));
    ctx.output(join_path(out_dir, "planted.tsv"), serialize_clustering(d.planted));
    ctx.summary["stage_seed"] = cfg.seed;
  }
};

inline int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::usage:
      return 1;
    case ErrorKind::data:
      return 2;
    case ErrorKind::numeric:
      return 3;
  }
  return 2;
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Word-cluster features for classifying short posts from small labeled sets"};
  app.name("lexcluster");
  app.require_subcommand(1);
  app.fallthrough();
  app.failure_message(CLI::FailureMessage::help);

  Context ctx(err);
  Binder binder;
  std::string config_path;
  int verbose = 0;
  bool quiet = false;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  app.add_option("--config,-c", config_path,
                 std::string("JSON config; defaults to $") + kConfigEnv + " when set");
  CLI::Option* seed_opt = app.add_option("--seed", seed, "Global seed; each stage adds a fixed offset");
  CLI::Option* jobs_opt = app.add_option("--jobs,-j", jobs, "Worker threads for the experiment grid");
  app.add_flag("-v,--verbose", verbose, "More log output (repeatable)");
  app.add_flag("-q,--quiet", quiet, "Warnings and errors only");

  PreprocessCmd preprocess;
  StatsCmd stats_cmd;
  SplitCmd split_cmd;
  BrownCmd brown;
  EmbedCmd embed;
  KmeansCmd km;
  FeaturizeCmd featurize;
  TrainCmd train;
  ScoreCmd score_cmd;
  ExperimentCmd experiment;
  GenSyntheticCmd gen;

  struct Entry {
    CLI::App* sub;
    std::string section;
    std::function<void(Context&)> run;
  };
  std::vector<Entry> entries;
  auto add = [&](const char* name, const char* section, const char* help, auto& cmd) {
    CLI::App* sub = app.add_subcommand(name, help);
    cmd.add(binder, sub);
    entries.push_back({sub, section, [&cmd](Context& c) { cmd.run(c); }});
  };
  add("preprocess", "preprocess", "Tokenize a corpus and store the tokens", preprocess);
  add("stats", "stats", "Document, positive and vocabulary counts", stats_cmd);
  add("split", "split", "Seeded train/test split", split_cmd);
  add("brown", "brown", "Brown clustering of an unlabeled corpus", brown);
  add("embed", "embed", "Skip-gram negative-sampling word vectors", embed);
  add("kmeans", "kmeans", "k-means over word vectors", km);
  add("featurize", "featurize", "Build a feature spec (PMI top-k words or clusters)", featurize);
  add("train", "train", "Train L2 logistic regression", train);
  add("score", "score", "Score a corpus with a trained model", score_cmd);
  add("experiment", "experiment", "Training-size by k sweep with resampled AUC", experiment);
  add("gen-synthetic", "gen_synthetic", "Planted-cluster benchmark corpora", gen);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 1;
  }

  const Entry* active = nullptr;
  for (const auto& e : entries)
    if (e.sub->parsed()) active = &e;
  ctx.log.command = active->sub->get_name();
  try {
    if (config_path.empty())
      if (const char* env = std::getenv(kConfigEnv)) config_path = env;
    ctx.config = load_config(config_path);
    auto top = [&](const char* key, auto& var, const CLI::Option* opt) {
      if (opt && opt->count() > 0) return;
      if (const json* v = ctx.config.find(active->section, key)) var = v->get<std::decay_t<decltype(var)>>();
    };
    top("seed", seed, seed_opt);
    top("jobs", jobs, jobs_opt);
    int config_verbosity = 1;
    top("verbosity", config_verbosity, nullptr);
    ctx.log.verbosity = quiet ? 0 : (verbose > 0 ? 1 + verbose : config_verbosity);
    ctx.seed = seed;
    ctx.jobs = std::max<std::size_t>(1, jobs);
    binder.apply(active->sub, active->section, ctx.config);

    ctx.summary["command"] = ctx.log.command;
    ctx.summary["seed"] = seed;
    ctx.summary["inputs"] = ojson::object();
    ctx.summary["outputs"] = ojson::array();
    active->run(ctx);
    out << ctx.summary.dump() << std::endl;
    return 0;
  } catch (const Error& e) {
    ctx.log.error(e.what());
    return exit_code(e.kind());
  } catch (const json::exception& e) {
    ctx.log.error(std::string("bad config value: ") + e.what());
    return 1;
  } catch (const fs::filesystem_error& e) {
    ctx.log.error(e.what());
    return 2;
  } catch (const std::bad_alloc&) {
    ctx.log.error("out of memory");
    return 3;
  }
}

}  // namespace lexcluster::cli
