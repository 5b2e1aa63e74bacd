// Copyright 2026 The runon Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "runon/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include <cctype>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "runon/corpus.hpp"
#include "runon/crf.hpp"
#include "runon/error.hpp"
#include "runon/eval.hpp"
#include "runon/features.hpp"
#include "runon/ngram.hpp"
#include "runon/random.hpp"
#include "runon/seq2seq.hpp"
#include "runon/text.hpp"

namespace runon::cli {

namespace {

// Raised for unreadable or unwritable paths; maps to a data error.
class IoError : public Error {
 public:
  using Error::Error;
};

std::ifstream open_in(const std::string& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw IoError(path + ": cannot open for reading");
  return in;
}

void write_file(const std::string& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path + ": cannot open for writing");
  out << data;
  if (!out) throw IoError(path + ": write failed");
}

struct Globals {
  std::uint64_t seed = 1;
  int workers = 1;
  std::string log_level = "info";
};

struct Context {
  Globals g;
  std::ostream& out;
  std::shared_ptr<spdlog::logger> log;
  std::string resolved;  // resolved configuration as TOML

  // Writes `data` to `path` (plus the resolved configuration next to it) or
  // to standard output.
  void emit(const std::optional<std::string>& path, const std::string& data) const {
    if (!path) {
      out << data;
      return;
    }
    write_file(*path, data);
    write_file(*path + ".config.toml", resolved);
    log->info("wrote {}", *path);
  }
};

std::string env_name(const std::string& sub, const std::string& opt) {
  std::string n = "RUNON_";
  for (char c : sub.empty() ? opt : sub + "_" + opt) {
    n += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  }
  return n;
}

template <class T>
CLI::Option* flag_opt(CLI::App* app, const std::string& name, T& var, const std::string& help) {
  CLI::Option* o = app->add_option("--" + name, var, help);
  o->envname(env_name(app->get_parent() ? app->get_name() : "", name));
  return o;
}

CLI::Option* bool_flag(CLI::App* app, const std::string& name, bool& var, const std::string& help) {
  CLI::Option* o = app->add_flag("--" + name, var, help);
  o->envname(env_name(app->get_parent() ? app->get_name() : "", name));
  return o;
}

// --- Input helpers -----------------------------------------------------------

std::vector<LabeledSequence> load_labeled(const std::string& path, const std::optional<std::string>& parses) {
  auto in = open_in(path);
  auto data = read_labeled(in, path);
  if (parses) {
    auto pin = open_in(*parses);
    read_sequence_parses(pin, data, *parses);
  }
  return data;
}

std::vector<Paragraph> load_corpus(const std::string& path, const std::optional<std::string>& parses) {
  auto in = open_in(path);
  if (parses) {
    auto pin = open_in(*parses);
    return read_corpus(in, &pin, path);
  }
  return read_corpus(in, nullptr, path);
}

std::optional<NgramModel> load_lm(const std::optional<std::string>& path) {
  if (!path) return std::nullopt;
  auto in = open_in(*path);
  return NgramModel::load(in, *path);
}

std::vector<Labels> labels_of(std::span<const LabeledSequence> data) {
  std::vector<Labels> out;
  out.reserve(data.size());
  for (const auto& s : data) out.push_back(s.labels);
  return out;
}

std::string labeled_text(std::span<const LabeledSequence> data) {
  std::ostringstream os;
  write_labeled(os, data);
  return os.str();
}

Smoothing parse_smoothing(const std::string& s) {
  if (s == "kn") return Smoothing::kModifiedKneserNey;
  if (s == "wb") return Smoothing::kWittenBell;
  return Smoothing::kMaximumLikelihood;
}

// --- synthesize ----------------------------------------------------------------

struct SynthesizeArgs {
  std::string corpus;
  std::optional<std::string> parses;
  std::uint64_t runons = 0;
  std::uint64_t negatives = 0;
  std::uint64_t total = 0;
  std::string fraction;
  std::string downsample;
  std::optional<std::string> out;
  std::optional<std::string> out_parses;
};

void add_synthesize(CLI::App& app, SynthesizeArgs& a) {
  auto* s = app.add_subcommand("synthesize", "Fuse adjacent clean sentences into run-ons and add negatives");
  flag_opt(s, "corpus", a.corpus, "Clean corpus: one sentence per line (tokens<TAB>POS), blank line between paragraphs")
      ->required();
  flag_opt(s, "parses", a.parses, "Bracketed parse per corpus line ('_' for none)");
  auto* r = flag_opt(s, "runons", a.runons, "Number of run-on examples");
  auto* n = flag_opt(s, "negatives", a.negatives, "Number of single-sentence examples");
  auto* t = flag_opt(s, "total", a.total, "Total examples (with --fraction)");
  auto* f = flag_opt(s, "fraction", a.fraction, "Run-on share as p/q or decimal, e.g. 1/10");
  r->excludes(t)->excludes(f);
  n->excludes(t)->excludes(f);
  t->needs(f);
  f->needs(t);
  flag_opt(s, "downsample", a.downsample, "Afterwards keep only enough run-ons for this share, e.g. 560/56910");
  flag_opt(s, "out", a.out, "Labeled output (token<TAB>POS<TAB>label); standard output if omitted");
  flag_opt(s, "out-parses", a.out_parses, "Parse trees of the output sequences, one per line");
}

int do_synthesize(const Context& ctx, const SynthesizeArgs& a) {
  const auto corpus = load_corpus(a.corpus, a.parses);
  DatasetSpec spec;
  spec.seed = substream_seed(ctx.g.seed, "corpus");
  if (a.total > 0) {
    spec = DatasetSpec::from_fraction(a.total, Fraction::parse(a.fraction), spec.seed);
  } else {
    spec.runon_count = a.runons;
    spec.nonrunon_count = a.negatives;
  }
  if (spec.runon_count + spec.nonrunon_count == 0) throw InvalidArgument("nothing to synthesize");
  ctx.log->info("synthesizing {} run-ons and {} negatives", spec.runon_count, spec.nonrunon_count);
  CaseEvidence evidence(corpus);
  auto data = build_dataset(corpus, spec, &evidence);
  if (!a.downsample.empty()) {
    data = downsample_runons(data, Fraction::parse(a.downsample), substream_seed(ctx.g.seed, "downsample"));
    ctx.log->info("downsampled to {} sequences", data.size());
  }
  ctx.emit(a.out, labeled_text(data));
  if (a.out_parses) {
    std::ostringstream os;
    write_sequence_parses(os, data);
    ctx.emit(a.out_parses, os.str());
  }
  return kOk;
}

// --- train-lm --------------------------------------------------------------------

struct TrainLmArgs {
  std::string corpus;
  int order = 5;
  int min_count = 2;
  std::string smoothing = "kn";
  std::optional<std::string> out;
};

void add_train_lm(CLI::App& app, TrainLmArgs& a) {
  auto* s = app.add_subcommand("train-lm", "Train the n-gram language model used by the CRF features");
  flag_opt(s, "corpus", a.corpus, "Clean corpus (same format as synthesize --corpus)")->required();
  flag_opt(s, "order", a.order, "N-gram order")->capture_default_str();
  flag_opt(s, "min-count", a.min_count, "Rarer word types map to <unk>")->capture_default_str();
  flag_opt(s, "smoothing", a.smoothing, "kn (modified Kneser-Ney), wb (Witten-Bell) or mle")
      ->check(CLI::IsMember({"kn", "wb", "mle"}))
      ->capture_default_str();
  flag_opt(s, "out", a.out, "Model file; standard output if omitted");
}

int do_train_lm(const Context& ctx, const TrainLmArgs& a) {
  std::vector<AnnotatedSentence> sentences;
  for (auto& p : load_corpus(a.corpus, std::nullopt)) {
    for (auto& s : p) sentences.push_back(std::move(s));
  }
  LmConfig config;
  config.order = a.order;
  config.min_count = a.min_count;
  config.smoothing = parse_smoothing(a.smoothing);
  auto lm = NgramModel::train(sentences, config);
  ctx.log->info("trained {}-gram model on {} sentences, {} word types", a.order, sentences.size(), lm.vocab_size());
  std::ostringstream os;
  lm.save(os);
  ctx.emit(a.out, os.str());
  return kOk;
}

// --- featurize ---------------------------------------------------------------

struct FeaturizeArgs {
  std::string input;
  std::optional<std::string> parses;
  std::optional<std::string> lm;
  std::optional<std::string> out;
};

void add_featurize(CLI::App& app, FeaturizeArgs& a) {
  auto* s = app.add_subcommand("featurize", "Write one feature row per token for CRF training");
  flag_opt(s, "input", a.input, "Labeled sequences")->required();
  flag_opt(s, "parses", a.parses, "Parse trees, one per sequence ('_' for none)");
  flag_opt(s, "lm", a.lm, "Language model from train-lm; without it the LM columns are 'na'");
  flag_opt(s, "out", a.out, "Feature file; standard output if omitted");
}

int do_featurize(const Context& ctx, const FeaturizeArgs& a) {
  const auto data = load_labeled(a.input, a.parses);
  if (data.empty()) throw NoData("no sequences");
  const auto lm = load_lm(a.lm);
  if (!lm) ctx.log->warn("no language model given; LM feature columns are 'na'");
  std::vector<FeatureSequence> rows;
  rows.reserve(data.size());
  for (const auto& s : data) rows.push_back(featurize(s, lm ? &*lm : nullptr));
  std::ostringstream os;
  write_feature_file(os, rows);
  ctx.emit(a.out, os.str());
  return kOk;
}

// --- train-crf ---------------------------------------------------------------------

struct TrainCrfArgs {
  std::string features;
  std::optional<std::string> templates;
  CrfConfig config;
  std::string compared = "space";
  std::optional<std::string> out;
};

void add_train_crf(CLI::App& app, TrainCrfArgs& a) {
  auto* s = app.add_subcommand("train-crf", "Train the L1-regularized linear-chain CRF");
  flag_opt(s, "features", a.features, "Feature file from featurize")->required();
  flag_opt(s, "templates", a.templates, "Template file (name<TAB>offset:column,...); built-in set if omitted");
  flag_opt(s, "c", a.config.c, "Inverse L1 strength; the penalty is sum|w| / c")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  flag_opt(s, "cutoff", a.config.cutoff, "Drop features seen fewer times")->capture_default_str();
  flag_opt(s, "threshold", a.config.threshold,
           "Decision threshold tau, 0.70 by default: PERIOD when the compared marginal crosses it")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  flag_opt(s, "compared", a.compared, "space: PERIOD iff p(SPACE) < tau; period: PERIOD iff p(PERIOD) > tau")
      ->check(CLI::IsMember({"space", "period"}))
      ->capture_default_str();
  flag_opt(s, "max-iterations", a.config.max_iterations, "OWL-QN iteration limit")->capture_default_str();
  flag_opt(s, "tolerance", a.config.tolerance, "Relative objective change that stops training")
      ->capture_default_str();
  bool_flag(s, "allow-single-class", a.config.allow_single_class, "Train even if only one label occurs");
  flag_opt(s, "out", a.out, "Model file; standard output if omitted");
}

int do_train_crf(const Context& ctx, TrainCrfArgs a) {
  auto in = open_in(a.features);
  const auto data = read_feature_file(in, a.features);
  if (data.empty()) throw NoData("no sequences");
  TemplateSet templates = TemplateSet::defaults();
  if (a.templates) {
    auto tin = open_in(*a.templates);
    std::vector<FeatureTemplate> list;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(tin, line)) {
      ++lineno;
      const auto t = text::trim(line);
      if (t.empty() || t.front() == '#') continue;
      try {
        list.push_back(TemplateSet::parse(t));
      } catch (const Error& e) {
        throw FormatError(*a.templates, lineno, e.what());
      }
    }
    templates = TemplateSet(std::move(list));
  }
  a.config.compared = a.compared == "period" ? GapLabel::kPeriod : GapLabel::kSpace;
  a.config.workers = ctx.g.workers;
  auto model = CrfModel::train(data, templates, a.config);
  const auto& sum = model.summary();
  ctx.log->info("trained CRF: {} iterations, converged={}, {} features, {} nonzero weights", sum.iterations,
                sum.converged, sum.features, sum.nonzero_weights);
  std::ostringstream os;
  model.save(os);
  ctx.emit(a.out, os.str());
  return kOk;
}

// --- train-s2s -----------------------------------------------------------------------

struct TrainS2SArgs {
  std::string train;
  std::optional<std::string> valid;
  bool full_scale = false;
  S2SConfig config;
  std::optional<std::string> out;
};

void add_train_s2s(CLI::App& app, TrainS2SArgs& a) {
  auto* s = app.add_subcommand("train-s2s", "Train the attention encoder-decoder labeler");
  flag_opt(s, "train", a.train, "Labeled training sequences")->required();
  flag_opt(s, "valid", a.valid, "Labeled validation sequences (learning-rate decay and model selection)");
  bool_flag(s, "full-scale", a.full_scale,
            "Start from the full-scale settings (1028 hidden, 300-d embeddings, 100k words, dropout 0.5, "
            "batch 128, lr 1e-4); explicit flags still override");
  flag_opt(s, "hidden", a.config.hidden_size, "LSTM state size (full scale: 1028)")->capture_default_str();
  flag_opt(s, "embedding-size", a.config.embedding_size, "Word embedding size (full scale: 300)")->capture_default_str();
  flag_opt(s, "label-embedding-size", a.config.label_embedding_size, "Label embedding size")->capture_default_str();
  flag_opt(s, "attention-size", a.config.attention_size, "Attention layer size; 0 means --hidden")
      ->capture_default_str();
  flag_opt(s, "vocab-size", a.config.vocab_size, "Vocabulary size including <unk> (full scale: 100000)")
      ->capture_default_str();
  flag_opt(s, "min-count", a.config.min_count, "Rarer words map to <unk>")->capture_default_str();
  flag_opt(s, "max-input-length", a.config.max_input_length, "Longer inputs pass their tail through as SPACE")
      ->capture_default_str();
  flag_opt(s, "dropout", a.config.dropout, "Dropout rate (full scale: 0.5)")->capture_default_str();
  flag_opt(s, "batch-size", a.config.batch_size, "Mini-batch size (full scale: 128)")->capture_default_str();
  flag_opt(s, "learning-rate", a.config.learning_rate, "Adagrad learning rate (full scale: 1e-4)")->capture_default_str();
  flag_opt(s, "lr-decay", a.config.lr_decay, "Factor applied when validation loss stops improving (full scale: 0.5)")
      ->capture_default_str();
  flag_opt(s, "epochs", a.config.epochs, "Training epochs")->capture_default_str();
  flag_opt(s, "init-scale", a.config.init_scale, "Uniform initialization range")->capture_default_str();
  flag_opt(s, "clip-norm", a.config.clip_norm, "Global gradient-norm clip; 0 disables")->capture_default_str();
  flag_opt(s, "out", a.out, "Checkpoint file")->required();
}

int do_train_s2s(const Context& ctx, const TrainS2SArgs& a, const CLI::App& sub) {
  S2SConfig config = a.config;
  if (a.full_scale) {
    // Full-scale values for every option the user did not set.
    const S2SConfig p = S2SConfig::full_scale();
    auto keep = [&](const char* name) { return sub.count(std::string("--") + name) > 0; };
    if (!keep("hidden")) config.hidden_size = p.hidden_size;
    if (!keep("embedding-size")) config.embedding_size = p.embedding_size;
    if (!keep("label-embedding-size")) config.label_embedding_size = p.label_embedding_size;
    if (!keep("attention-size")) config.attention_size = p.attention_size;
    if (!keep("vocab-size")) config.vocab_size = p.vocab_size;
    if (!keep("min-count")) config.min_count = p.min_count;
    if (!keep("max-input-length")) config.max_input_length = p.max_input_length;
    if (!keep("dropout")) config.dropout = p.dropout;
    if (!keep("batch-size")) config.batch_size = p.batch_size;
    if (!keep("learning-rate")) config.learning_rate = p.learning_rate;
    if (!keep("lr-decay")) config.lr_decay = p.lr_decay;
    if (!keep("epochs")) config.epochs = p.epochs;
    if (!keep("init-scale")) config.init_scale = p.init_scale;
    if (!keep("clip-norm")) config.clip_norm = p.clip_norm;
  }
  config.seed = substream_seed(ctx.g.seed, "s2s");
  config.validate();
  const auto train = load_labeled(a.train, std::nullopt);
  if (train.empty()) throw NoData(a.train + ": no sequences");
  std::vector<LabeledSequence> valid;
  if (a.valid) valid = load_labeled(*a.valid, std::nullopt);
  S2STrainingHistory history;
  auto model = train_s2s(train, valid, config, &history, [&](int epoch, double tl, double vl) {
    ctx.log->info("epoch {}: train loss {:.5f}, valid loss {:.5f}", epoch + 1, tl, vl);
  });
  if (history.truncated > 0) {
    ctx.log->warn("{} tokens beyond max-input-length were not trained on", history.truncated);
  }
  ctx.log->info("best epoch {}", history.best_epoch + 1);
  std::ostringstream os(std::ios::binary);
  model.save(os);
  ctx.emit(a.out, os.str());
  return kOk;
}

// --- tag / correct ------------------------------------------------------------------

struct TagArgs {
  std::string model;
  std::optional<std::string> input;
  std::optional<std::string> text;
  std::optional<std::string> features;
  std::optional<std::string> parses;
  std::optional<std::string> lm;
  std::optional<double> threshold;
  std::optional<std::string> out;
};

void add_tag_like(CLI::App& app, TagArgs& a, const std::string& name, const std::string& help) {
  auto* s = app.add_subcommand(name, help);
  flag_opt(s, "model", a.model, "CRF model or seq2seq checkpoint (detected from the file)")->required();
  auto* i = flag_opt(s, "input", a.input, "Labeled sequences (labels are ignored)");
  auto* t = flag_opt(s, "text", a.text, "Plain corpus: one sentence per line (tokens<TAB>POS)");
  auto* f = flag_opt(s, "features", a.features, "Feature file (CRF only)");
  i->excludes(t)->excludes(f);
  t->excludes(f);
  flag_opt(s, "parses", a.parses, "Parse trees for --input or --text");
  flag_opt(s, "lm", a.lm, "Language model for the CRF feature columns");
  flag_opt(s, "threshold", a.threshold, "Override the CRF decision threshold")
      ->check(CLI::Range(0.0, 1.0));
  flag_opt(s, "out", a.out, "Output file; standard output if omitted");
}

bool is_s2s_file(const std::string& path) {
  auto in = open_in(path, true);
  char magic[8] = {};
  in.read(magic, sizeof magic);
  return in.gcount() == 8 && std::string(magic, 8) == "RUNONS2S";
}

struct Tagged {
  std::vector<LabeledSequence> sequences;  // with predicted labels
};

Tagged tag_sequences(const Context& ctx, const TagArgs& a) {
  const bool s2s = is_s2s_file(a.model);
  if (!a.input && !a.text && !a.features) throw InvalidArgument("one of --input, --text or --features is required");
  if (s2s && a.features) throw InvalidArgument("--features needs a CRF model");

  std::vector<LabeledSequence> data;
  std::vector<FeatureSequence> rows;
  if (a.input) {
    data = load_labeled(*a.input, a.parses);
  } else if (a.text) {
    for (auto& p : load_corpus(*a.text, a.parses)) {
      for (auto& s : p) data.push_back(label_negative(s));
    }
  } else {
    auto in = open_in(*a.features);
    rows = read_feature_file(in, *a.features);
    for (const auto& r : rows) {
      LabeledSequence seq;
      for (const auto& row : r.rows) seq.sentence.tokens.emplace_back(row[kColToken], row[kColPos]);
      seq.labels = r.labels;
      data.push_back(std::move(seq));
    }
  }
  if (data.empty()) throw NoData("no sequences");

  Tagged out;
  out.sequences = data;
  if (s2s) {
    auto in = open_in(a.model, true);
    const auto model = S2SModel::load(in, a.model);
    std::size_t truncated = 0;
    for (auto& seq : out.sequences) {
      auto res = model.label(seq.sentence);
      truncated += res.truncated;
      seq.labels = std::move(res.labels);
    }
    if (truncated > 0) ctx.log->warn("{} tokens beyond max-input-length passed through as SPACE", truncated);
    return out;
  }

  auto in = open_in(a.model);
  auto model = CrfModel::load(in, a.model);
  if (a.threshold) model.set_threshold(*a.threshold);
  if (rows.empty()) {
    const auto lm = load_lm(a.lm);
    if (!lm) ctx.log->warn("no language model given; LM feature columns are 'na'");
    for (const auto& seq : data) rows.push_back(featurize(seq.sentence, lm ? &*lm : nullptr));
  }
  for (std::size_t i = 0; i < rows.size(); ++i) out.sequences[i].labels = model.decode(rows[i]);
  return out;
}

int do_tag(const Context& ctx, const TagArgs& a) {
  const auto t = tag_sequences(ctx, a);
  std::size_t periods = 0;
  for (const auto& s : t.sequences) periods += s.period_count();
  ctx.log->info("tagged {} sequences, {} PERIOD gaps", t.sequences.size(), periods);
  ctx.emit(a.out, labeled_text(t.sequences));
  return kOk;
}

int do_correct(const Context& ctx, const TagArgs& a) {
  const auto t = tag_sequences(ctx, a);
  std::string text;
  for (const auto& s : t.sequences) text += fuse_output(s.sentence, s.labels) + "\n";
  ctx.emit(a.out, text);
  return kOk;
}

// --- evaluate -----------------------------------------------------------------------

struct EvaluateArgs {
  std::string gold;
  std::optional<std::string> pred;
  std::optional<std::string> pred_text;
  std::string random;
  bool expected = false;
  std::string system;
  std::string dataset;
  std::string format = "text";
  std::optional<std::string> out;
};

void add_evaluate(CLI::App& app, EvaluateArgs& a) {
  auto* s = app.add_subcommand("evaluate", "Score PERIOD insertions: precision, recall, F0.5");
  flag_opt(s, "gold", a.gold, "Gold labeled sequences")->required();
  auto* p = flag_opt(s, "pred", a.pred, "Predicted labeled sequences, aligned with --gold");
  auto* t = flag_opt(s, "pred-text", a.pred_text,
                     "External system output, one corrected sentence per line (space-separated tokens), "
                     "aligned to the gold tokens by longest common subsequence");
  auto* r = flag_opt(s, "random", a.random, "Score the random baseline at this rate, e.g. 1/10");
  p->excludes(t)->excludes(r);
  t->excludes(r);
  auto* e = bool_flag(s, "expected", a.expected, "With --random: closed-form expected counts instead of a sample");
  e->needs(r);
  flag_opt(s, "system", a.system, "System name for the report");
  flag_opt(s, "dataset", a.dataset, "Dataset name for the report");
  flag_opt(s, "format", a.format, "text, csv or json")
      ->check(CLI::IsMember({"text", "csv", "json"}))
      ->capture_default_str();
  flag_opt(s, "out", a.out, "Report file; standard output if omitted");
}

std::string render(const std::string& format, std::span<const EvalReport> reports) {
  if (format == "csv") return report_csv(reports);
  if (format == "json") return report_json(reports);
  return report_text(reports);
}

std::vector<std::vector<std::string>> read_token_lines(const std::string& path) {
  auto in = open_in(path);
  std::vector<std::vector<std::string>> out;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> toks;
    std::istringstream ls(line);
    for (std::string w; ls >> w;) toks.push_back(w);
    out.push_back(std::move(toks));
  }
  return out;
}

// Report name for an input path: its file name without directories.
std::string display_name(const std::string& path) { return std::filesystem::path(path).filename().string(); }

int do_evaluate(const Context& ctx, const EvaluateArgs& a) {
  const auto gold = load_labeled(a.gold, std::nullopt);
  if (gold.empty()) throw NoData(a.gold + ": no sequences");
  const auto g = labels_of(gold);
  const std::string dataset = a.dataset.empty() ? display_name(a.gold) : a.dataset;
  EvalReport report;
  if (a.pred) {
    const auto pred = load_labeled(*a.pred, std::nullopt);
    report = score(pred, gold, a.system.empty() ? display_name(*a.pred) : a.system, dataset);
  } else if (a.pred_text) {
    const auto lines = read_token_lines(*a.pred_text);
    if (lines.size() != gold.size()) {
      throw AlignmentError(*a.pred_text + ": " + std::to_string(lines.size()) + " lines for " +
                           std::to_string(gold.size()) + " gold sequences");
    }
    std::vector<Labels> pred;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      try {
        pred.push_back(align_external(gold[i].sentence.surfaces(), lines[i]));
      } catch (const AlignmentError& e) {
        throw AlignmentError(*a.pred_text + ":" + std::to_string(i + 1) + ": " + e.what());
      }
    }
    report = score(pred, g, a.system.empty() ? display_name(*a.pred_text) : a.system, dataset);
  } else if (!a.random.empty()) {
    const Fraction rate = Fraction::parse(a.random);
    if (a.expected) {
      const auto e = expected_random_score(g, rate);
      report.system = a.system.empty() ? "Random (expected)" : a.system;
      report.dataset = dataset;
      report.counts = {std::llround(e.tp), std::llround(e.fp), std::llround(e.fn)};
      report.m = e.m;
      ctx.log->info("random baseline: expected-value mode");
    } else {
      const std::uint64_t seed = substream_seed(ctx.g.seed, "random");
      report = score(random_baseline(g, rate, seed), g, a.system.empty() ? "Random" : a.system, dataset);
      ctx.log->info("random baseline: sampled mode, seed {}", ctx.g.seed);
    }
  } else {
    throw InvalidArgument("one of --pred, --pred-text or --random is required");
  }
  ctx.log->info("{} / {}: tp={} fp={} fn={} P={:.4f} R={:.4f} F0.5={:.4f}", report.system, report.dataset,
                report.counts.tp, report.counts.fp, report.counts.fn, report.m.precision, report.m.recall,
                report.m.f05);
  std::vector<EvalReport> rs = {report};
  ctx.emit(a.out, render(a.format, rs));
  return kOk;
}

// --- significance ---------------------------------------------------------------------

struct SignificanceArgs {
  std::string gold;
  std::string a;
  std::string b;
  std::size_t replicates = 10000;
  std::string format = "text";
  std::optional<std::string> out;
};

void add_significance(CLI::App& app, SignificanceArgs& a) {
  auto* s = app.add_subcommand("significance", "Paired bootstrap test between two systems");
  flag_opt(s, "gold", a.gold, "Gold labeled sequences")->required();
  flag_opt(s, "a", a.a, "Predictions of system A")->required();
  flag_opt(s, "b", a.b, "Predictions of system B")->required();
  flag_opt(s, "replicates", a.replicates, "Bootstrap replicates")->check(CLI::PositiveNumber)->capture_default_str();
  flag_opt(s, "format", a.format, "text or json")->check(CLI::IsMember({"text", "json"}))->capture_default_str();
  flag_opt(s, "out", a.out, "Report file; standard output if omitted");
}

int do_significance(const Context& ctx, const SignificanceArgs& a) {
  const auto gold = load_labeled(a.gold, std::nullopt);
  const auto pa = load_labeled(a.a, std::nullopt);
  const auto pb = load_labeled(a.b, std::nullopt);
  if (gold.empty()) throw NoData(a.gold + ": no sequences");
  // Token checks happen in score().
  const auto ra = score(pa, gold, display_name(a.a));
  const auto rb = score(pb, gold, display_name(a.b));
  const auto res = bootstrap_significance(labels_of(pa), labels_of(pb), labels_of(gold), a.replicates,
                                          substream_seed(ctx.g.seed, "bootstrap"), ctx.g.workers);
  static const char* kNames[3] = {"precision", "recall", "f05"};
  std::ostringstream os;
  if (a.format == "json") {
    nlohmann::ordered_json j;
    j["system_a"] = ra.system;
    j["system_b"] = rb.system;
    j["replicates"] = res.replicates;
    j["seed"] = ctx.g.seed;
    for (int k = 0; k < 3; ++k) {
      j[kNames[k]] = {{"a", k == 0 ? ra.m.precision : k == 1 ? ra.m.recall : ra.m.f05},
                      {"b", k == 0 ? rb.m.precision : k == 1 ? rb.m.recall : rb.m.f05},
                      {"delta", res.delta[k]},
                      {"p_value", res.p_value[k]}};
    }
    os << j.dump(2) << "\n";
  } else {
    os << "metric     A     B     delta   p\n";
    const std::array<double, 3> ma = {ra.m.precision, ra.m.recall, ra.m.f05};
    const std::array<double, 3> mb = {rb.m.precision, rb.m.recall, rb.m.f05};
    for (int k = 0; k < 3; ++k) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "%-9s  %s  %s  %+.4f  %.4f\n", kNames[k], format2(ma[k]).c_str(),
                    format2(mb[k]).c_str(), res.delta[k], res.p_value[k]);
      os << buf;
    }
    os << "replicates " << res.replicates << ", seed " << ctx.g.seed << "\n";
  }
  ctx.emit(a.out, os.str());
  return kOk;
}

// Resolved configuration of the global options and the chosen subcommand,
// without the options that must not affect artifacts.
std::string resolved_config(const CLI::App& app, const std::string& sub) {
  std::istringstream in(app.config_to_str(true, false));
  std::string out;
  for (std::string line; std::getline(in, line);) {
    if (line.starts_with("workers=") || line.starts_with("log-level=") || line.starts_with("config=")) continue;
    const auto eq = line.find('=');
    const auto dot = line.find('.');
    const bool global = dot == std::string::npos || dot > eq;
    if (global || line.starts_with(sub + ".")) out += line + "\n";
  }
  return out;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app("Detect and correct run-on sentences", "runon");
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "TOML or INI file with option values (precedence: flags, then this file, then RUNON_* environment variables, then defaults)")
      ->envname("RUNON_CONFIG");

  Globals g;
  flag_opt(&app, "seed", g.seed, "Master seed; stages draw from named sub-streams")->capture_default_str();
  flag_opt(&app, "workers", g.workers, "Worker threads; results do not depend on it")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  flag_opt(&app, "log-level", g.log_level, "trace, debug, info, warn, error or off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}))
      ->capture_default_str();

  SynthesizeArgs syn;
  TrainLmArgs lm;
  FeaturizeArgs feat;
  TrainCrfArgs crf;
  TrainS2SArgs s2s;
  TagArgs tag;
  TagArgs cor;
  EvaluateArgs ev;
  SignificanceArgs sig;
  add_synthesize(app, syn);
  add_train_lm(app, lm);
  add_featurize(app, feat);
  add_train_crf(app, crf);
  add_train_s2s(app, s2s);
  add_tag_like(app, tag, "tag", "Predict gap labels");
  add_tag_like(app, cor, "correct", "Insert the predicted periods and print the corrected text");
  add_evaluate(app, ev);
  add_significance(app, sig);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err, true);
  auto log = std::make_shared<spdlog::logger>("runon", sink);
  log->set_pattern("[%l] %v");
  log->set_level(spdlog::level::from_str(g.log_level));

  CLI::App* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  Context ctx{g, out, log, resolved_config(app, name)};
  log->debug("resolved configuration:\n{}", ctx.resolved);
  log->info("seed {}, workers {}", g.seed, g.workers);

  try {
    if (name == "synthesize") return do_synthesize(ctx, syn);
    if (name == "train-lm") return do_train_lm(ctx, lm);
    if (name == "featurize") return do_featurize(ctx, feat);
    if (name == "train-crf") return do_train_crf(ctx, crf);
    if (name == "train-s2s") return do_train_s2s(ctx, s2s, *sub);
    if (name == "tag") return do_tag(ctx, tag);
    if (name == "correct") return do_correct(ctx, cor);
    if (name == "evaluate") return do_evaluate(ctx, ev);
    if (name == "significance") return do_significance(ctx, sig);
  } catch (const InvalidArgument& e) {
    log->error("{}", e.what());
    return kUsage;
  } catch (const Error& e) {
    log->error("{}", e.what());
    return kDataError;
  } catch (const std::bad_alloc&) {
    log->error("out of memory");
    return kDataError;
  }
  return kUsage;
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace runon::cli
