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

#include "runon/crf.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <istream>
#include <limits>
#include <ostream>
#include <thread>

#include "runon/error.hpp"
#include "runon/owlqn.hpp"
#include "runon/text.hpp"

namespace runon {
namespace {

constexpr std::size_t L = kNumLabels;

double log_add(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

std::size_t idx(GapLabel l) { return static_cast<std::size_t>(l); }

// Dense scratch gradient that remembers which coordinates it touched.
struct SparseAccumulator {
  std::vector<double> value;
  std::vector<char> mark;
  std::vector<std::size_t> touched;
  double loss = 0.0;

  explicit SparseAccumulator(std::size_t n) : value(n, 0.0), mark(n, 0) {}

  void add(std::size_t i, double v) {
    if (!mark[i]) {
      mark[i] = 1;
      touched.push_back(i);
    }
    value[i] += v;
  }

  void flush_into(std::span<double> grad, double& total) {
    for (std::size_t i : touched) {
      grad[i] += value[i];
      value[i] = 0.0;
      mark[i] = 0;
    }
    touched.clear();
    total += loss;
    loss = 0.0;
  }
};

Lattice build_lattice(const EncodedSequence& seq, std::span<const double> w, std::size_t nf) {
  Lattice lat;
  lat.emission.resize(seq.features.size());
  for (std::size_t t = 0; t < seq.features.size(); ++t) {
    LabelScores s{};
    for (std::uint32_t f : seq.features[t]) {
      for (std::size_t y = 0; y < L; ++y) s[y] += w[L * f + y];
    }
    lat.emission[t] = s;
  }
  for (std::size_t a = 0; a < L; ++a) {
    for (std::size_t b = 0; b < L; ++b) lat.transition[a][b] = w[L * nf + L * a + b];
  }
  return lat;
}

void accumulate_sequence(const EncodedSequence& seq, std::span<const double> w, std::size_t nf,
                         SparseAccumulator& acc) {
  if (seq.features.empty()) return;
  Lattice lat = build_lattice(seq, w, nf);
  ForwardBackward fb = forward_backward(lat);
  acc.loss += fb.log_z - path_score(lat, seq.labels);
  for (std::size_t t = 0; t < seq.features.size(); ++t) {
    const std::size_t gold = idx(seq.labels[t]);
    for (std::uint32_t f : seq.features[t]) {
      for (std::size_t y = 0; y < L; ++y) {
        acc.add(L * f + y, fb.marginals[t][y] - (y == gold ? 1.0 : 0.0));
      }
    }
    if (t == 0) continue;
    const std::size_t prev = idx(seq.labels[t - 1]);
    for (std::size_t a = 0; a < L; ++a) {
      for (std::size_t b = 0; b < L; ++b) {
        double observed = (a == prev && b == gold) ? 1.0 : 0.0;
        acc.add(L * nf + L * a + b, fb.pairwise[t - 1][a][b] - observed);
      }
    }
  }
}

}  // namespace

ForwardBackward forward_backward(const Lattice& lat) {
  const std::size_t n = lat.size();
  ForwardBackward out;
  if (n == 0) return out;
  std::vector<LabelScores> alpha(n), beta(n);
  alpha[0] = lat.emission[0];
  for (std::size_t t = 1; t < n; ++t) {
    for (std::size_t b = 0; b < L; ++b) {
      double s = -std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < L; ++a) s = log_add(s, alpha[t - 1][a] + lat.transition[a][b]);
      alpha[t][b] = s + lat.emission[t][b];
    }
  }
  beta[n - 1].fill(0.0);
  for (std::size_t t = n - 1; t-- > 0;) {
    for (std::size_t a = 0; a < L; ++a) {
      double s = -std::numeric_limits<double>::infinity();
      for (std::size_t b = 0; b < L; ++b) {
        s = log_add(s, lat.transition[a][b] + lat.emission[t + 1][b] + beta[t + 1][b]);
      }
      beta[t][a] = s;
    }
  }
  double z = -std::numeric_limits<double>::infinity();
  for (std::size_t y = 0; y < L; ++y) z = log_add(z, alpha[n - 1][y]);
  out.log_z = z;
  out.marginals.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t y = 0; y < L; ++y) out.marginals[t][y] = std::exp(alpha[t][y] + beta[t][y] - z);
  }
  out.pairwise.resize(n - 1);
  for (std::size_t t = 1; t < n; ++t) {
    for (std::size_t a = 0; a < L; ++a) {
      for (std::size_t b = 0; b < L; ++b) {
        out.pairwise[t - 1][a][b] = std::exp(alpha[t - 1][a] + lat.transition[a][b] +
                                             lat.emission[t][b] + beta[t][b] - z);
      }
    }
  }
  return out;
}

double path_score(const Lattice& lat, std::span<const GapLabel> labels) {
  if (labels.size() != lat.size()) throw LengthMismatch("labeling does not match the lattice");
  double s = 0.0;
  for (std::size_t t = 0; t < labels.size(); ++t) {
    s += lat.emission[t][idx(labels[t])];
    if (t > 0) s += lat.transition[idx(labels[t - 1])][idx(labels[t])];
  }
  return s;
}

std::vector<GapLabel> viterbi(const Lattice& lat) {
  const std::size_t n = lat.size();
  std::vector<GapLabel> out(n, GapLabel::kSpace);
  if (n == 0) return out;
  // best[t][y]: best score of labels t..n-1 given y_t = y. Choosing the
  // smallest maximizing label left to right then yields the lexicographically
  // first optimal path.
  std::vector<LabelScores> best(n);
  best[n - 1] = lat.emission[n - 1];
  for (std::size_t t = n - 1; t-- > 0;) {
    for (std::size_t a = 0; a < L; ++a) {
      double m = -std::numeric_limits<double>::infinity();
      for (std::size_t b = 0; b < L; ++b) m = std::max(m, lat.transition[a][b] + best[t + 1][b]);
      best[t][a] = lat.emission[t][a] + m;
    }
  }
  auto pick = [](const LabelScores& s) {
    std::size_t arg = 0;
    for (std::size_t y = 1; y < L; ++y) {
      if (s[y] > s[arg]) arg = y;
    }
    return arg;
  };
  std::size_t y = pick(best[0]);
  out[0] = static_cast<GapLabel>(y);
  for (std::size_t t = 1; t < n; ++t) {
    LabelScores s;
    for (std::size_t b = 0; b < L; ++b) s[b] = lat.transition[y][b] + best[t][b];
    y = pick(s);
    out[t] = static_cast<GapLabel>(y);
  }
  return out;
}

std::vector<GapLabel> threshold_decode(std::span<const LabelScores> marginals, double threshold,
                                       GapLabel compared) {
  std::vector<GapLabel> out;
  out.reserve(marginals.size());
  for (const auto& m : marginals) {
    bool period = compared == GapLabel::kSpace ? m[idx(GapLabel::kSpace)] < threshold
                                               : m[idx(GapLabel::kPeriod)] > threshold;
    out.push_back(period ? GapLabel::kPeriod : GapLabel::kSpace);
  }
  return out;
}

CrfObjective::CrfObjective(std::span<const EncodedSequence> data, std::size_t num_features,
                           int workers)
    : data_(data), num_features_(num_features), workers_(std::max(1, workers)) {}

double CrfObjective::operator()(std::span<const double> w, std::span<double> grad) const {
  std::fill(grad.begin(), grad.end(), 0.0);
  const std::size_t chunks = (data_.size() + kChunk - 1) / kChunk;
  const std::size_t width = std::min<std::size_t>(static_cast<std::size_t>(workers_), std::max<std::size_t>(chunks, 1));
  std::vector<SparseAccumulator> acc(width, SparseAccumulator(dimension()));
  double total = 0.0;
  auto run_chunk = [&](std::size_t chunk, SparseAccumulator& a) {
    const std::size_t end = std::min(data_.size(), (chunk + 1) * kChunk);
    for (std::size_t i = chunk * kChunk; i < end; ++i) accumulate_sequence(data_[i], w, num_features_, a);
  };
  // Chunks are processed in waves of `width`; results merge in chunk order.
  for (std::size_t first = 0; first < chunks; first += width) {
    const std::size_t count = std::min(width, chunks - first);
    if (count == 1) {
      run_chunk(first, acc[0]);
    } else {
      std::vector<std::thread> pool;
      for (std::size_t k = 0; k < count; ++k) pool.emplace_back(run_chunk, first + k, std::ref(acc[k]));
      for (auto& th : pool) th.join();
    }
    for (std::size_t k = 0; k < count; ++k) acc[k].flush_into(grad, total);
  }
  return total;
}

CrfModel CrfModel::train(std::span<const FeatureSequence> data, const TemplateSet& templates,
                         const CrfConfig& config) {
  if (config.c <= 0) throw InvalidArgument("regularization constant must be positive");
  std::size_t rows = 0;
  std::array<std::size_t, L> label_counts{};
  for (const auto& seq : data) {
    if (seq.rows.size() != seq.labels.size()) throw LengthMismatch("feature rows and labels differ in length");
    rows += seq.rows.size();
    for (GapLabel l : seq.labels) ++label_counts[idx(l)];
  }
  if (rows == 0) throw NoData("no training rows");
  if (!config.allow_single_class && (label_counts[0] == 0 || label_counts[1] == 0)) {
    throw DegenerateLabels("training data contains a single label class");
  }

  CrfModel m;
  m.config_ = config;
  m.templates_ = templates;

  // Pass 1: frequencies, in first-seen order.
  std::unordered_map<std::string, std::uint32_t> seen;
  std::vector<std::string> order;
  std::vector<std::int64_t> freq;
  for (const auto& seq : data) {
    for (std::size_t t = 0; t < seq.rows.size(); ++t) {
      for (auto& f : templates.expand(seq.rows, t)) {
        auto [it, inserted] = seen.try_emplace(f, static_cast<std::uint32_t>(order.size()));
        if (inserted) {
          order.push_back(f);
          freq.push_back(0);
        }
        ++freq[it->second];
      }
    }
  }
  seen.clear();
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (freq[i] >= config.cutoff) {
      m.index_.emplace(order[i], static_cast<std::uint32_t>(m.names_.size()));
      m.names_.push_back(std::move(order[i]));
    }
  }
  order.clear();

  // Pass 2: encode.
  std::vector<EncodedSequence> encoded;
  encoded.reserve(data.size());
  for (const auto& seq : data) {
    EncodedSequence e;
    e.labels = seq.labels;
    for (std::size_t t = 0; t < seq.rows.size(); ++t) e.features.push_back(m.known_features(seq.rows, t));
    encoded.push_back(std::move(e));
  }

  CrfObjective objective(encoded, m.names_.size(), config.workers);
  m.weights_.assign(objective.dimension(), 0.0);
  OwlqnOptions opt;
  opt.l1 = 1.0 / config.c;
  opt.max_iterations = config.max_iterations;
  opt.tolerance = config.tolerance;
  auto res = owlqn_minimize([&](std::span<const double> w, std::span<double> g) { return objective(w, g); },
                            m.weights_, opt);

  m.summary_.iterations = res.iterations;
  m.summary_.converged = res.converged;
  m.summary_.objective = std::move(res.objective);
  m.summary_.features = m.names_.size();

  // Drop features whose weights all vanished.
  const std::size_t nf = m.names_.size();
  std::vector<std::string> names;
  std::vector<double> weights;
  for (std::size_t f = 0; f < nf; ++f) {
    if (m.weights_[L * f] == 0.0 && m.weights_[L * f + 1] == 0.0) continue;
    names.push_back(std::move(m.names_[f]));
    weights.push_back(m.weights_[L * f]);
    weights.push_back(m.weights_[L * f + 1]);
  }
  weights.insert(weights.end(), m.weights_.begin() + static_cast<std::ptrdiff_t>(L * nf), m.weights_.end());
  m.names_ = std::move(names);
  m.weights_ = std::move(weights);
  m.index_.clear();
  for (std::size_t f = 0; f < m.names_.size(); ++f) m.index_.emplace(m.names_[f], static_cast<std::uint32_t>(f));
  m.summary_.nonzero_weights = m.nonzero_weights();
  return m;
}

CrfModel CrfModel::from_weights(const TemplateSet& templates, std::vector<std::string> features,
                                std::vector<double> weights, const CrfConfig& config) {
  if (weights.size() != L * features.size() + L * L) throw LengthMismatch("weight vector has the wrong size");
  CrfModel m;
  m.config_ = config;
  m.templates_ = templates;
  m.names_ = std::move(features);
  m.weights_ = std::move(weights);
  for (std::size_t f = 0; f < m.names_.size(); ++f) {
    if (!m.index_.emplace(m.names_[f], static_cast<std::uint32_t>(f)).second) {
      throw InvalidArgument("duplicate feature '" + m.names_[f] + "'");
    }
  }
  m.summary_.features = m.names_.size();
  m.summary_.nonzero_weights = m.nonzero_weights();
  return m;
}

std::vector<std::uint32_t> CrfModel::known_features(std::span<const FeatureRow> rows,
                                                    std::size_t row) const {
  std::vector<std::uint32_t> ids;
  for (const auto& f : templates_.expand(rows, row)) {
    auto it = index_.find(f);
    if (it != index_.end()) ids.push_back(it->second);
  }
  return ids;
}

double CrfModel::weight(const std::string& name, GapLabel label) const {
  auto it = index_.find(name);
  return it == index_.end() ? 0.0 : weights_[L * it->second + idx(label)];
}

double CrfModel::transition(GapLabel prev, GapLabel cur) const {
  return weights_[L * names_.size() + L * idx(prev) + idx(cur)];
}

std::size_t CrfModel::nonzero_weights() const {
  return static_cast<std::size_t>(std::count_if(weights_.begin(), weights_.end(), [](double v) { return v != 0.0; }));
}

Lattice CrfModel::lattice(const FeatureSequence& seq) const {
  if (weights_.empty()) throw InvalidArgument("model is not trained");
  EncodedSequence e;
  for (std::size_t t = 0; t < seq.rows.size(); ++t) e.features.push_back(known_features(seq.rows, t));
  return build_lattice(e, weights_, names_.size());
}

std::vector<LabelScores> CrfModel::marginals(const FeatureSequence& seq) const {
  return forward_backward(lattice(seq)).marginals;
}

std::vector<GapLabel> CrfModel::decode(const FeatureSequence& seq) const {
  auto out = threshold_decode(marginals(seq), config_.threshold, config_.compared);
  if (!out.empty()) out.back() = GapLabel::kSpace;
  return out;
}

std::vector<GapLabel> CrfModel::viterbi(const FeatureSequence& seq) const {
  return runon::viterbi(lattice(seq));
}

namespace {
constexpr const char* kMagic = "runon-crf";
constexpr int kVersion = 1;
}  // namespace

void CrfModel::save(std::ostream& out) const {
  out << kMagic << ' ' << kVersion << '\n';
  out << "c " << text::hexfloat(config_.c) << '\n';
  out << "cutoff " << config_.cutoff << '\n';
  out << "threshold " << text::hexfloat(config_.threshold) << '\n';
  out << "compared " << (config_.compared == GapLabel::kPeriod ? "PERIOD" : "SPACE") << '\n';
  out << "templates " << templates_.size() << '\n';
  for (const auto& t : templates_.templates()) out << templates_.serialize(t) << '\n';
  out << "features " << names_.size() << '\n';
  for (std::size_t f = 0; f < names_.size(); ++f) {
    out << names_[f] << '\t' << text::hexfloat(weights_[L * f]) << '\t'
        << text::hexfloat(weights_[L * f + 1]) << '\n';
  }
  out << "transitions";
  for (std::size_t k = 0; k < L * L; ++k) out << ' ' << text::hexfloat(weights_[L * names_.size() + k]);
  out << '\n';
}

CrfModel CrfModel::load(std::istream& in, const std::string& name) {
  std::size_t lineno = 0;
  std::string line;
  auto next = [&]() -> std::string& {
    if (!std::getline(in, line)) throw FormatError(name, lineno + 1, "unexpected end of model file");
    ++lineno;
    return line;
  };
  auto keyed = [&](std::string_view key) {
    auto f = text::split(next(), ' ');
    if (f.size() < 2 || f[0] != key) throw FormatError(name, lineno, "expected '" + std::string(key) + "'");
    return f;
  };
  auto to_size = [&](const std::string& s) {
    try {
      std::size_t pos = 0;
      long long v = std::stoll(s, &pos);
      if (pos != s.size() || v < 0) throw std::invalid_argument(s);
      return static_cast<std::size_t>(v);
    } catch (const std::logic_error&) {
      throw FormatError(name, lineno, "bad count '" + s + "'");
    }
  };
  auto to_double = [&](const std::string& s) {
    try {
      return text::parse_double(s);
    } catch (const InvalidArgument& e) {
      throw FormatError(name, lineno, e.what());
    }
  };

  CrfModel m;
  auto head = keyed(kMagic);
  if (head[1] != std::to_string(kVersion)) throw FormatError(name, lineno, "unsupported model version " + head[1]);
  m.config_.c = to_double(keyed("c")[1]);
  m.config_.cutoff = static_cast<int>(to_size(keyed("cutoff")[1]));
  m.config_.threshold = to_double(keyed("threshold")[1]);
  auto compared = parse_label(keyed("compared")[1]);
  if (!compared) throw FormatError(name, lineno, "bad compared label");
  m.config_.compared = *compared;
  std::size_t nt = to_size(keyed("templates")[1]);
  std::vector<FeatureTemplate> templates;
  for (std::size_t k = 0; k < nt; ++k) {
    try {
      templates.push_back(TemplateSet::parse(next()));
    } catch (const FormatError& e) {
      throw FormatError(name, lineno, e.what());
    }
  }
  m.templates_ = TemplateSet(std::move(templates));
  std::size_t nf = to_size(keyed("features")[1]);
  m.weights_.reserve(L * nf + L * L);
  for (std::size_t f = 0; f < nf; ++f) {
    auto& l = next();
    auto t2 = l.rfind('\t');
    auto t1 = t2 == std::string::npos || t2 == 0 ? std::string::npos : l.rfind('\t', t2 - 1);
    if (t1 == std::string::npos) throw FormatError(name, lineno, "expected 'feature<TAB>w<TAB>w'");
    std::string fname = l.substr(0, t1);
    m.weights_.push_back(to_double(l.substr(t1 + 1, t2 - t1 - 1)));
    m.weights_.push_back(to_double(l.substr(t2 + 1)));
    if (!m.index_.emplace(fname, static_cast<std::uint32_t>(m.names_.size())).second) {
      throw FormatError(name, lineno, "duplicate feature '" + fname + "'");
    }
    m.names_.push_back(std::move(fname));
  }
  auto tr = keyed("transitions");
  if (tr.size() != 1 + L * L) throw FormatError(name, lineno, "expected four transition weights");
  for (std::size_t k = 0; k < L * L; ++k) m.weights_.push_back(to_double(tr[1 + k]));
  m.summary_.features = nf;
  m.summary_.nonzero_weights = m.nonzero_weights();
  return m;
}

}  // namespace runon
