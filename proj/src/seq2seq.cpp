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

#include "runon/seq2seq.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <map>
#include <ostream>

#include "runon/error.hpp"
#include "runon/text.hpp"

namespace runon {

// ---------------------------------------------------------------- config

void S2SConfig::validate() const {
  auto positive = [](int v, const char* what) {
    if (v < 1) throw InvalidArgument(std::string(what) + " must be at least 1");
  };
  positive(hidden_size, "hidden size");
  positive(embedding_size, "embedding size");
  positive(label_embedding_size, "label embedding size");
  positive(vocab_size, "vocabulary size");
  positive(min_count, "min count");
  positive(max_input_length, "max input length");
  positive(batch_size, "batch size");
  if (attention_size < 0) throw InvalidArgument("attention size must be non-negative");
  if (epochs < 0) throw InvalidArgument("epochs must be non-negative");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw InvalidArgument("dropout must be in [0, 1)");
  if (!(learning_rate >= 0.0)) throw InvalidArgument("learning rate must be non-negative");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw InvalidArgument("lr decay must be in (0, 1]");
}

S2SConfig S2SConfig::full_scale() {
  S2SConfig c;
  c.hidden_size = 1028;
  c.embedding_size = 300;
  c.vocab_size = 100000;
  c.max_input_length = 100;
  c.dropout = 0.5;
  c.batch_size = 128;
  c.learning_rate = 1e-4;
  c.lr_decay = 0.5;
  return c;
}

// ----------------------------------------------------------------- vocab

S2SVocab::S2SVocab() : words_{"<unk>"} { index_.emplace("<unk>", kUnk); }

S2SVocab S2SVocab::build(std::span<const LabeledSequence> data, int size, int min_count) {
  std::map<std::string, std::int64_t> counts;
  for (const auto& seq : data) {
    for (const auto& t : seq.sentence.tokens) ++counts[t.surface()];
  }
  std::vector<std::pair<std::string, std::int64_t>> sorted(counts.begin(), counts.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> words;
  for (auto& [w, c] : sorted) {
    if (c < min_count || static_cast<int>(words.size()) + 1 >= size) break;
    if (w == "<unk>") continue;
    words.push_back(w);
  }
  return from_words(std::move(words));
}

S2SVocab S2SVocab::from_words(std::vector<std::string> words) {
  S2SVocab v;
  for (auto& w : words) {
    if (w == "<unk>") continue;
    if (v.index_.emplace(w, static_cast<int>(v.words_.size())).second) v.words_.push_back(std::move(w));
  }
  return v;
}

int S2SVocab::id(const std::string& word) const {
  auto it = index_.find(word);
  return it == index_.end() ? kUnk : it->second;
}

std::vector<int> S2SVocab::encode(const AnnotatedSentence& s) const {
  std::vector<int> ids;
  ids.reserve(s.size());
  for (const auto& t : s.tokens) ids.push_back(id(t.surface()));
  return ids;
}

// --------------------------------------------------------------- network

namespace {

template <class V>
V sigmoid(const V& z) {
  using S = typename V::Scalar;
  return (S(1) / (S(1) + (-z.array()).exp())).matrix();
}

template <class S>
struct LstmStep {
  using Vec = typename S2SNetwork<S>::Vec;
  Vec xh, i, f, g, o, c_prev, c, tc, h;
};

template <class S>
void lstm_forward(const typename S2SNetwork<S>::Mat& W, const typename S2SNetwork<S>::Mat& b,
                  const typename S2SNetwork<S>::Vec& x, const typename S2SNetwork<S>::Vec& h_prev,
                  const typename S2SNetwork<S>::Vec& c_prev, LstmStep<S>& st) {
  using Vec = typename S2SNetwork<S>::Vec;
  const Eigen::Index h = h_prev.size();
  st.xh.resize(x.size() + h);
  st.xh << x, h_prev;
  Vec z = W * st.xh + b.col(0);
  st.i = sigmoid<Vec>(z.segment(0, h));
  st.f = sigmoid<Vec>(z.segment(h, h));
  st.g = z.segment(2 * h, h).array().tanh().matrix();
  st.o = sigmoid<Vec>(z.segment(3 * h, h));
  st.c_prev = c_prev;
  st.c = (st.f.array() * c_prev.array() + st.i.array() * st.g.array()).matrix();
  st.tc = st.c.array().tanh().matrix();
  st.h = (st.o.array() * st.tc.array()).matrix();
}

// dh: gradient into h. dc: in, gradient into c from the future; out,
// gradient into c_prev. Returns the gradient of xh.
template <class S>
typename S2SNetwork<S>::Vec lstm_backward(const typename S2SNetwork<S>::Mat& W,
                                          typename S2SNetwork<S>::Mat& dW,
                                          typename S2SNetwork<S>::Mat& db, const LstmStep<S>& st,
                                          const typename S2SNetwork<S>::Vec& dh,
                                          typename S2SNetwork<S>::Vec& dc) {
  using Vec = typename S2SNetwork<S>::Vec;
  const Eigen::Index h = dh.size();
  const auto one = S(1);
  Vec dct = dc + (dh.array() * st.o.array() * (one - st.tc.array().square())).matrix();
  Vec dz(4 * h);
  dz.segment(0, h) = (dct.array() * st.g.array() * st.i.array() * (one - st.i.array())).matrix();
  dz.segment(h, h) = (dct.array() * st.c_prev.array() * st.f.array() * (one - st.f.array())).matrix();
  dz.segment(2 * h, h) = (dct.array() * st.i.array() * (one - st.g.array().square())).matrix();
  dz.segment(3 * h, h) = (dh.array() * st.tc.array() * st.o.array() * (one - st.o.array())).matrix();
  dc = (dct.array() * st.f.array()).matrix();
  dW.noalias() += dz * st.xh.transpose();
  db.col(0) += dz;
  return W.transpose() * dz;
}

template <class Vec>
Vec dropout_mask(Eigen::Index n, double rate, Rng* rng) {
  using S = typename Vec::Scalar;
  Vec m = Vec::Ones(n);
  if (rng == nullptr || rate <= 0.0) return m;
  const S keep = S(1.0 / (1.0 - rate));
  for (Eigen::Index k = 0; k < n; ++k) m[k] = rng->bernoulli(rate) ? S(0) : keep;
  return m;
}

}  // namespace

template <class S>
const char* S2SNetwork<S>::param_name(std::size_t p) {
  static const char* kNames[] = {"embedding", "enc_fwd_W", "enc_fwd_b", "enc_bwd_W", "enc_bwd_b",
                                 "init_W",    "init_b",    "label_embedding", "dec_W", "dec_b",
                                 "att_W",     "att_U",     "att_b",     "att_v",     "out_W",
                                 "out_b"};
  return kNames[p];
}

template <class S>
S2SNetwork<S>::S2SNetwork(const S2SConfig& config, std::size_t vocab) : config_(config) {
  config.validate();
  const Eigen::Index d = config.embedding_size, h = config.hidden_size,
                     e = config.label_embedding_size, a = config.attention(),
                     v = static_cast<Eigen::Index>(vocab);
  params_.resize(kNumParams);
  params_[kEmbedding] = Mat::Zero(d, v);
  params_[kEncFwdW] = Mat::Zero(4 * h, d + h);
  params_[kEncFwdB] = Mat::Zero(4 * h, 1);
  params_[kEncBwdW] = Mat::Zero(4 * h, d + h);
  params_[kEncBwdB] = Mat::Zero(4 * h, 1);
  params_[kInitW] = Mat::Zero(h, 2 * h);
  params_[kInitB] = Mat::Zero(h, 1);
  params_[kLabelEmbedding] = Mat::Zero(e, 2);
  params_[kDecW] = Mat::Zero(4 * h, e + 2 * h + h);
  params_[kDecB] = Mat::Zero(4 * h, 1);
  params_[kAttW] = Mat::Zero(a, h);
  params_[kAttU] = Mat::Zero(a, 2 * h);
  params_[kAttB] = Mat::Zero(a, 1);
  params_[kAttV] = Mat::Zero(a, 1);
  params_[kOutW] = Mat::Zero(2, 5 * h);
  params_[kOutB] = Mat::Zero(2, 1);
}

template <class S>
void S2SNetwork<S>::randomize(Rng& rng, double scale) {
  for (auto& m : params_) {
    for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = S(rng.uniform(-scale, scale));
  }
  const Eigen::Index h = config_.hidden_size;
  // Forget-gate bias of one.
  for (std::size_t p : {kEncFwdB, kEncBwdB, kDecB}) params_[p].block(h, 0, h, 1).setOnes();
}

template <class S>
template <class T>
S2SNetwork<T> S2SNetwork<S>::cast() const {
  S2SNetwork<T> out;
  out.config_ = config_;
  for (const auto& m : params_) out.params_.push_back(m.template cast<T>());
  return out;
}

template <class S>
std::vector<typename S2SNetwork<S>::Mat> S2SNetwork<S>::zero_like() const {
  std::vector<Mat> out;
  for (const auto& m : params_) out.push_back(Mat::Zero(m.rows(), m.cols()));
  return out;
}

template <class S>
typename S2SNetwork<S>::Mat S2SNetwork<S>::Encoding::states() const {
  Mat H(fwd.rows() + bwd.rows(), fwd.cols());
  H << fwd, bwd;
  return H;
}

namespace {

// Everything the backward pass needs from one forward pass.
template <class S>
struct Trace {
  using Mat = typename S2SNetwork<S>::Mat;
  using Vec = typename S2SNetwork<S>::Vec;
  struct Step {
    Vec sp, cp;     // previous decoder state and cell
    Mat tanh_pre;   // a x N
    Vec alpha;      // N
    Vec ctx;        // 2h
    Vec yprev;      // e
    LstmStep<S> cell;
    Vec q, q_mask;  // 5h
    Vec p;          // 2
  };
  std::vector<Vec> x, x_mask;
  std::vector<LstmStep<S>> fwd, bwd;
  Mat H, UH;
  Vec init_in, s0;
  std::vector<Step> steps;
  std::vector<int> fed;  // label fed at each step (-1 at step 0)
};

template <class S>
void run_forward(const S2SNetwork<S>& net, std::span<const int> ids, std::span<const GapLabel> gold,
                 Rng* rng, Trace<S>& tr) {
  using Vec = typename S2SNetwork<S>::Vec;
  using N = S2SNetwork<S>;
  const auto& P = net.params();
  const auto& cfg = net.config();
  const Eigen::Index n = static_cast<Eigen::Index>(ids.size());
  const Eigen::Index h = cfg.hidden_size;
  if (n == 0) throw EmptyInput("empty input sequence");
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= net.vocab()) throw InvalidArgument("token id out of range");
  }

  tr.x.resize(static_cast<std::size_t>(n));
  tr.x_mask.resize(static_cast<std::size_t>(n));
  for (Eigen::Index t = 0; t < n; ++t) {
    auto& m = tr.x_mask[static_cast<std::size_t>(t)];
    m = dropout_mask<Vec>(cfg.embedding_size, cfg.dropout, rng);
    tr.x[static_cast<std::size_t>(t)] = (P[N::kEmbedding].col(ids[static_cast<std::size_t>(t)]).array() * m.array()).matrix();
  }
  tr.fwd.resize(static_cast<std::size_t>(n));
  tr.bwd.resize(static_cast<std::size_t>(n));
  Vec zero = Vec::Zero(h);
  for (Eigen::Index t = 0; t < n; ++t) {
    const auto u = static_cast<std::size_t>(t);
    const Vec& hp = t ? tr.fwd[u - 1].h : zero;
    const Vec& cp = t ? tr.fwd[u - 1].c : zero;
    lstm_forward<S>(P[N::kEncFwdW], P[N::kEncFwdB], tr.x[u], hp, cp, tr.fwd[u]);
  }
  for (Eigen::Index t = n - 1; t >= 0; --t) {
    const auto u = static_cast<std::size_t>(t);
    const Vec& hp = t + 1 < n ? tr.bwd[u + 1].h : zero;
    const Vec& cp = t + 1 < n ? tr.bwd[u + 1].c : zero;
    lstm_forward<S>(P[N::kEncBwdW], P[N::kEncBwdB], tr.x[u], hp, cp, tr.bwd[u]);
  }
  tr.H.resize(2 * h, n);
  for (Eigen::Index t = 0; t < n; ++t) {
    tr.H.col(t).head(h) = tr.fwd[static_cast<std::size_t>(t)].h;
    tr.H.col(t).tail(h) = tr.bwd[static_cast<std::size_t>(t)].h;
  }
  tr.UH = P[N::kAttU] * tr.H;
  tr.init_in.resize(2 * h);
  tr.init_in << tr.fwd.back().h, tr.bwd.front().h;
  tr.s0 = (P[N::kInitW] * tr.init_in + P[N::kInitB].col(0)).array().tanh().matrix();

  tr.steps.resize(static_cast<std::size_t>(n));
  tr.fed.assign(static_cast<std::size_t>(n), -1);
  Vec s = tr.s0, c = Vec::Zero(h);
  int prev = -1;
  for (Eigen::Index t = 0; t < n; ++t) {
    auto& st = tr.steps[static_cast<std::size_t>(t)];
    st.sp = s;
    st.cp = c;
    Vec ws = P[N::kAttW] * s + P[N::kAttB].col(0);
    st.tanh_pre = (tr.UH.colwise() + ws).array().tanh().matrix();
    Vec e = st.tanh_pre.transpose() * P[N::kAttV].col(0);
    const S mx = e.maxCoeff();
    st.alpha = (e.array() - mx).exp().matrix();
    st.alpha /= st.alpha.sum();
    st.ctx = tr.H * st.alpha;
    st.yprev = prev < 0 ? Vec::Zero(cfg.label_embedding_size) : Vec(P[N::kLabelEmbedding].col(prev));
    tr.fed[static_cast<std::size_t>(t)] = prev;
    Vec z(st.yprev.size() + st.ctx.size());
    z << st.yprev, st.ctx;
    lstm_forward<S>(P[N::kDecW], P[N::kDecB], z, s, c, st.cell);
    s = st.cell.h;
    c = st.cell.c;
    st.q_mask = dropout_mask<Vec>(5 * h, cfg.dropout, rng);
    st.q.resize(5 * h);
    st.q << s, st.ctx, tr.H.col(t);
    st.q = (st.q.array() * st.q_mask.array()).matrix();
    Vec logits = P[N::kOutW] * st.q + P[N::kOutB].col(0);
    const S lm = logits.maxCoeff();
    st.p.resize(2);
    for (Eigen::Index k = 0; k < 2; ++k) st.p[k] = std::exp(logits[k] - lm);
    st.p /= st.p.sum();
    if (!gold.empty()) {
      prev = static_cast<int>(gold[static_cast<std::size_t>(t)]);
    } else {
      prev = st.p[1] > st.p[0] ? 1 : 0;
    }
  }
}

}  // namespace

template <class S>
typename S2SNetwork<S>::Encoding S2SNetwork<S>::encode(std::span<const int> ids) const {
  if (ids.empty()) throw EmptyInput("empty input sequence");
  Trace<S> tr;
  std::vector<GapLabel> dummy(ids.size(), GapLabel::kSpace);
  run_forward<S>(*this, ids, dummy, nullptr, tr);
  Encoding out;
  const Eigen::Index h = config_.hidden_size;
  out.fwd = tr.H.topRows(h);
  out.bwd = tr.H.bottomRows(h);
  return out;
}

template <class S>
LabelOutput S2SNetwork<S>::decode(std::span<const int> ids) const {
  Trace<S> tr;
  run_forward<S>(*this, ids, {}, nullptr, tr);
  LabelOutput out;
  for (const auto& st : tr.steps) {
    out.probs.push_back({static_cast<double>(st.p[0]), static_cast<double>(st.p[1])});
    out.labels.push_back(st.p[1] > st.p[0] ? GapLabel::kPeriod : GapLabel::kSpace);
    std::vector<double> row(static_cast<std::size_t>(st.alpha.size()));
    for (Eigen::Index k = 0; k < st.alpha.size(); ++k) row[static_cast<std::size_t>(k)] = static_cast<double>(st.alpha[k]);
    out.attention.push_back(std::move(row));
  }
  return out;
}

template <class S>
S S2SNetwork<S>::loss(std::span<const int> ids, std::span<const GapLabel> labels,
                      std::vector<Mat>* grad, Rng* dropout_rng) const {
  if (labels.size() != ids.size()) throw LengthMismatch("labels and tokens differ in length");
  Trace<S> tr;
  run_forward<S>(*this, ids, labels, dropout_rng, tr);
  const Eigen::Index n = static_cast<Eigen::Index>(ids.size());
  S total = 0;
  for (Eigen::Index t = 0; t < n; ++t) {
    const auto& st = tr.steps[static_cast<std::size_t>(t)];
    total -= std::log(std::max(st.p[static_cast<Eigen::Index>(labels[static_cast<std::size_t>(t)])],
                               std::numeric_limits<S>::min()));
  }
  if (grad == nullptr) return total;

  auto& G = *grad;
  const auto& P = params_;
  const Eigen::Index h = config_.hidden_size;
  Mat dH = Mat::Zero(2 * h, n);
  Vec ds = Vec::Zero(h), dc = Vec::Zero(h);
  for (Eigen::Index t = n - 1; t >= 0; --t) {
    const auto u = static_cast<std::size_t>(t);
    const auto& st = tr.steps[u];
    Vec dlogits = st.p;
    dlogits[static_cast<Eigen::Index>(labels[u])] -= S(1);
    G[kOutW].noalias() += dlogits * st.q.transpose();
    G[kOutB].col(0) += dlogits;
    Vec dq = (P[kOutW].transpose() * dlogits).array() * st.q_mask.array();
    ds += dq.head(h);
    Vec dctx = dq.segment(h, 2 * h);
    dH.col(t) += dq.tail(2 * h);

    Vec dz = lstm_backward<S>(P[kDecW], G[kDecW], G[kDecB], st.cell, ds, dc);
    const Eigen::Index e = config_.label_embedding_size;
    if (tr.fed[u] >= 0) G[kLabelEmbedding].col(tr.fed[u]) += dz.head(e);
    dctx += dz.segment(e, 2 * h);
    Vec dsp = dz.tail(h);

    // Attention.
    Vec dalpha = tr.H.transpose() * dctx;
    dH.noalias() += dctx * st.alpha.transpose();
    const S dot = st.alpha.dot(dalpha);
    Vec de = (st.alpha.array() * (dalpha.array() - dot)).matrix();
    G[kAttV].col(0).noalias() += st.tanh_pre * de;
    Mat dpre = ((P[kAttV].col(0) * de.transpose()).array() * (S(1) - st.tanh_pre.array().square())).matrix();
    Vec dws = dpre.rowwise().sum();
    G[kAttW].noalias() += dws * st.sp.transpose();
    G[kAttB].col(0) += dws;
    dsp.noalias() += P[kAttW].transpose() * dws;
    G[kAttU].noalias() += dpre * tr.H.transpose();
    dH.noalias() += P[kAttU].transpose() * dpre;
    ds = dsp;
  }
  // Initial decoder state.
  Vec dpre0 = (ds.array() * (S(1) - tr.s0.array().square())).matrix();
  G[kInitW].noalias() += dpre0 * tr.init_in.transpose();
  G[kInitB].col(0) += dpre0;
  Vec dinit = P[kInitW].transpose() * dpre0;
  dH.col(n - 1).head(h) += dinit.head(h);
  dH.col(0).tail(h) += dinit.tail(h);

  const Eigen::Index d = config_.embedding_size;
  std::vector<Vec> dx(static_cast<std::size_t>(n), Vec::Zero(d));
  Vec dhf = Vec::Zero(h), dcf = Vec::Zero(h);
  for (Eigen::Index t = n - 1; t >= 0; --t) {
    const auto u = static_cast<std::size_t>(t);
    Vec dh = dH.col(t).head(h) + dhf;
    Vec dxh = lstm_backward<S>(P[kEncFwdW], G[kEncFwdW], G[kEncFwdB], tr.fwd[u], dh, dcf);
    dx[u] += dxh.head(d);
    dhf = dxh.tail(h);
  }
  Vec dhb = Vec::Zero(h), dcb = Vec::Zero(h);
  for (Eigen::Index t = 0; t < n; ++t) {
    const auto u = static_cast<std::size_t>(t);
    Vec dh = dH.col(t).tail(h) + dhb;
    Vec dxh = lstm_backward<S>(P[kEncBwdW], G[kEncBwdW], G[kEncBwdB], tr.bwd[u], dh, dcb);
    dx[u] += dxh.head(d);
    dhb = dxh.tail(h);
  }
  for (Eigen::Index t = 0; t < n; ++t) {
    const auto u = static_cast<std::size_t>(t);
    G[kEmbedding].col(ids[u]) += (dx[u].array() * tr.x_mask[u].array()).matrix();
  }
  return total;
}

template class S2SNetwork<float>;
template class S2SNetwork<double>;
template S2SNetwork<double> S2SNetwork<float>::cast<double>() const;
template S2SNetwork<float> S2SNetwork<double>::cast<float>() const;

double gradient_check(const S2SNetwork<double>& net, std::span<const int> ids,
                      std::span<const GapLabel> labels, double h) {
  auto grad = net.zero_like();
  net.loss(ids, labels, &grad);
  S2SNetwork<double> probe = net;
  double worst = 0.0;
  for (std::size_t p = 0; p < probe.params().size(); ++p) {
    auto& m = probe.params()[p];
    for (Eigen::Index k = 0; k < m.size(); ++k) {
      const double orig = m.data()[k];
      m.data()[k] = orig + h;
      const double up = probe.loss(ids, labels);
      m.data()[k] = orig - h;
      const double down = probe.loss(ids, labels);
      m.data()[k] = orig;
      const double numeric = (up - down) / (2 * h);
      const double analytic = grad[p].data()[k];
      const double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
      worst = std::max(worst, std::abs(numeric - analytic) / denom);
    }
  }
  return worst;
}

// ----------------------------------------------------------------- model

S2SModel::S2SModel(const S2SConfig& config, S2SVocab vocab)
    : config_(config), vocab_(std::move(vocab)), net_(config, vocab_.size()) {
  Rng rng(substream_seed(config.seed, "s2s-init"));
  net_.randomize(rng, config.init_scale);
}

LabelOutput S2SModel::label(const AnnotatedSentence& sentence) const {
  if (sentence.size() == 0) throw EmptyInput("empty input sentence");
  auto ids = vocab_.encode(sentence);
  const std::size_t keep = std::min(ids.size(), static_cast<std::size_t>(config_.max_input_length));
  LabelOutput out = net_.decode(std::span<const int>(ids).first(keep));
  out.truncated = ids.size() - keep;
  for (std::size_t k = keep; k < ids.size(); ++k) {
    out.probs.push_back({1.0, 0.0});
    out.labels.push_back(GapLabel::kSpace);
  }
  out.labels.back() = GapLabel::kSpace;
  return out;
}

double S2SModel::mean_loss(std::span<const LabeledSequence> data) const {
  double total = 0.0;
  std::size_t tokens = 0;
  for (const auto& seq : data) {
    auto ids = vocab_.encode(seq.sentence);
    const std::size_t keep = std::min(ids.size(), static_cast<std::size_t>(config_.max_input_length));
    if (keep == 0) continue;
    total += static_cast<double>(net_.loss(std::span<const int>(ids).first(keep),
                                           std::span<const GapLabel>(seq.labels).first(keep)));
    tokens += keep;
  }
  return tokens ? total / static_cast<double>(tokens) : 0.0;
}

std::size_t S2SModel::load_embeddings(std::istream& in, const std::string& name) {
  auto& E = net_.params()[S2SNetwork<float>::kEmbedding];
  std::size_t set = 0, lineno = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++lineno;
    auto fields = text::split(line, ' ');
    if (fields.empty()) continue;
    // A leading "count dim" header line is tolerated.
    if (lineno == 1 && fields.size() == 2) continue;
    if (static_cast<Eigen::Index>(fields.size()) - 1 != E.rows()) {
      throw FormatError(name, lineno, "expected " + std::to_string(E.rows()) + " values, got " +
                                          std::to_string(fields.size() - 1));
    }
    const int id = vocab_.id(fields[0]);
    if (id == S2SVocab::kUnk && fields[0] != "<unk>") continue;
    for (Eigen::Index k = 0; k < E.rows(); ++k) {
      try {
        E(k, id) = static_cast<float>(text::parse_double(fields[static_cast<std::size_t>(k) + 1]));
      } catch (const InvalidArgument& e) {
        throw FormatError(name, lineno, e.what());
      }
    }
    ++set;
  }
  return set;
}

namespace {

constexpr char kS2SMagic[8] = {'R', 'U', 'N', 'O', 'N', 'S', '2', 'S'};
constexpr std::uint32_t kS2SVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int k = 0; k < 4; ++k) b[k] = static_cast<char>((v >> (8 * k)) & 0xff);
  out.write(b, 4);
}
void put_u64(std::ostream& out, std::uint64_t v) {
  put_u32(out, static_cast<std::uint32_t>(v));
  put_u32(out, static_cast<std::uint32_t>(v >> 32));
}
void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }
void put_str(std::ostream& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

struct Reader {
  std::istream& in;
  const std::string& name;
  std::uint64_t offset = 0;

  void read(char* buf, std::size_t n) {
    in.read(buf, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n) throw FormatError(name, offset, "truncated checkpoint");
    offset += n;
  }
  std::uint32_t u32() {
    unsigned char b[4];
    read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
           static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
  }
  std::uint64_t u64() {
    std::uint64_t lo = u32();
    return lo | static_cast<std::uint64_t>(u32()) << 32;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  std::string str(std::uint32_t limit = 1u << 20) {
    std::uint32_t n = u32();
    if (n > limit) throw FormatError(name, offset, "string too long");
    std::string s(n, '\0');
    read(s.data(), n);
    return s;
  }
};

}  // namespace

void S2SModel::save(std::ostream& out) const {
  out.write(kS2SMagic, sizeof kS2SMagic);
  put_u32(out, kS2SVersion);
  const auto& c = config_;
  for (int v : {c.hidden_size, c.embedding_size, c.label_embedding_size, c.attention_size, c.vocab_size,
                c.min_count, c.max_input_length, c.batch_size, c.epochs}) {
    put_u32(out, static_cast<std::uint32_t>(v));
  }
  for (double v : {c.dropout, c.learning_rate, c.lr_decay, c.init_scale, c.clip_norm}) put_f64(out, v);
  put_u64(out, c.seed);
  put_u32(out, static_cast<std::uint32_t>(vocab_.size()));
  for (const auto& w : vocab_.words()) put_str(out, w);
  const auto& P = net_.params();
  put_u32(out, static_cast<std::uint32_t>(P.size()));
  for (std::size_t p = 0; p < P.size(); ++p) {
    put_str(out, S2SNetwork<float>::param_name(p));
    put_u32(out, static_cast<std::uint32_t>(P[p].rows()));
    put_u32(out, static_cast<std::uint32_t>(P[p].cols()));
    for (Eigen::Index k = 0; k < P[p].size(); ++k) put_u32(out, std::bit_cast<std::uint32_t>(P[p].data()[k]));
  }
}

S2SModel S2SModel::load(std::istream& in, const std::string& name) {
  Reader r{in, name};
  char magic[sizeof kS2SMagic];
  r.read(magic, sizeof magic);
  if (std::memcmp(magic, kS2SMagic, sizeof magic) != 0) throw FormatError(name, 0, "not a seq2seq checkpoint");
  if (r.u32() != kS2SVersion) throw FormatError(name, r.offset, "unsupported checkpoint version");
  S2SConfig c;
  for (int* v : {&c.hidden_size, &c.embedding_size, &c.label_embedding_size, &c.attention_size, &c.vocab_size,
                 &c.min_count, &c.max_input_length, &c.batch_size, &c.epochs}) {
    *v = r.i32();
  }
  for (double* v : {&c.dropout, &c.learning_rate, &c.lr_decay, &c.init_scale, &c.clip_norm}) *v = r.f64();
  c.seed = r.u64();
  try {
    c.validate();
  } catch (const InvalidArgument& e) {
    throw FormatError(name, r.offset, e.what());
  }
  const std::uint32_t nv = r.u32();
  std::vector<std::string> words;
  for (std::uint32_t k = 0; k < nv; ++k) words.push_back(r.str());
  if (words.empty() || words[0] != "<unk>") throw FormatError(name, r.offset, "vocabulary must start with <unk>");
  S2SModel m;
  m.config_ = c;
  m.vocab_ = S2SVocab::from_words(std::move(words));
  if (m.vocab_.size() != nv) throw FormatError(name, r.offset, "duplicate vocabulary entries");
  m.net_ = S2SNetwork<float>(c, m.vocab_.size());
  auto& P = m.net_.params();
  if (r.u32() != P.size()) throw FormatError(name, r.offset, "wrong tensor count");
  for (std::size_t p = 0; p < P.size(); ++p) {
    const std::string tname = r.str();
    if (tname != S2SNetwork<float>::param_name(p)) throw FormatError(name, r.offset, "unexpected tensor '" + tname + "'");
    const auto rows = r.u32(), cols = r.u32();
    if (rows != P[p].rows() || cols != P[p].cols()) throw FormatError(name, r.offset, "tensor '" + tname + "' has the wrong shape");
    for (Eigen::Index k = 0; k < P[p].size(); ++k) {
      const float v = std::bit_cast<float>(r.u32());
      if (!std::isfinite(v)) throw FormatError(name, r.offset, "non-finite weight in '" + tname + "'");
      P[p].data()[k] = v;
    }
  }
  return m;
}

// --------------------------------------------------------------- training

S2STrainer::S2STrainer(S2SModel& model, std::uint64_t seed)
    : model_(model),
      accum_(model.network().zero_like()),
      dropout_rng_(substream_seed(seed, "s2s-dropout")),
      lr_(model.config().learning_rate) {}

double S2STrainer::step(std::span<const LabeledSequence> batch) {
  auto& net = model_.network();
  const auto& cfg = model_.config();
  auto grad = net.zero_like();
  double total = 0.0;
  std::size_t tokens = 0, used = 0;
  for (const auto& seq : batch) {
    auto ids = model_.vocab().encode(seq.sentence);
    if (ids.empty()) continue;
    const std::size_t keep = std::min(ids.size(), static_cast<std::size_t>(cfg.max_input_length));
    truncated_ += ids.size() - keep;
    total += static_cast<double>(net.loss(std::span<const int>(ids).first(keep),
                                          std::span<const GapLabel>(seq.labels).first(keep), &grad,
                                          &dropout_rng_));
    tokens += keep;
    ++used;
  }
  if (used == 0) return 0.0;
  const float scale = 1.0f / static_cast<float>(used);
  double norm2 = 0.0;
  for (auto& g : grad) {
    g *= scale;
    norm2 += static_cast<double>(g.squaredNorm());
  }
  float clip = 1.0f;
  if (cfg.clip_norm > 0 && std::sqrt(norm2) > cfg.clip_norm) {
    clip = static_cast<float>(cfg.clip_norm / std::sqrt(norm2));
  }
  const float lr = static_cast<float>(lr_);
  auto& P = net.params();
  for (std::size_t p = 0; p < P.size(); ++p) {
    auto g = (grad[p] * clip).array();
    accum_[p].array() += g.square();
    P[p].array() -= lr * g / (accum_[p].array().sqrt() + 1e-8f);
  }
  return total / static_cast<double>(tokens);
}

S2SModel train_s2s(std::span<const LabeledSequence> train, std::span<const LabeledSequence> valid,
                   const S2SConfig& config, S2STrainingHistory* history,
                   const std::function<void(int, double, double)>& progress) {
  config.validate();
  if (train.empty()) throw NoData("no training sequences");
  S2SModel model(config, S2SVocab::build(train, config.vocab_size, config.min_count));
  S2STrainer trainer(model, config.seed);
  Rng shuffle_rng(substream_seed(config.seed, "s2s-shuffle"));
  std::vector<std::size_t> order(train.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;

  S2STrainingHistory hist;
  double best = std::numeric_limits<double>::infinity();
  S2SModel best_model = model;
  std::vector<LabeledSequence> batch;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle_rng.shuffle(std::span<std::size_t>(order));
    double sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      batch.clear();
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      for (std::size_t k = start; k < end; ++k) batch.push_back(train[order[k]]);
      sum += trainer.step(batch);
      ++batches;
    }
    const double train_loss = sum / static_cast<double>(batches);
    const double valid_loss = valid.empty() ? train_loss : model.mean_loss(valid);
    hist.train_loss.push_back(train_loss);
    hist.valid_loss.push_back(valid_loss);
    hist.learning_rate.push_back(trainer.learning_rate());
    if (valid_loss < best) {
      best = valid_loss;
      best_model = model;
      hist.best_epoch = epoch;
    } else {
      trainer.set_learning_rate(trainer.learning_rate() * config.lr_decay);
    }
    if (progress) progress(epoch, train_loss, valid_loss);
  }
  hist.truncated = trainer.truncated();
  if (history) *history = std::move(hist);
  return config.epochs > 0 ? best_model : model;
}

// ---------------------------------------------------------------- fusion

std::vector<std::string> restore_tokens(const AnnotatedSentence& sentence,
                                        std::span<const GapLabel> labels) {
  if (labels.size() != sentence.size()) throw LengthMismatch("labels and tokens differ in length");
  std::vector<std::string> out;
  bool capitalize = false;
  for (std::size_t i = 0; i < sentence.size(); ++i) {
    std::string w = sentence.tokens[i].surface();
    if (capitalize) w = text::upper_first(w);
    out.push_back(std::move(w));
    capitalize = labels[i] == GapLabel::kPeriod && i + 1 < sentence.size();
    if (capitalize) out.emplace_back(".");
  }
  return out;
}

std::string fuse_output(const AnnotatedSentence& sentence, std::span<const GapLabel> labels) {
  return text::detokenize(restore_tokens(sentence, labels));
}

}  // namespace runon
