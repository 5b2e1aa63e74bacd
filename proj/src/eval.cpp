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

#include "runon/eval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "runon/error.hpp"
#include "runon/random.hpp"

namespace runon {

namespace {

double ratio(std::int64_t a, std::int64_t b) {
  return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b);
}

void check_aligned(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw AlignmentError(std::string(what) + ": " + std::to_string(a) + " vs " + std::to_string(b));
  }
}

std::array<double, 3> as_array(const Metrics& m) { return {m.precision, m.recall, m.f05}; }

std::string lower(const std::string& s) {
  std::string out = s;
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool is_terminal(const std::string& s) { return s == "." || s == "!" || s == "?"; }

}  // namespace

double f_beta(double precision, double recall, double beta) {
  if (precision + recall <= 0.0) return 0.0;
  const double b2 = beta * beta;
  return (1.0 + b2) * precision * recall / (b2 * precision + recall);
}

double f05(double precision, double recall) {
  if (precision + recall <= 0.0) return 0.0;
  return 1.25 * precision * recall / (0.25 * precision + recall);
}

Metrics metrics(const Counts& c) {
  Metrics m;
  m.precision = ratio(c.tp, c.tp + c.fp);
  m.recall = ratio(c.tp, c.tp + c.fn);
  m.f05 = f05(m.precision, m.recall);
  return m;
}

Counts judge(std::span<const GapLabel> pred, std::span<const GapLabel> gold) {
  check_aligned(pred.size(), gold.size(), "sequence length mismatch");
  Counts c;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const bool p = pred[i] == GapLabel::kPeriod;
    const bool g = gold[i] == GapLabel::kPeriod;
    if (p && g) ++c.tp;
    else if (p) ++c.fp;
    else if (g) ++c.fn;
  }
  return c;
}

EvalReport score(std::span<const Labels> pred, std::span<const Labels> gold, const std::string& system,
                 const std::string& dataset) {
  check_aligned(pred.size(), gold.size(), "sequence count mismatch");
  EvalReport r;
  r.system = system;
  r.dataset = dataset;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    try {
      r.counts += judge(pred[i], gold[i]);
    } catch (const AlignmentError& e) {
      throw AlignmentError("sequence " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  r.m = metrics(r.counts);
  return r;
}

EvalReport score(std::span<const LabeledSequence> pred, std::span<const LabeledSequence> gold,
                 const std::string& system, const std::string& dataset) {
  check_aligned(pred.size(), gold.size(), "sequence count mismatch");
  std::vector<Labels> p;
  std::vector<Labels> g;
  p.reserve(pred.size());
  g.reserve(gold.size());
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const auto& a = pred[i].sentence.tokens;
    const auto& b = gold[i].sentence.tokens;
    bool same = a.size() == b.size();
    for (std::size_t k = 0; same && k < a.size(); ++k) same = a[k].surface() == b[k].surface();
    if (!same) throw AlignmentError("sequence " + std::to_string(i + 1) + ": tokens differ");
    p.push_back(pred[i].labels);
    g.push_back(gold[i].labels);
  }
  return score(p, g, system, dataset);
}

std::vector<Labels> random_baseline(std::span<const Labels> gold, const Fraction& rate,
                                    std::uint64_t seed) {
  if (rate.den <= 0 || rate.num < 0 || rate.num > rate.den) {
    throw InvalidArgument("rate must lie in [0, 1]");
  }
  Rng rng(seed);
  std::vector<Labels> out;
  out.reserve(gold.size());
  for (const Labels& g : gold) {
    Labels l(g.size(), GapLabel::kSpace);
    const bool flagged = rng.below(static_cast<std::uint64_t>(rate.den)) < static_cast<std::uint64_t>(rate.num);
    if (flagged && g.size() >= 2) l[rng.below(g.size() - 1)] = GapLabel::kPeriod;
    out.push_back(std::move(l));
  }
  return out;
}

ExpectedScore expected_random_score(std::span<const Labels> gold, const Fraction& rate) {
  if (rate.den <= 0 || rate.num < 0 || rate.num > rate.den) {
    throw InvalidArgument("rate must lie in [0, 1]");
  }
  const double q = rate.value();
  double predicted = 0.0;
  double tp = 0.0;
  double periods = 0.0;
  for (const Labels& g : gold) {
    const auto n = static_cast<double>(std::count(g.begin(), g.end(), GapLabel::kPeriod));
    periods += n;
    if (g.size() < 2) continue;
    predicted += q;
    const auto open = static_cast<double>(std::count(g.begin(), g.end() - 1, GapLabel::kPeriod));
    tp += q * open / static_cast<double>(g.size() - 1);
  }
  ExpectedScore e;
  e.tp = tp;
  e.fp = predicted - tp;
  e.fn = periods - tp;
  e.m.precision = predicted > 0.0 ? tp / predicted : 0.0;
  e.m.recall = periods > 0.0 ? tp / periods : 0.0;
  e.m.f05 = f05(e.m.precision, e.m.recall);
  return e;
}

BootstrapResult bootstrap_significance(std::span<const Labels> pred_a, std::span<const Labels> pred_b,
                                       std::span<const Labels> gold, std::size_t replicates,
                                       std::uint64_t seed, int workers) {
  if (replicates < 1) throw InvalidArgument("replicates must be at least 1");
  check_aligned(pred_a.size(), gold.size(), "system A sequence count mismatch");
  check_aligned(pred_b.size(), gold.size(), "system B sequence count mismatch");
  if (gold.empty()) throw NoData("no sequences to resample");

  const std::size_t n = gold.size();
  std::vector<Counts> ca(n);
  std::vector<Counts> cb(n);
  Counts ta;
  Counts tb;
  for (std::size_t i = 0; i < n; ++i) {
    ca[i] = judge(pred_a[i], gold[i]);
    cb[i] = judge(pred_b[i], gold[i]);
    ta += ca[i];
    tb += cb[i];
  }

  BootstrapResult res;
  res.replicates = replicates;
  res.seed = seed;
  const auto ma = as_array(metrics(ta));
  const auto mb = as_array(metrics(tb));
  std::array<int, 3> sign{};
  for (int k = 0; k < 3; ++k) {
    res.delta[k] = ma[k] - mb[k];
    sign[k] = res.delta[k] > 0.0 ? 1 : (res.delta[k] < 0.0 ? -1 : 0);
  }

  // failures[r] bit k: replicate r did not see the observed winner win metric k.
  std::vector<std::uint8_t> failures(replicates, 0);
  auto run = [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      Rng rng(counter_seed(seed, r));
      Counts a;
      Counts b;
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = rng.below(n);
        a += ca[j];
        b += cb[j];
      }
      const auto ra = as_array(metrics(a));
      const auto rb = as_array(metrics(b));
      std::uint8_t bits = 0;
      for (int k = 0; k < 3; ++k) {
        const double d = ra[k] - rb[k];
        const bool win = sign[k] > 0 ? d > 0.0 : (sign[k] < 0 ? d < 0.0 : false);
        if (!win) bits |= static_cast<std::uint8_t>(1u << k);
      }
      failures[r] = bits;
    }
  };

  const std::size_t width = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(1, workers)), 1, replicates);
  if (width == 1) {
    run(0, replicates);
  } else {
    std::vector<std::thread> pool;
    const std::size_t per = (replicates + width - 1) / width;
    for (std::size_t w = 0; w < width; ++w) {
      const std::size_t begin = w * per;
      const std::size_t end = std::min(replicates, begin + per);
      if (begin < end) pool.emplace_back(run, begin, end);
    }
    for (auto& t : pool) t.join();
  }

  for (int k = 0; k < 3; ++k) {
    std::size_t fails = 0;
    for (std::uint8_t bits : failures) fails += (bits >> k) & 1u;
    res.p_value[k] = static_cast<double>(fails) / static_cast<double>(replicates);
  }
  return res;
}

Labels align_external(std::span<const std::string> source, std::span<const std::string> system) {
  const std::size_t n = source.size();
  const std::size_t m = system.size();
  if (n == 0) throw AlignmentError("empty source sequence");
  std::vector<std::string> a(n);
  std::vector<std::string> b(m);
  for (std::size_t i = 0; i < n; ++i) a[i] = lower(source[i]);
  for (std::size_t j = 0; j < m; ++j) b[j] = lower(system[j]);

  // lcs[i][j] over suffixes a[i..], b[j..].
  std::vector<std::vector<std::uint32_t>> lcs(n + 1, std::vector<std::uint32_t>(m + 1, 0));
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t j = m; j-- > 0;) {
      lcs[i][j] = a[i] == b[j] ? lcs[i + 1][j + 1] + 1 : std::max(lcs[i + 1][j], lcs[i][j + 1]);
    }
  }
  if (2 * static_cast<std::size_t>(lcs[0][0]) < n) {
    throw AlignmentError("only " + std::to_string(lcs[0][0]) + " of " + std::to_string(n) +
                         " source tokens align");
  }

  Labels out(n, GapLabel::kSpace);
  std::size_t i = 0;
  std::size_t j = 0;
  std::optional<std::size_t> last;  // last matched source index
  while (j < m) {
    if (i < n && a[i] == b[j] && lcs[i][j] == lcs[i + 1][j + 1] + 1) {
      last = i;
      ++i;
      ++j;
    } else if (i < n && lcs[i + 1][j] >= lcs[i][j + 1]) {
      ++i;
    } else {
      if (last && is_terminal(system[j])) out[*last] = GapLabel::kPeriod;
      ++j;
    }
  }
  out.back() = GapLabel::kSpace;
  return out;
}

std::string format2(double v) {
  const double r = std::floor(v * 100.0 + 0.5 + 1e-9) / 100.0;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", r);
  return buf;
}

std::string report_csv(std::span<const EvalReport> reports) {
  std::ostringstream out;
  out << "system,dataset,tp,fp,fn,p,r,f05,p_value\n";
  for (const auto& r : reports) {
    out << r.system << ',' << r.dataset << ',' << r.counts.tp << ',' << r.counts.fp << ',' << r.counts.fn
        << ',' << format2(r.m.precision) << ',' << format2(r.m.recall) << ',' << format2(r.m.f05) << ',';
    if (r.p_value) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.4f", *r.p_value);
      out << buf;
    }
    out << '\n';
  }
  return out.str();
}

std::string report_json(std::span<const EvalReport> reports) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& r : reports) {
    nlohmann::ordered_json o;
    o["system"] = r.system;
    o["dataset"] = r.dataset;
    o["tp"] = r.counts.tp;
    o["fp"] = r.counts.fp;
    o["fn"] = r.counts.fn;
    o["p"] = r.m.precision;
    o["r"] = r.m.recall;
    o["f05"] = r.m.f05;
    if (r.p_value) o["p_value"] = *r.p_value;
    arr.push_back(std::move(o));
  }
  return arr.dump(2) + "\n";
}

std::string report_text(std::span<const EvalReport> reports) {
  std::vector<std::string> systems;
  std::vector<std::string> datasets;
  auto note = [](std::vector<std::string>& v, const std::string& s) {
    if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
  };
  for (const auto& r : reports) {
    note(systems, r.system);
    note(datasets, r.dataset);
  }
  std::size_t name_w = 6;
  for (const auto& s : systems) name_w = std::max(name_w, s.size());
  constexpr std::size_t kCell = 14;  // "0.00 0.00 0.00"

  auto pad = [](std::string s, std::size_t w) {
    if (s.size() < w) s.append(w - s.size(), ' ');
    return s;
  };
  std::ostringstream out;
  out << pad("System", name_w);
  for (const auto& d : datasets) out << "  " << pad(d, kCell);
  out << '\n' << pad("", name_w);
  for (std::size_t k = 0; k < datasets.size(); ++k) out << "  " << pad("P    R    F0.5", kCell);
  out << '\n';
  for (const auto& s : systems) {
    std::string line = pad(s, name_w);
    for (const auto& d : datasets) {
      auto it = std::find_if(reports.begin(), reports.end(),
                             [&](const EvalReport& r) { return r.system == s && r.dataset == d; });
      line += "  ";
      if (it == reports.end()) {
        line += pad("-    -    -", kCell);
      } else {
        std::string cell = format2(it->m.precision) + " " + format2(it->m.recall) + " " + format2(it->m.f05);
        if (it->p_value && *it->p_value < 0.05) cell += "*";
        line += pad(cell, kCell);
      }
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out << line << '\n';
  }
  return out.str();
}

}  // namespace runon
