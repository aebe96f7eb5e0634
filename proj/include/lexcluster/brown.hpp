#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "lexcluster/clustering.hpp"
#include "lexcluster/corpus.hpp"
#include "lexcluster/error.hpp"
#include "lexcluster/io.hpp"
#include "lexcluster/tokenize.hpp"

namespace lexcluster {

struct Bigram {
  std::uint32_t left;
  std::uint32_t right;
  std::uint64_t count;
};

/// Adjacent in-vocabulary token pairs, counted within documents only.
/// Indices refer to `vocab`.
struct BigramCounts {
  Vocabulary vocab;
  std::vector<std::uint64_t> unigram;
  std::vector<Bigram> bigrams;  // sorted by (left, right)
  std::uint64_t total_tokens = 0;

  std::uint64_t total_bigrams() const {
    std::uint64_t n = 0;
    for (const auto& b : bigrams) n += b.count;
    return n;
  }
};

/// Out-of-vocabulary tokens are removed before pairing, so [a, x, b] with x
/// unknown yields the bigram (a, b).
inline BigramCounts count_bigrams(const Corpus& corpus, const Vocabulary& vocab) {
  if (!corpus.tokenized()) throw StateError("count_bigrams requires a tokenized corpus");
  if (vocab.size() > std::numeric_limits<std::uint32_t>::max())
    throw ParameterError("vocabulary too large for bigram counting");
  BigramCounts out;
  out.vocab = vocab;
  out.unigram.assign(vocab.size(), 0);
  std::unordered_map<std::uint64_t, std::uint64_t> pairs;
  std::vector<std::uint32_t> ids;
  for (const Document& d : corpus.documents()) {
    ids.clear();
    for (const auto& t : *d.tokens)
      if (auto i = vocab.find(t)) ids.push_back(static_cast<std::uint32_t>(*i));
    for (std::size_t k = 0; k < ids.size(); ++k) {
      ++out.unigram[ids[k]];
      ++out.total_tokens;
      if (k + 1 < ids.size())
        ++pairs[(static_cast<std::uint64_t>(ids[k]) << 32) | ids[k + 1]];
    }
  }
  if (out.total_tokens == 0)
    throw EmptyInputError("no in-vocabulary tokens to count");
  out.bigrams.reserve(pairs.size());
  for (auto [key, c] : pairs)
    out.bigrams.push_back({static_cast<std::uint32_t>(key >> 32),
                           static_cast<std::uint32_t>(key & 0xffffffffu), c});
  std::sort(out.bigrams.begin(), out.bigrams.end(), [](const Bigram& a, const Bigram& b) {
    return a.left != b.left ? a.left < b.left : a.right < b.right;
  });
  return out;
}

namespace detail {

/// One term of the cluster-bigram mutual information in bits:
/// p(a,b) log2(p(a,b) / (p_left(a) p_right(b))) with p = count / total.
inline double mi_term(double n_ab, double left_a, double right_b, double total) {
  if (n_ab <= 0.0) return 0.0;
  return (n_ab / total) * std::log2(n_ab * total / (left_a * right_b));
}

}  // namespace detail

/// Average mutual information (bits) between the clusters of adjacent
/// tokens. Every vocabulary word of `counts` must be covered.
inline double average_mutual_information(const BigramCounts& counts,
                                         const WordClustering& clustering) {
  const std::size_t v = counts.vocab.size();
  std::vector<std::size_t> cluster(v);
  for (std::size_t i = 0; i < v; ++i) {
    auto c = clustering.cluster_of(counts.vocab.word(i));
    if (!c) throw VocabularyError("clustering does not cover word: " + counts.vocab.word(i));
    cluster[i] = *c;
  }
  const std::size_t k = clustering.k();
  std::vector<double> joint(k * k, 0.0), left(k, 0.0), right(k, 0.0);
  double total = 0.0;
  for (const auto& b : counts.bigrams) {
    const double n = static_cast<double>(b.count);
    joint[cluster[b.left] * k + cluster[b.right]] += n;
    left[cluster[b.left]] += n;
    right[cluster[b.right]] += n;
    total += n;
  }
  if (total == 0.0) return 0.0;
  double ami = 0.0;
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t c = 0; c < k; ++c)
      ami += detail::mi_term(joint[a * k + c], left[a], right[c], total);
  return ami;
}

struct Merge {
  std::uint32_t left;   // smaller cluster id
  std::uint32_t right;  // larger cluster id
  double ami_loss;

  bool operator==(const Merge&) const = default;
};

/// Merge history over the leaves. Leaf i is vocabulary word i with cluster id
/// i; the cluster created by merge t has id leaves.size() + t.
struct Dendrogram {
  std::vector<std::string> leaves;
  std::vector<std::uint64_t> leaf_counts;
  std::vector<Merge> merges;
  double initial_ami = 0.0;

  bool full_tree() const { return leaves.size() <= 1 || merges.size() + 1 == leaves.size(); }

  /// Root-to-leaf bit strings; merge (a, b) puts a under '0' and b under '1'.
  /// A forest is joined by prefix codes over its roots in id order.
  std::vector<std::string> paths() const;

  bool operator==(const Dendrogram&) const = default;
};

struct BrownConfig {
  std::size_t window = 1000;
  bool full_tree = true;
  /// Recompute every window pair's loss from scratch at each step instead of
  /// applying incremental updates. Slow; used to cross-check the fast path.
  bool exact = false;
};

namespace detail {

class BrownState {
 public:
  explicit BrownState(const BigramCounts& counts) {
    const std::size_t v = counts.vocab.size();
    nodes_.resize(2 * v);
    for (const auto& b : counts.bigrams) {
      const double n = static_cast<double>(b.count);
      nodes_[b.left].out[b.right] += n;
      nodes_[b.right].in[b.left] += n;
      nodes_[b.left].left += n;
      nodes_[b.right].right += n;
      total_ += n;
    }
    scratch_out_.assign(2 * v, 0.0);
    scratch_in_.assign(2 * v, 0.0);
  }

  double ami() const {
    double sum = 0.0;
    for (std::size_t a = 0; a < next_id(); ++a)
      for (auto [b, n] : nodes_[a].out) sum += term(n, nodes_[a].left, nodes_[b].right);
    return sum;
  }

  /// AMI lost by merging x and y, evaluated from the current tables.
  double loss(std::uint32_t x, std::uint32_t y) {
    if (total_ == 0.0) return 0.0;
    const Node& nx = nodes_[x];
    const Node& ny = nodes_[y];
    double before = 0.0;
    for (const Node* node : {&nx, &ny}) {
      for (auto [c, n] : node->out) before += term(n, node->left, nodes_[c].right);
      for (auto [c, n] : node->in) before += term(n, nodes_[c].left, node->right);
    }
    // Terms with both ends in {x, y} were counted twice.
    before -= term(count(x, x), nx.left, nx.right);
    before -= term(count(x, y), nx.left, ny.right);
    before -= term(count(y, x), ny.left, nx.right);
    before -= term(count(y, y), ny.left, ny.right);

    const double zl = nx.left + ny.left;
    const double zr = nx.right + ny.right;
    double self_loop = count(x, x) + count(x, y) + count(y, x) + count(y, y);

    touched_.clear();
    auto accumulate = [&](const std::unordered_map<std::uint32_t, double>& m,
                          std::vector<double>& acc) {
      for (auto [c, n] : m) {
        if (c == x || c == y) continue;
        if (scratch_out_[c] == 0.0 && scratch_in_[c] == 0.0) touched_.push_back(c);
        acc[c] += n;
      }
    };
    accumulate(nx.out, scratch_out_);
    accumulate(ny.out, scratch_out_);
    accumulate(nx.in, scratch_in_);
    accumulate(ny.in, scratch_in_);
    double after = term(self_loop, zl, zr);
    for (std::uint32_t c : touched_) {
      after += term(scratch_out_[c], zl, nodes_[c].right);
      after += term(scratch_in_[c], nodes_[c].left, zr);
      scratch_out_[c] = 0.0;
      scratch_in_[c] = 0.0;
    }
    return before - after;
  }

  /// Change in loss(i, j) caused by merging a and b, evaluated before the
  /// merge is applied. Only terms touching a or b move.
  double loss_delta(std::uint32_t i, std::uint32_t j, std::uint32_t a,
                    std::uint32_t b) const {
    if (total_ == 0.0) return 0.0;
    const Node& ni = nodes_[i];
    const Node& nj = nodes_[j];
    const Node& na = nodes_[a];
    const Node& nb = nodes_[b];
    const double zl = na.left + nb.left;
    const double zr = na.right + nb.right;
    const double ml = ni.left + nj.left;
    const double mr = ni.right + nj.right;

    const double ia = count(i, a), ai = count(a, i), ib = count(i, b), bi = count(b, i);
    const double ja = count(j, a), aj = count(a, j), jb = count(j, b), bj = count(b, j);

    const double before_old =
        term(ia, ni.left, na.right) + term(ai, na.left, ni.right) +
        term(ib, ni.left, nb.right) + term(bi, nb.left, ni.right) +
        term(ja, nj.left, na.right) + term(aj, na.left, nj.right) +
        term(jb, nj.left, nb.right) + term(bj, nb.left, nj.right);
    const double before_new = term(ia + ib, ni.left, zr) + term(ai + bi, zl, ni.right) +
                              term(ja + jb, nj.left, zr) + term(aj + bj, zl, nj.right);
    const double after_old = term(ia + ja, ml, na.right) + term(ai + aj, na.left, mr) +
                             term(ib + jb, ml, nb.right) + term(bi + bj, nb.left, mr);
    const double after_new =
        term(ia + ja + ib + jb, ml, zr) + term(ai + aj + bi + bj, zl, mr);
    return (before_new - before_old) - (after_new - after_old);
  }

  /// Merges a and b into a fresh cluster id and returns it.
  std::uint32_t merge(std::uint32_t a, std::uint32_t b) {
    const std::uint32_t z = static_cast<std::uint32_t>(next_id_++);
    Node& nz = nodes_[z];
    Node& na = nodes_[a];
    Node& nb = nodes_[b];
    nz.left = na.left + nb.left;
    nz.right = na.right + nb.right;
    const double self_loop = count(a, a) + count(a, b) + count(b, a) + count(b, b);
    for (Node* src : {&na, &nb}) {
      for (auto [c, n] : src->out) {
        if (c == a || c == b) continue;
        nz.out[c] += n;
        auto& back = nodes_[c].in;
        back.erase(a);
        back.erase(b);
        back[z] += n;
      }
      for (auto [c, n] : src->in) {
        if (c == a || c == b) continue;
        nz.in[c] += n;
        auto& back = nodes_[c].out;
        back.erase(a);
        back.erase(b);
        back[z] += n;
      }
    }
    if (self_loop > 0.0) {
      nz.out[z] = self_loop;
      nz.in[z] = self_loop;
    }
    na = Node{};
    nb = Node{};
    return z;
  }

  void set_next_id(std::size_t id) { next_id_ = id; }
  std::size_t next_id() const { return next_id_; }

 private:
  struct Node {
    std::unordered_map<std::uint32_t, double> out;
    std::unordered_map<std::uint32_t, double> in;
    double left = 0.0;
    double right = 0.0;
  };

  double count(std::uint32_t a, std::uint32_t b) const {
    const auto& m = nodes_[a].out;
    auto it = m.find(b);
    return it == m.end() ? 0.0 : it->second;
  }

  double term(double n, double l, double r) const { return mi_term(n, l, r, total_); }

  std::vector<Node> nodes_;
  double total_ = 0.0;
  std::size_t next_id_ = 0;
  std::vector<double> scratch_out_, scratch_in_;
  std::vector<std::uint32_t> touched_;
};

}  // namespace detail

/// Windowed greedy Brown clustering.
///
/// The `window` most frequent words start as singleton clusters. Each step
/// admits the next most frequent word and merges the window pair whose merge
/// loses the least average mutual information; words outside the window
/// count as singletons in that objective. Once every word is admitted the
/// window is merged down to a single tree when `full_tree` is set. Equal
/// losses go to the lexicographically smallest (id, id) pair.
inline Dendrogram brown_cluster(const BigramCounts& counts, const BrownConfig& config) {
  const std::size_t v = counts.vocab.size();
  if (config.window < 2) throw ParameterError("brown window must be >= 2");
  if (v < 2) throw BoundsError("brown clustering needs at least 2 words");

  Dendrogram out;
  out.leaves = counts.vocab.words();
  out.leaf_counts = counts.unigram;

  // Admission order: frequency descending, vocabulary index breaks ties.
  std::vector<std::uint32_t> order(v);
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    return counts.unigram[a] > counts.unigram[b];
  });

  detail::BrownState state(counts);
  state.set_next_id(v);
  out.initial_ami = state.ami();

  const std::size_t slots = std::min(config.window, v) + 1;
  constexpr std::uint32_t kEmpty = std::numeric_limits<std::uint32_t>::max();
  std::vector<std::uint32_t> slot(slots, kEmpty);
  std::vector<double> loss(slots * slots, 0.0);
  auto at = [&](std::size_t s, std::size_t t) -> double& {
    return s < t ? loss[s * slots + t] : loss[t * slots + s];
  };
  auto fill_row = [&](std::size_t s) {
    for (std::size_t t = 0; t < slots; ++t)
      if (t != s && slot[t] != kEmpty) at(s, t) = state.loss(slot[s], slot[t]);
  };

  std::size_t admitted = 0;
  std::size_t live = 0;
  auto admit = [&](std::size_t s) {
    slot[s] = order[admitted++];
    ++live;
    fill_row(s);
  };
  for (std::size_t s = 0; s + 1 < slots; ++s) admit(s);

  // Relative slack under which two losses count as equal, so incremental
  // rounding noise cannot override the id tie-break.
  constexpr double kTieSlack = 1e-12;
  for (;;) {
    if (admitted < v) {
      auto free_slot = std::find(slot.begin(), slot.end(), kEmpty) - slot.begin();
      admit(static_cast<std::size_t>(free_slot));
    } else if (!(config.full_tree && live > 1)) {
      break;
    }

    if (config.exact)
      for (std::size_t s = 0; s < slots; ++s)
        for (std::size_t t = s + 1; t < slots; ++t)
          if (slot[s] != kEmpty && slot[t] != kEmpty) at(s, t) = state.loss(slot[s], slot[t]);

    std::size_t bs = 0, bt = 0;
    double best = std::numeric_limits<double>::infinity();
    std::pair<std::uint32_t, std::uint32_t> best_ids{kEmpty, kEmpty};
    for (std::size_t s = 0; s < slots; ++s) {
      if (slot[s] == kEmpty) continue;
      for (std::size_t t = s + 1; t < slots; ++t) {
        if (slot[t] == kEmpty) continue;
        const double l = at(s, t);
        std::pair ids{std::min(slot[s], slot[t]), std::max(slot[s], slot[t])};
        const double slack = kTieSlack * std::max(1.0, std::abs(best));
        if (l < best - slack || (l <= best + slack && ids < best_ids)) {
          best = l;
          best_ids = ids;
          bs = s;
          bt = t;
        }
      }
    }

    const std::uint32_t a = slot[bs], b = slot[bt];
    if (!config.exact) {
      for (std::size_t s = 0; s < slots; ++s) {
        if (slot[s] == kEmpty || s == bs || s == bt) continue;
        for (std::size_t t = s + 1; t < slots; ++t) {
          if (slot[t] == kEmpty || t == bs || t == bt) continue;
          at(s, t) += state.loss_delta(slot[s], slot[t], a, b);
        }
      }
    }
    const std::uint32_t z = state.merge(a, b);
    // Exact losses are non-negative; clamp rounding noise below zero.
    out.merges.push_back({best_ids.first, best_ids.second, std::max(0.0, best)});
    const std::size_t keep = std::min(bs, bt), drop = std::max(bs, bt);
    slot[keep] = z;
    slot[drop] = kEmpty;
    --live;
    fill_row(keep);
  }
  return out;
}

inline std::vector<std::string> Dendrogram::paths() const {
  const std::size_t v = leaves.size();
  const std::size_t total = v + merges.size();
  std::vector<std::uint32_t> parent(total, std::numeric_limits<std::uint32_t>::max());
  std::vector<char> bit(total, 0);
  for (std::size_t t = 0; t < merges.size(); ++t) {
    const auto z = static_cast<std::uint32_t>(v + t);
    parent[merges[t].left] = z;
    bit[merges[t].left] = '0';
    parent[merges[t].right] = z;
    bit[merges[t].right] = '1';
  }
  std::vector<std::uint32_t> roots;
  for (std::size_t n = 0; n < total; ++n)
    if (parent[n] == std::numeric_limits<std::uint32_t>::max())
      roots.push_back(static_cast<std::uint32_t>(n));
  std::unordered_map<std::uint32_t, std::string> root_prefix;
  for (std::size_t r = 0; r < roots.size(); ++r) {
    if (roots.size() == 1) {
      root_prefix[roots[r]] = "";
    } else {
      std::string code(r, '1');
      if (r + 1 < roots.size()) code += '0';
      root_prefix[roots[r]] = code;
    }
  }
  std::vector<std::string> out(v);
  for (std::size_t leaf = 0; leaf < v; ++leaf) {
    std::string rev;
    std::uint32_t n = static_cast<std::uint32_t>(leaf);
    while (parent[n] != std::numeric_limits<std::uint32_t>::max()) {
      rev += bit[n];
      n = parent[n];
    }
    out[leaf] = root_prefix[n] + std::string(rev.rbegin(), rev.rend());
  }
  return out;
}

/// Flat clustering with k clusters: applies the first |leaves| - k merges
/// (equivalently undoes the last ones of a full tree). Cluster ids follow
/// the first occurrence of their words in leaf order.
inline WordClustering cut(const Dendrogram& d, std::size_t k, std::string corpus_tag = {}) {
  const std::size_t v = d.leaves.size();
  if (k < 1 || k > v)
    throw BoundsError("cut k=" + std::to_string(k) + " outside [1, " + std::to_string(v) + "]");
  if (v - k > d.merges.size())
    throw BoundsError("cut k=" + std::to_string(k) + " needs " + std::to_string(v - k) +
                      " merges but the dendrogram has " + std::to_string(d.merges.size()));
  std::vector<std::uint32_t> parent(v + d.merges.size());
  std::iota(parent.begin(), parent.end(), 0u);
  for (std::size_t t = 0; t < v - k; ++t) {
    const auto z = static_cast<std::uint32_t>(v + t);
    parent[d.merges[t].left] = z;
    parent[d.merges[t].right] = z;
  }
  std::vector<std::size_t> raw(v);
  for (std::size_t leaf = 0; leaf < v; ++leaf) {
    std::uint32_t n = static_cast<std::uint32_t>(leaf);
    while (parent[n] != n) n = parent[n];
    raw[leaf] = n;
  }
  return WordClustering(d.leaves, relabel_by_first_occurrence(raw),
                        {ClusterAlgorithm::brown, std::move(corpus_tag)});
}

/// `binary-path<TAB>word<TAB>frequency`, one line per leaf in leaf order.
inline std::string serialize_paths(const Dendrogram& d) {
  std::string out;
  auto paths = d.paths();
  for (std::size_t i = 0; i < d.leaves.size(); ++i) {
    out += paths[i];
    out += '\t';
    out += d.leaves[i];
    out += '\t';
    out += std::to_string(d.leaf_counts[i]);
    out += '\n';
  }
  return out;
}

/// `left<TAB>right<TAB>ami_loss`, one line per merge in merge order.
inline std::string serialize_merges(const Dendrogram& d) {
  std::string out;
  for (const Merge& m : d.merges) {
    out += std::to_string(m.left);
    out += '\t';
    out += std::to_string(m.right);
    out += '\t';
    out += format_real(m.ami_loss);
    out += '\n';
  }
  return out;
}

namespace detail {

inline std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  for (;;) {
    auto tab = line.find('\t', start);
    parts.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return parts;
}

}  // namespace detail

/// Rebuilds a dendrogram from its paths and merges files. Paths are
/// re-derived from the merges, so a mismatch between the two is an error.
inline Dendrogram load_dendrogram(const std::string& paths_path,
                                  const std::string& merges_path) {
  Dendrogram d;
  std::vector<std::string> stored_paths;
  {
    std::ifstream in(paths_path);
    if (!in) throw IoError("cannot open paths file: " + paths_path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      auto parts = detail::split_tabs(line);
      if (parts.size() != 3)
        throw FormatError(paths_path + " line " + std::to_string(line_no) +
                          ": expected path<TAB>word<TAB>frequency");
      try {
        d.leaf_counts.push_back(std::stoull(parts[2]));
      } catch (const std::exception&) {
        throw FormatError(paths_path + " line " + std::to_string(line_no) + ": bad frequency");
      }
      stored_paths.push_back(parts[0]);
      d.leaves.push_back(parts[1]);
    }
  }
  {
    std::ifstream in(merges_path);
    if (!in) throw IoError("cannot open merges file: " + merges_path);
    std::string line;
    std::size_t line_no = 0;
    std::size_t next = d.leaves.size();
    std::unordered_set<std::uint32_t> used;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      auto parts = detail::split_tabs(line);
      if (parts.size() != 3)
        throw FormatError(merges_path + " line " + std::to_string(line_no) +
                          ": expected left<TAB>right<TAB>loss");
      Merge m{};
      try {
        m.left = static_cast<std::uint32_t>(std::stoul(parts[0]));
        m.right = static_cast<std::uint32_t>(std::stoul(parts[1]));
        m.ami_loss = std::stod(parts[2]);
      } catch (const std::exception&) {
        throw FormatError(merges_path + " line " + std::to_string(line_no) + ": bad field");
      }
      if (m.left >= next || m.right >= next || m.left == m.right || used.contains(m.left) ||
          used.contains(m.right))
        throw FormatError(merges_path + " line " + std::to_string(line_no) +
                          ": merge refers to an unknown or already merged cluster");
      used.insert(m.left);
      used.insert(m.right);
      d.merges.push_back(m);
      ++next;
    }
  }
  if (d.merges.size() >= d.leaves.size() && !d.leaves.empty())
    throw FormatError("more merges than the leaves allow");
  if (d.paths() != stored_paths)
    throw FormatError("paths file does not match merges file");
  return d;
}

}  // namespace lexcluster
