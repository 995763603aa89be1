#pragma once

// The countable admissible-word Markov graph, finite loop-based truncations,
// spectral entropy approximation, exact loop counting, strongly connected
// components, and Parry chains on irreducible truncations.

#include <array>
#include <cmath>
#include <numeric>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pwadyn/rng.hpp"
#include "pwadyn/strips.hpp"

namespace pwadyn {

// Vertices are (word w, index i) with 0 <= i < |w|; the chain edge
// (w,i) -> (w,i+1) is implicit, branching happens only at (w,|w|-1) through
// follower edges (w,|w|-1) -> (w',0).
struct MarkovGraph {
  std::vector<std::vector<int>> words;      // admissible words (letters)
  std::vector<std::string> word_names;      // display names, parallel to words
  std::vector<int> word_rect;               // start rectangle per word (-1 if n/a)
  std::vector<std::vector<int>> followers;  // word -> follower word ids
  int excluded_unknown = 0;                 // strips dropped for unknown admissibility

  std::vector<int> offset;  // vertex id of (w, 0)
  int vertex_count = 0;

  void build_index() {
    offset.clear();
    int v = 0;
    for (const auto& w : words) {
      offset.push_back(v);
      v += static_cast<int>(w.size());
    }
    vertex_count = v;
  }
  int vertex(int word, int i) const { return offset[static_cast<std::size_t>(word)] + i; }
  std::pair<int, int> locate(int v) const {
    int w = static_cast<int>(offset.size()) - 1;
    while (offset[static_cast<std::size_t>(w)] > v) --w;
    return {w, v - offset[static_cast<std::size_t>(w)]};
  }
  int letter_of_vertex(int v) const {
    const auto [w, i] = locate(v);
    return words[static_cast<std::size_t>(w)][static_cast<std::size_t>(i)];
  }

  std::vector<int> out_edges(int v) const {
    const auto [w, i] = locate(v);
    if (i + 1 < static_cast<int>(words[static_cast<std::size_t>(w)].size()))
      return {vertex(w, i + 1)};
    std::vector<int> out;
    for (const int f : followers[static_cast<std::size_t>(w)]) out.push_back(vertex(f, 0));
    return out;
  }
  std::vector<int> base_vertices() const {
    std::vector<int> out;
    for (std::size_t w = 0; w < words.size(); ++w) out.push_back(offset[w]);
    return out;
  }
};

// Word graph from certified admissible strips: words are the extended words
// minus their last letter; w' follows w when w extended by w''s first letter
// is again an extended admissible word.
inline MarkovGraph build_word_graph(const StripAnalysis& a) {
  MarkovGraph g;
  std::set<std::vector<int>> extended;
  std::map<std::vector<int>, int> word_id;
  for (const auto& s : a.strips) {
    if (s.admissible == Strip::Admissible::unknown) {
      ++g.excluded_unknown;
      continue;
    }
    if (s.admissible != Strip::Admissible::yes) continue;
    extended.insert(s.ext_letters);
    const std::vector<int> w(s.ext_letters.begin(), s.ext_letters.end() - 1);
    if (word_id.emplace(w, static_cast<int>(g.words.size())).second) {
      g.words.push_back(w);
      g.word_names.push_back(a.word_str(w));
      g.word_rect.push_back(a.cell_rect[static_cast<std::size_t>(w[0])]);
    }
  }
  g.followers.resize(g.words.size());
  for (std::size_t w = 0; w < g.words.size(); ++w)
    for (std::size_t f = 0; f < g.words.size(); ++f) {
      std::vector<int> ext = g.words[w];
      ext.push_back(g.words[f][0]);
      if (extended.count(ext)) g.followers[w].push_back(static_cast<int>(f));
    }
  g.build_index();
  return g;
}

// Synthetic graphs (tests, gallery): words with an explicit follower relation.
inline MarkovGraph make_word_graph(std::vector<std::vector<int>> words,
                                   std::vector<std::vector<int>> followers,
                                   std::vector<std::string> names = {}) {
  MarkovGraph g;
  g.words = std::move(words);
  g.followers = std::move(followers);
  if (names.empty()) {
    for (std::size_t i = 0; i < g.words.size(); ++i) g.word_names.push_back("w" + std::to_string(i));
  } else {
    g.word_names = std::move(names);
  }
  g.word_rect.assign(g.words.size(), -1);
  g.build_index();
  return g;
}

// ---------------------------------------------------------------------------
// Finite truncations.

struct FiniteTruncation {
  std::vector<int> vertices;                 // global vertex ids kept, sorted
  std::vector<std::vector<int>> adjacency;   // local indices
  std::vector<bool> is_base;                 // (w, 0) vertices among the kept
  double log_rho = -std::numeric_limits<double>::infinity();
  bool irreducible = false;
  int loop_bound = 0;  // the n of the truncation
};

namespace detail {

// Tarjan strongly connected components over a local adjacency list.
inline std::vector<std::vector<int>> strongly_connected(const std::vector<std::vector<int>>& adj) {
  const int n = static_cast<int>(adj.size());
  std::vector<int> index(static_cast<std::size_t>(n), -1), low(static_cast<std::size_t>(n), 0);
  std::vector<bool> on_stack(static_cast<std::size_t>(n), false);
  std::vector<int> stack;
  std::vector<std::vector<int>> sccs;
  int counter = 0;

  struct Frame {
    int v;
    std::size_t edge;
  };
  for (int root = 0; root < n; ++root) {
    if (index[static_cast<std::size_t>(root)] != -1) continue;
    std::vector<Frame> call;
    call.push_back({root, 0});
    index[static_cast<std::size_t>(root)] = low[static_cast<std::size_t>(root)] = counter++;
    stack.push_back(root);
    on_stack[static_cast<std::size_t>(root)] = true;
    while (!call.empty()) {
      auto& f = call.back();
      if (f.edge < adj[static_cast<std::size_t>(f.v)].size()) {
        const int u = adj[static_cast<std::size_t>(f.v)][f.edge++];
        if (index[static_cast<std::size_t>(u)] == -1) {
          index[static_cast<std::size_t>(u)] = low[static_cast<std::size_t>(u)] = counter++;
          stack.push_back(u);
          on_stack[static_cast<std::size_t>(u)] = true;
          call.push_back({u, 0});
        } else if (on_stack[static_cast<std::size_t>(u)]) {
          low[static_cast<std::size_t>(f.v)] =
              std::min(low[static_cast<std::size_t>(f.v)], index[static_cast<std::size_t>(u)]);
        }
      } else {
        if (low[static_cast<std::size_t>(f.v)] == index[static_cast<std::size_t>(f.v)]) {
          std::vector<int> comp;
          for (;;) {
            const int u = stack.back();
            stack.pop_back();
            on_stack[static_cast<std::size_t>(u)] = false;
            comp.push_back(u);
            if (u == f.v) break;
          }
          std::sort(comp.begin(), comp.end());
          sccs.push_back(std::move(comp));
        }
        const int v = f.v;
        call.pop_back();
        if (!call.empty())
          low[static_cast<std::size_t>(call.back().v)] =
              std::min(low[static_cast<std::size_t>(call.back().v)], low[static_cast<std::size_t>(v)]);
      }
    }
  }
  std::sort(sccs.begin(), sccs.end());
  return sccs;
}

// Spectral radius of a nonnegative 0/1 adjacency by power iteration on
// (A + I), which converges for periodic graphs too; restart-safe per SCC is
// the caller's concern. Returns 0 for an empty/edgeless component.
inline double spectral_radius(const std::vector<std::vector<int>>& adj, double tol = 1e-12,
                              int max_iters = 1'000'000) {
  const std::size_t n = adj.size();
  if (n == 0) return 0.0;
  bool any_edge = false;
  for (const auto& e : adj) any_edge |= !e.empty();
  if (!any_edge) return 0.0;
  std::vector<double> v(n, 1.0 / std::sqrt(static_cast<double>(n))), w(n);
  double lam = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      w[i] = v[i];  // the +I shift
      for (const int j : adj[i]) w[i] += v[static_cast<std::size_t>(j)];
    }
    double norm = 0.0;
    for (const double x : w) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) return 0.0;
    for (std::size_t i = 0; i < n; ++i) w[i] /= norm;
    const double prev = lam;
    lam = norm;
    std::swap(v, w);
    if (it > 3 && std::fabs(lam - prev) < tol * std::max(1.0, lam)) break;
  }
  return std::max(0.0, lam - 1.0);
}

}  // namespace detail

// Subgraph on the vertices and edges lying on a loop of length <= n through a
// base vertex, per the loop-exhaustion scheme; the leading eigenvalue is the
// max over strongly connected components. Empty truncations report -inf.
inline FiniteTruncation finite_truncation(const MarkovGraph& g, int n) {
  if (n < 1) throw std::invalid_argument("finite_truncation: n must be >= 1");
  FiniteTruncation t;
  t.loop_bound = n;
  const int V = g.vertex_count;
  const auto bases = g.base_vertices();

  // Forward and backward BFS distances from/to every base vertex.
  const auto bfs = [&](int src, bool backward) {
    std::vector<int> dist(static_cast<std::size_t>(V), -1);
    std::vector<std::vector<int>> radj;
    if (backward) {
      radj.assign(static_cast<std::size_t>(V), {});
      for (int v = 0; v < V; ++v)
        for (const int u : g.out_edges(v)) radj[static_cast<std::size_t>(u)].push_back(v);
    }
    std::vector<int> q = {src};
    dist[static_cast<std::size_t>(src)] = 0;
    for (std::size_t h = 0; h < q.size(); ++h) {
      const int v = q[h];
      const auto nexts = backward ? radj[static_cast<std::size_t>(v)] : g.out_edges(v);
      for (const int u : nexts)
        if (dist[static_cast<std::size_t>(u)] == -1) {
          dist[static_cast<std::size_t>(u)] = dist[static_cast<std::size_t>(v)] + 1;
          q.push_back(u);
        }
    }
    return dist;
  };

  std::vector<std::vector<int>> dfwd, dbwd;
  for (const int b : bases) {
    dfwd.push_back(bfs(b, false));
    dbwd.push_back(bfs(b, true));
  }

  // An edge (v, u) survives iff it lies on a loop of length <= n based at a
  // base vertex; surviving vertices are exactly the endpoints of surviving
  // edges (a "loop" has length >= 1, so lone base vertices drop out).
  const auto edge_on_loop = [&](int v, int u) {
    for (std::size_t b = 0; b < bases.size(); ++b) {
      const int df = dfwd[b][static_cast<std::size_t>(v)];
      const int db = dbwd[b][static_cast<std::size_t>(u)];
      if (df >= 0 && db >= 0 && df + 1 + db <= n) return true;
    }
    return false;
  };
  std::vector<bool> kept(static_cast<std::size_t>(V), false);
  for (int v = 0; v < V; ++v)
    for (const int u : g.out_edges(v))
      if (edge_on_loop(v, u)) {
        kept[static_cast<std::size_t>(v)] = true;
        kept[static_cast<std::size_t>(u)] = true;
      }
  std::vector<int> keep;
  for (int v = 0; v < V; ++v)
    if (kept[static_cast<std::size_t>(v)]) keep.push_back(v);
  t.vertices = keep;
  if (keep.empty()) return t;

  std::vector<int> local(static_cast<std::size_t>(V), -1);
  for (std::size_t i = 0; i < keep.size(); ++i) local[static_cast<std::size_t>(keep[i])] = static_cast<int>(i);
  t.adjacency.assign(keep.size(), {});
  for (std::size_t i = 0; i < keep.size(); ++i)
    for (const int u : g.out_edges(keep[i]))
      if (local[static_cast<std::size_t>(u)] >= 0 && edge_on_loop(keep[i], u))
        t.adjacency[i].push_back(local[static_cast<std::size_t>(u)]);
  std::set<int> base_set(bases.begin(), bases.end());
  t.is_base.assign(keep.size(), false);
  for (std::size_t i = 0; i < keep.size(); ++i) t.is_base[i] = base_set.count(keep[i]) > 0;

  // Spectral radius per strongly connected component.
  const auto sccs = detail::strongly_connected(t.adjacency);
  double rho = 0.0;
  for (const auto& comp : sccs) {
    std::vector<int> sub_local(t.adjacency.size(), -1);
    for (std::size_t i = 0; i < comp.size(); ++i)
      sub_local[static_cast<std::size_t>(comp[i])] = static_cast<int>(i);
    std::vector<std::vector<int>> sub(comp.size());
    for (std::size_t i = 0; i < comp.size(); ++i)
      for (const int u : t.adjacency[static_cast<std::size_t>(comp[i])])
        if (sub_local[static_cast<std::size_t>(u)] >= 0)
          sub[i].push_back(sub_local[static_cast<std::size_t>(u)]);
    rho = std::max(rho, detail::spectral_radius(sub));
  }
  t.log_rho = rho > 0.0 ? std::log(rho) : -std::numeric_limits<double>::infinity();
  t.irreducible = sccs.size() == 1 && sccs[0].size() == t.adjacency.size();
  return t;
}

// ---------------------------------------------------------------------------
// Loop counts (exact, arbitrary precision).

// Number of closed paths of each length 1..n_max based at `base_vertex`
// (a global vertex id of g).
inline std::vector<mpz_class> loop_counts(const MarkovGraph& g, int base_vertex, int n_max) {
  if (base_vertex < 0 || base_vertex >= g.vertex_count)
    throw std::invalid_argument("loop_counts: vertex out of range");
  const int V = g.vertex_count;
  std::vector<mpz_class> cur(static_cast<std::size_t>(V), 0), next(static_cast<std::size_t>(V));
  cur[static_cast<std::size_t>(base_vertex)] = 1;
  std::vector<mpz_class> counts;
  for (int step = 1; step <= n_max; ++step) {
    for (auto& x : next) x = 0;
    for (int v = 0; v < V; ++v) {
      if (cur[static_cast<std::size_t>(v)] == 0) continue;
      for (const int u : g.out_edges(v)) next[static_cast<std::size_t>(u)] += cur[static_cast<std::size_t>(v)];
    }
    std::swap(cur, next);
    counts.push_back(cur[static_cast<std::size_t>(base_vertex)]);
  }
  return counts;
}

// ---------------------------------------------------------------------------
// Irreducible components and the maximum-measure bound.

struct ComponentReport {
  std::vector<std::vector<int>> components;  // local vertex indices of the truncation
  std::vector<double> log_rho;               // per component
  std::vector<bool> has_base;
  int mme_bound = 0;  // maximal-entropy components meeting a base vertex
};

inline ComponentReport irreducible_components(const FiniteTruncation& t) {
  ComponentReport rep;
  rep.components = detail::strongly_connected(t.adjacency);
  double max_rho = 0.0;
  std::vector<double> rhos;
  for (const auto& comp : rep.components) {
    std::vector<int> sub_local(t.adjacency.size(), -1);
    for (std::size_t i = 0; i < comp.size(); ++i)
      sub_local[static_cast<std::size_t>(comp[i])] = static_cast<int>(i);
    std::vector<std::vector<int>> sub(comp.size());
    for (std::size_t i = 0; i < comp.size(); ++i)
      for (const int u : t.adjacency[static_cast<std::size_t>(comp[i])])
        if (sub_local[static_cast<std::size_t>(u)] >= 0) sub[i].push_back(sub_local[static_cast<std::size_t>(u)]);
    const double rho = detail::spectral_radius(sub);
    rhos.push_back(rho);
    max_rho = std::max(max_rho, rho);
    bool base = false;
    for (const int v : comp) base |= t.is_base[static_cast<std::size_t>(v)];
    rep.has_base.push_back(base);
  }
  for (std::size_t c = 0; c < rep.components.size(); ++c) {
    rep.log_rho.push_back(rhos[c] > 0 ? std::log(rhos[c])
                                      : -std::numeric_limits<double>::infinity());
    const bool maximal = std::fabs(rhos[c] - max_rho) <= 1e-9 * std::max(1.0, max_rho);
    if (rep.has_base[c] && maximal && !rep.components[c].empty()) {
      // Single vertices without self-loops carry no measure.
      const bool has_edge = !t.adjacency[static_cast<std::size_t>(rep.components[c][0])].empty() ||
                            rep.components[c].size() > 1;
      if (has_edge || max_rho > 0) ++rep.mme_bound;
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Parry measures.

class NotIrreducibleError : public std::runtime_error {
 public:
  NotIrreducibleError() : std::runtime_error("parry_measure requires an irreducible truncation") {}
};

struct ParryChain {
  std::vector<int> vertices;                 // global vertex ids (from the truncation)
  std::vector<std::vector<int>> adjacency;   // local
  std::vector<std::vector<double>> prob;     // transition probabilities, parallel
  std::vector<double> stationary;
  double entropy = 0.0;  // -sum pi p log p
  double log_rho = 0.0;
  int period = 1;        // 1 = aperiodic
};

namespace detail {

inline std::vector<double> perron_vector(const std::vector<std::vector<int>>& adj, double tol = 1e-14,
                                         int max_iters = 1'000'000) {
  const std::size_t n = adj.size();
  std::vector<double> v(n, 1.0 / static_cast<double>(n)), w(n);
  for (int it = 0; it < max_iters; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      w[i] = v[i];
      for (const int j : adj[i]) w[i] += v[static_cast<std::size_t>(j)];
    }
    double sum = 0.0;
    for (const double x : w) sum += x;
    double diff = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      w[i] /= sum;
      diff = std::max(diff, std::fabs(w[i] - v[i]));
    }
    std::swap(v, w);
    if (diff < tol) break;
  }
  return v;
}

inline int graph_period(const std::vector<std::vector<int>>& adj) {
  // gcd over edges (u,v) of depth(u) + 1 - depth(v), BFS from vertex 0.
  const std::size_t n = adj.size();
  std::vector<int> depth(n, -1);
  std::vector<int> q = {0};
  depth[0] = 0;
  for (std::size_t h = 0; h < q.size(); ++h)
    for (const int u : adj[static_cast<std::size_t>(q[h])])
      if (depth[static_cast<std::size_t>(u)] == -1) {
        depth[static_cast<std::size_t>(u)] = depth[static_cast<std::size_t>(q[h])] + 1;
        q.push_back(u);
      }
  long g = 0;
  for (std::size_t v = 0; v < n; ++v)
    for (const int u : adj[v]) {
      const long d = depth[v] + 1 - depth[static_cast<std::size_t>(u)];
      g = std::gcd(g, std::labs(d));
    }
  return g == 0 ? 1 : static_cast<int>(g);
}

}  // namespace detail

// Maximal-entropy Markov chain on an irreducible truncation: transition
// probabilities p_ij = A_ij r_j / (rho r_i) with r the right Perron vector,
// stationary distribution l_i r_i (l the left one). Periodic chains are
// handled and flagged via `period`.
inline ParryChain parry_measure(const FiniteTruncation& t) {
  if (!t.irreducible || t.adjacency.empty()) throw NotIrreducibleError();
  ParryChain chain;
  chain.vertices = t.vertices;
  chain.adjacency = t.adjacency;
  const std::size_t n = t.adjacency.size();

  const double rho = detail::spectral_radius(t.adjacency);
  chain.log_rho = rho > 0 ? std::log(rho) : -std::numeric_limits<double>::infinity();
  const auto right = detail::perron_vector(t.adjacency);
  std::vector<std::vector<int>> radj(n);
  for (std::size_t v = 0; v < n; ++v)
    for (const int u : t.adjacency[v]) radj[static_cast<std::size_t>(u)].push_back(static_cast<int>(v));
  const auto left = detail::perron_vector(radj);

  chain.prob.assign(n, {});
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (const int j : t.adjacency[i]) {
      const double p = right[static_cast<std::size_t>(j)] / (rho * right[i]);
      chain.prob[i].push_back(p);
      row += p;
    }
    // Normalize away the last float crumbs; row sums must hit 1 to 1e-12.
    if (row > 0)
      for (auto& p : chain.prob[i]) p /= row;
  }
  chain.stationary.assign(n, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    chain.stationary[i] = left[i] * right[i];
    total += chain.stationary[i];
  }
  for (auto& x : chain.stationary) x /= total;

  chain.entropy = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (const double p : chain.prob[i])
      if (p > 0) chain.entropy -= chain.stationary[i] * p * std::log(p);
  chain.period = detail::graph_period(t.adjacency);
  return chain;
}

// Deterministic seeded sample path of the chain, reported as local vertex
// indices (use project_letters to map onto map itineraries).
inline std::vector<int> sample_orbit(const ParryChain& chain, int length, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<int> path;
  if (chain.stationary.empty() || length <= 0) return path;
  // Initial vertex from the stationary distribution.
  double u = rng.uniform01();
  std::size_t cur = 0;
  for (std::size_t i = 0; i < chain.stationary.size(); ++i) {
    if (u < chain.stationary[i] || i + 1 == chain.stationary.size()) {
      cur = i;
      break;
    }
    u -= chain.stationary[i];
  }
  path.push_back(static_cast<int>(cur));
  for (int k = 1; k < length; ++k) {
    const auto& edges = chain.adjacency[cur];
    if (edges.empty()) break;
    double r = rng.uniform01();
    std::size_t pick = edges.size() - 1;
    for (std::size_t e = 0; e < edges.size(); ++e) {
      if (r < chain.prob[cur][e]) {
        pick = e;
        break;
      }
      r -= chain.prob[cur][e];
    }
    cur = static_cast<std::size_t>(edges[pick]);
    path.push_back(static_cast<int>(cur));
  }
  return path;
}

// Project a sampled vertex path to partition letters via (w, i) -> w_i.
inline std::vector<int> project_letters(const MarkovGraph& g, const ParryChain& chain,
                                        const std::vector<int>& path) {
  std::vector<int> letters;
  for (const int local : path)
    letters.push_back(g.letter_of_vertex(chain.vertices[static_cast<std::size_t>(local)]));
  return letters;
}

// ---------------------------------------------------------------------------
// Graph files: `word <name> rect <r> letters <l0> <l1> ...` + `follow <a> <b>`.

inline std::string format_word_graph(const MarkovGraph& g) {
  std::string s;
  for (std::size_t w = 0; w < g.words.size(); ++w) {
    s += "word " + g.word_names[w] + " rect " + std::to_string(g.word_rect[w]) + " letters";
    for (const int l : g.words[w]) s += " " + std::to_string(l);
    s += "\n";
  }
  for (std::size_t w = 0; w < g.words.size(); ++w)
    for (const int f : g.followers[w])
      s += "follow " + g.word_names[w] + " " + g.word_names[static_cast<std::size_t>(f)] + "\n";
  return s;
}

// Strips files are the record lines emitted by the `strips` subcommand; the
// word graph needs only the admissibility flag and the extended word.
inline MarkovGraph word_graph_from_strips_records(const std::string& text) {
  std::set<std::vector<std::string>> extended;
  std::map<std::vector<std::string>, int> word_id;
  MarkovGraph g;
  int excluded = 0;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::string admissible, word;
    std::istringstream ls(line);
    std::string tok;
    bool is_strip = false;
    while (ls >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
      if (key == "strip") is_strip = true;
      if (key == "admissible") admissible = val;
      if (key == "word") word = val;
    }
    if (!is_strip || word.empty()) continue;
    if (admissible == "unknown") {
      ++excluded;
      continue;
    }
    if (admissible != "yes") continue;
    std::vector<std::string> letters;
    std::string cur;
    for (const char c : word + ",") {
      if (c == ',') {
        letters.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    extended.insert(letters);
  }
  // Intern letters and collect admissible words.
  std::map<std::string, int> letter_id;
  const auto intern = [&](const std::string& s) {
    return letter_id.emplace(s, static_cast<int>(letter_id.size())).first->second;
  };
  for (const auto& ext : extended) {
    std::vector<int> w;
    for (std::size_t i = 0; i + 1 < ext.size(); ++i) w.push_back(intern(ext[i]));
    intern(ext.back());
    if (word_id.emplace(std::vector<std::string>(ext.begin(), ext.end() - 1),
                        static_cast<int>(g.words.size()))
            .second) {
      std::string name;
      for (std::size_t i = 0; i + 1 < ext.size(); ++i) name += (i ? "," : "") + ext[i];
      g.words.push_back(w);
      g.word_names.push_back(name);
      g.word_rect.push_back(-1);
    }
  }
  std::set<std::vector<int>> ext_ints;
  for (const auto& ext : extended) {
    std::vector<int> e;
    for (const auto& s : ext) e.push_back(letter_id.at(s));
    ext_ints.insert(e);
  }
  g.followers.resize(g.words.size());
  for (std::size_t w = 0; w < g.words.size(); ++w)
    for (std::size_t f = 0; f < g.words.size(); ++f) {
      std::vector<int> ext = g.words[w];
      ext.push_back(g.words[f][0]);
      if (ext_ints.count(ext)) g.followers[w].push_back(static_cast<int>(f));
    }
  g.excluded_unknown = excluded;
  g.build_index();
  return g;
}

inline MarkovGraph parse_word_graph(const std::string& text) {
  const auto toks = detail::tokenize_map_spec(text);
  MarkovGraph g;
  std::map<std::string, int> by_name;
  std::size_t i = 0;
  auto need = [&](const char* what) -> const detail::Token& {
    if (i >= toks.size()) {
      const auto& last = toks.empty() ? detail::Token{"", 1, 1} : toks.back();
      throw ParseError(last.line, last.col, std::string("unexpected end of input, expected ") + what);
    }
    return toks[i];
  };
  std::vector<std::pair<std::string, std::string>> follows;
  while (i < toks.size()) {
    const auto& kw = toks[i];
    if (kw.text == "word") {
      ++i;
      const std::string name = need("word name").text;
      ++i;
      if (need("'rect'").text != "rect") throw ParseError(toks[i].line, toks[i].col, "expected 'rect'");
      ++i;
      const int rect = std::atoi(need("rect index").text.c_str());
      ++i;
      if (need("'letters'").text != "letters")
        throw ParseError(toks[i].line, toks[i].col, "expected 'letters'");
      ++i;
      std::vector<int> letters;
      while (i < toks.size() && toks[i].text != "word" && toks[i].text != "follow") {
        letters.push_back(std::atoi(toks[i].text.c_str()));
        ++i;
      }
      if (letters.empty()) throw ParseError(kw.line, kw.col, "word '" + name + "' has no letters");
      by_name[name] = static_cast<int>(g.words.size());
      g.words.push_back(std::move(letters));
      g.word_names.push_back(name);
      g.word_rect.push_back(rect);
    } else if (kw.text == "follow") {
      ++i;
      const std::string from = need("word name").text;
      ++i;
      const std::string to = need("word name").text;
      ++i;
      follows.emplace_back(from, to);
    } else {
      throw ParseError(kw.line, kw.col, "unknown directive '" + kw.text + "'");
    }
  }
  g.followers.resize(g.words.size());
  for (const auto& [from, to] : follows) {
    const auto a = by_name.find(from), b = by_name.find(to);
    if (a == by_name.end() || b == by_name.end())
      throw ParseError(1, 1, "follow references unknown word '" + (a == by_name.end() ? from : to) + "'");
    g.followers[static_cast<std::size_t>(a->second)].push_back(b->second);
  }
  g.build_index();
  return g;
}

}  // namespace pwadyn
