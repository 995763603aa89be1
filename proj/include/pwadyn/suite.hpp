#pragma once

// The end-to-end experiment driver: each check runs one reproducible
// experiment on the built-in gallery and reports pass/fail with records.
// Shared by the CLI `suite` subcommand and the acceptance test binary.

#include <chrono>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "pwadyn/graph.hpp"
#include "pwadyn/manifold.hpp"
#include "pwadyn/periodic.hpp"
#include "pwadyn/report.hpp"
#include "pwadyn/strips.hpp"
#include "pwadyn/symdyn.hpp"

namespace pwadyn {

struct SuiteOptions {
  bool quick = false;          // reduced depths for a fast smoke run
  std::uint64_t seed = 20250808;
  std::size_t budget = 1'000'000;
};

struct CheckResult {
  std::string name;
  bool pass = true;
  double seconds = 0.0;
  std::vector<Record> records;

  void fail_if(bool bad, const std::string& what) {
    if (bad) {
      pass = false;
      Record r;
      r.add("fail", what);
      records.push_back(r);
    }
  }
};

namespace suitedetail {

inline double now_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

constexpr double kCatEntropy = 0.962424;  // log((3 + sqrt 5) / 2), pinned

inline Vec2 centroid(const ConvexRegion& r) {
  Rat cx(0), cy(0);
  for (const auto& v : r.verts) {
    cx += v.x;
    cy += v.y;
  }
  const Rat n(static_cast<long>(r.verts.size()));
  return {cx / n, cy / n};
}

// The strip analysis used by checks 6 and 7 (built once per suite run).
struct StripFixture {
  std::vector<Rectangle> rects;
  StripAnalysis analysis;
};

inline StripFixture build_strip_fixture(const SuiteOptions& opt) {
  StripFixture f;
  PwaMap cat = gallery_map("cat");
  ProposeOptions popt;
  popt.cluster_factor = 2.0;
  popt.max_clusters = 6;
  const int samples = opt.quick ? 600 : 1200;
  f.rects = propose_rectangles(cat, samples, 6, 0.125, 0.3, opt.seed, popt);
  const int max_n = opt.quick ? 5 : 6;
  f.analysis = detect_strips(cat, f.rects, max_n, opt.budget);
  admissible_filter(f.analysis);
  return f;
}

}  // namespace suitedetail

// 1. Example-C.1 exactness: c_n = 2^n and mult(P^n, O) = 2^n, zero tolerance.
inline CheckResult check_cone_exactness(const SuiteOptions& opt, CylinderTree* tree_out = nullptr) {
  CheckResult res;
  res.name = "c1-cone-exactness";
  const double t0 = suitedetail::now_seconds();
  const int n = opt.quick ? 8 : 12;
  PwaMap cone = gallery_map("c1-cone");
  CylinderTree tree = enumerate_cylinders(cone, n, opt.budget);
  res.fail_if(tree.truncated, "tree truncated");
  const Vec2 apex{Rat(0), Rat(0)};
  for (int k = 1; k <= n && !tree.truncated; ++k) {
    const std::uint64_t expect = 1ULL << k;
    const std::uint64_t ck = tree.counts[static_cast<std::size_t>(k - 1)];
    const std::uint64_t mult = multiplicity_at(tree, k, apex);
    Record r;
    r.add("check", res.name).add("n", k).add("c_n", ck).add("mult_at_apex", mult);
    res.records.push_back(r);
    res.fail_if(ck != expect, "c_" + std::to_string(k) + " != 2^k");
    res.fail_if(mult != expect, "mult(P^k, O) != 2^k at k=" + std::to_string(k));
  }
  // The apex attains the maximal multiplicity.
  const auto prof = multiplicity_profile(tree, n);
  for (std::size_t k = 0; k < prof.max_mult.size(); ++k)
    res.fail_if(prof.max_mult[k] != (1ULL << (k + 1)), "max mult != 2^k");
  res.seconds = suitedetail::now_seconds() - t0;
  res.fail_if(res.seconds >= 10.0, "runtime exceeded 10 s");
  if (tree_out) *tree_out = std::move(tree);
  return res;
}

// 2. Cat-map entropy: the ratio estimator over depths 8..12 within 0.10 of
// log((3+sqrt 5)/2), at the default node budget.
inline CheckResult check_cat_entropy(const SuiteOptions& opt) {
  CheckResult res;
  res.name = "cat-entropy-ratio";
  const double t0 = suitedetail::now_seconds();
  const int depth = opt.quick ? 9 : 12;
  PwaMap cat = gallery_map("cat");
  const auto counts = count_cylinders(cat, depth, opt.budget);
  res.fail_if(counts.truncated, "enumeration truncated by the budget");
  const auto est = entropy_estimates(counts);
  for (int k = 8; k < depth && !counts.truncated; ++k) {
    const double ratio = est.ratio[static_cast<std::size_t>(k - 1)];  // log(c_{k+1}/c_k)
    Record r;
    r.add("check", res.name).add("n", k).add("ratio", ratio);
    res.records.push_back(r);
    res.fail_if(std::fabs(ratio - suitedetail::kCatEntropy) > 0.10,
                "ratio at n=" + std::to_string(k) + " off by more than 0.10");
  }
  res.seconds = suitedetail::now_seconds() - t0;
  res.fail_if(res.seconds >= 300.0, "runtime exceeded 5 min");
  return res;
}

// 3. Multiplicity subexponential: for every homeomorphism-validated gallery
// map, max mult(P^n) <= 2n + max mult(P^1), exact integers.
inline CheckResult check_multiplicity_bound(const SuiteOptions& opt) {
  CheckResult res;
  res.name = "multiplicity-subexponential";
  const double t0 = suitedetail::now_seconds();
  const int n = opt.quick ? 6 : 10;
  for (const auto& name : gallery_names()) {
    PwaMap m = gallery_map(name);
    if (m.homeomorphism != Flag::yes) continue;
    const auto prof = multiplicity_profile(SystemView(m), n, opt.budget);
    const std::uint64_t base = prof.max_mult[0];
    for (int k = 1; k <= n; ++k) {
      const std::uint64_t mk = prof.max_mult[static_cast<std::size_t>(k - 1)];
      Record r;
      r.add("check", res.name).add("map", name).add("n", k).add("max_mult", mk);
      res.records.push_back(r);
      res.fail_if(mk > 2ULL * static_cast<std::uint64_t>(k) + base,
                  name + ": mult bound violated at n=" + std::to_string(k));
    }
  }
  res.seconds = suitedetail::now_seconds() - t0;
  return res;
}

// 4. Lyapunov: cat-map top exponent at n = 100 within 0.05 of the entropy,
// and the exponent sum within 1e-9 of 0.
inline CheckResult check_lyapunov(const SuiteOptions& opt) {
  CheckResult res;
  res.name = "cat-lyapunov";
  const double t0 = suitedetail::now_seconds();
  PwaMap cat = gallery_map("cat");
  SystemView sys(cat);
  const Vec2 x = find_nice_point(sys, 0, 100, opt.seed);
  const auto [lu, ls] = lyapunov_estimate(cat, x, 100);
  Record r;
  r.add("check", res.name).add("lambda_u", lu).add("lambda_s", ls).add("point", x.str());
  res.records.push_back(r);
  res.fail_if(std::fabs(lu - suitedetail::kCatEntropy) >= 0.05, "lambda_u off the eigenvalue rate");
  res.fail_if(std::fabs(lu + ls) >= 1e-9, "exponent sum not zero (det = 1)");
  res.seconds = suitedetail::now_seconds() - t0;
  return res;
}

// 5. Periodic counting: cat N(n) = trace(A^n) - 2 for n <= 8, the c4-nomax
// identity family at every n <= 5, and the normalized growth in [0.5, 1.5].
inline CheckResult check_periodic(const SuiteOptions& opt) {
  CheckResult res;
  res.name = "periodic-counting";
  const double t0 = suitedetail::now_seconds();
  PwaMap cat = gallery_map("cat");

  // Integer oracle: trace of A^n by exact matrix powers.
  const auto trace_oracle = [](int n) {
    long long a = 1, b = 0, c = 0, d = 1;
    for (int k = 0; k < n; ++k) {
      const long long na = 2 * a + c, nb = 2 * b + d, nc = a + c, nd = b + d;
      a = na;
      b = nb;
      c = nc;
      d = nd;
    }
    return a + d - 2;
  };

  const int nmax = opt.quick ? 6 : 10;
  const auto reports = periodic_analysis(cat, nmax, opt.budget);
  std::vector<std::uint64_t> counts;
  for (int n = 1; n <= nmax; ++n) {
    const auto& rep = reports[static_cast<std::size_t>(n - 1)];
    counts.push_back(rep.count());
    Record r;
    r.add("check", res.name).add("map", "cat").add("n", n).add("count", rep.count());
    if (n <= 8) {
      r.add("oracle", static_cast<long long>(trace_oracle(n)));
      res.fail_if(rep.count() != static_cast<std::uint64_t>(trace_oracle(n)),
                  "N(" + std::to_string(n) + ") != trace oracle");
    }
    res.records.push_back(r);
  }
  const auto growth = growth_report(counts, suitedetail::kCatEntropy);
  for (int n = 4; n <= std::min(nmax, 10); ++n) {
    const double v = growth.normalized[static_cast<std::size_t>(n - 1)];
    res.fail_if(v < 0.5 || v > 1.5, "normalized count outside [0.5, 1.5] at n=" + std::to_string(n));
  }

  PwaMap c4 = gallery_map("c4-nomax");
  const auto c4_reports = periodic_analysis(c4, 5, opt.budget);
  const ConvexRegion xyba = c4.pieces[static_cast<std::size_t>(c4.piece_index("xyba"))].domain;
  for (int n = 1; n <= 5; ++n) {
    bool family = false;
    for (const auto& fam : c4_reports[static_cast<std::size_t>(n - 1)].families)
      family |= fam.family.is_polygon() && region_equal(fam.family, xyba);
    Record r;
    r.add("check", res.name).add("map", "c4-nomax").add("n", n).add("identity_family", family);
    res.records.push_back(r);
    res.fail_if(!family, "identity-block family missing at n=" + std::to_string(n));
  }
  res.seconds = suitedetail::now_seconds() - t0;
  return res;
}

// 6. Strip property suite on the cat map with a proposed rectangle array.
inline CheckResult check_strips(const SuiteOptions& opt, suitedetail::StripFixture& fixture) {
  CheckResult res;
  res.name = "strip-properties";
  const double t0 = suitedetail::now_seconds();
  fixture = suitedetail::build_strip_fixture(opt);
  auto& a = fixture.analysis;
  {
    Record r;
    r.add("check", res.name).add("rects", static_cast<long long>(fixture.rects.size()))
        .add("strips", static_cast<long long>(a.strips.size()))
        .add("max_n", a.max_n);
    res.records.push_back(r);
  }
  res.fail_if(fixture.rects.empty(), "no rectangles proposed");
  res.fail_if(a.strips.empty(), "no strips detected");
  res.fail_if(a.budget_exceeded, "detection truncated by the budget");

  // (a) nesting law.
  bool nesting = true;
  for (std::size_t i = 0; i < a.strips.size() && nesting; ++i)
    for (std::size_t j = i + 1; j < a.strips.size() && nesting; ++j) {
      const auto& s = a.strips[i];
      const auto& t = a.strips[j];
      const auto& shorter = s.ext_letters.size() <= t.ext_letters.size() ? s : t;
      const auto& longer = s.ext_letters.size() <= t.ext_letters.size() ? t : s;
      if (std::equal(shorter.ext_letters.begin(), shorter.ext_letters.end(),
                     longer.ext_letters.begin()))
        nesting = region_subset(longer.region, shorter.region);
      else
        nesting = !intersect_convex(s.region, t.region).is_polygon();
    }
  res.fail_if(!nesting, "(a) nesting law violated");

  // (b) concatenation closure.
  SystemView sys(a.refined);
  bool concat_ok = true;
  int concat_tested = 0;
  for (const auto& s : a.strips)
    for (const auto& t : a.strips) {
      if (s.end_rect != t.start_rect || s.ext_letters.back() != t.ext_letters.front()) continue;
      if (s.n + t.n > a.max_n) continue;
      std::vector<int> cat_word(s.ext_letters.begin(), s.ext_letters.end() - 1);
      cat_word.insert(cat_word.end(), t.ext_letters.begin(), t.ext_letters.end());
      ConvexRegion cyl;
      try {
        cyl = manifold_region(sys, cat_word, ManifoldDirection::stable).region;
      } catch (const GeomError&) {
        continue;
      }
      if (!cyl.is_polygon()) continue;
      ++concat_tested;
      concat_ok = concat_ok && a.find(cat_word) != nullptr;
    }
  res.fail_if(!concat_ok, "(b) concatenation closure violated");

  // (c) every 1-strip is admissible.
  for (const auto& s : a.strips)
    if (s.n == 1) res.fail_if(s.admissible != Strip::Admissible::yes, "(c) a 1-strip is not admissible");

  // (d) no word with two distinct admissible decompositions: exhaust all
  // junction-compatible concatenations of certified words up to max_n + 2.
  const auto adm = detail::collect_admissible(a);
  bool unique_ok = true;
  int decompose_tested = 0;
  std::function<void(std::vector<int>&, const std::vector<int>*, std::size_t)> extend =
      [&](std::vector<int>& word, const std::vector<int>* last, std::size_t len) {
        if (!unique_ok) return;
        if (!word.empty()) {
          ++decompose_tested;
          try {
            unique_ok = unique_ok && decompose_forward(a, word).has_value();
          } catch (const DecompositionAmbiguityError&) {
            unique_ok = false;
          }
        }
        for (const auto& w : adm.words) {
          if (len + w.size() > static_cast<std::size_t>(a.max_n) + 2) continue;
          if (last && !adm.follower_ok(*last, w[0])) continue;
          std::vector<int> next = word;
          next.insert(next.end(), w.begin(), w.end());
          extend(next, &w, len + w.size());
        }
      };
  std::vector<int> empty;
  extend(empty, nullptr, 0);
  res.fail_if(!unique_ok, "(d) decomposition not unique");

  // (e) return records.
  int records_ok = 0, records_bad = 0;
  for (std::size_t i = 0; i < a.strips.size() && records_ok < 12; i += 3) {
    const auto& s = a.strips[i];
    if (s.admissible != Strip::Admissible::yes) continue;
    try {
      const ReturnRecord rec = good_return_time(a, suitedetail::centroid(s.region), a.max_n);
      const bool inv = 0 <= rec.N1 && rec.N1 <= rec.N2 && rec.N2 <= rec.N0 && rec.N0 <= rec.window;
      ++records_ok;
      if (!inv) ++records_bad;
    } catch (const HorizonExceededError&) {
    } catch (const BoundaryHitError&) {
    }
  }
  res.fail_if(records_ok == 0, "(e) no return record could be computed");
  res.fail_if(records_bad > 0, "(e) a return record violates 0<=N1<=N2<=N0<=N");
  {
    Record r;
    r.add("check", res.name).add("concat_tested", concat_tested)
        .add("decompose_tested", decompose_tested)
        .add("return_records", records_ok);
    res.records.push_back(r);
  }
  res.seconds = suitedetail::now_seconds() - t0;
  res.fail_if(res.seconds >= 600.0, "runtime exceeded 10 min");
  return res;
}

// 7. Graph suite: synthetic eigenvalue oracles, truncation monotonicity,
// Vere-Jones loop-count stabilization, and the MME bound on the cat graph.
inline CheckResult check_graphs(const SuiteOptions& opt, const suitedetail::StripFixture& fixture) {
  CheckResult res;
  res.name = "graph-suite";
  const double t0 = suitedetail::now_seconds();
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;

  const MarkovGraph shift2 = make_word_graph({{0}, {1}}, {{0, 1}, {0, 1}}, {"a", "b"});
  const MarkovGraph golden = make_word_graph({{0}, {1}}, {{0, 1}, {0}}, {"a", "b"});

  const FiniteTruncation t2 = finite_truncation(shift2, 4);
  res.fail_if(std::fabs(t2.log_rho - std::log(2.0)) >= 1e-12, "2-shift entropy not log 2");

  const FiniteTruncation tg = finite_truncation(golden, 6);
  res.fail_if(std::fabs(tg.log_rho - std::log(phi)) >= 1e-9, "golden-mean entropy not log phi");
  const ParryChain chain = parry_measure(tg);
  const double pa = phi * phi / (1 + phi * phi);
  res.fail_if(std::fabs(chain.stationary[0] - pa) >= 1e-9, "Parry stationary vector off");
  res.fail_if(std::fabs(chain.entropy - chain.log_rho) >= 1e-9, "Parry entropy != log rho");

  // Monotone truncation entropy on every constructed graph.
  std::vector<const MarkovGraph*> graphs = {&shift2, &golden};
  MarkovGraph catg;
  if (!fixture.analysis.strips.empty()) {
    catg = build_word_graph(fixture.analysis);
    graphs.push_back(&catg);
  }
  for (const MarkovGraph* g : graphs) {
    double prev = -std::numeric_limits<double>::infinity();
    for (int n = 1; n <= (opt.quick ? 12 : 24); n += 1) {
      const double rho = finite_truncation(*g, n).log_rho;
      res.fail_if(rho < prev - 1e-12, "log rho not monotone in the truncation");
      prev = rho;
    }
  }

  // Normalized loop counts stabilize on irreducible aperiodic graphs.
  for (const auto& [g, rho] : {std::pair<const MarkovGraph*, double>{&shift2, 2.0},
                               std::pair<const MarkovGraph*, double>{&golden, phi}}) {
    const auto counts = loop_counts(*g, 0, 40);
    double lo = 1e300, hi = -1e300;
    for (int n = 20; n <= 40; ++n) {
      const double norm = counts[static_cast<std::size_t>(n - 1)].get_d() / std::pow(rho, n);
      lo = std::min(lo, norm);
      hi = std::max(hi, norm);
    }
    res.fail_if((hi - lo) / hi >= 0.10, "normalized loop counts vary by 10% or more");
  }

  // MME bound on the cat word graph.
  if (!fixture.analysis.strips.empty() && catg.vertex_count > 0) {
    const FiniteTruncation tc = finite_truncation(catg, 2 * fixture.analysis.max_n + 2);
    const ComponentReport rep = irreducible_components(tc);
    Record r;
    r.add("check", res.name).add("cat_graph_words", static_cast<long long>(catg.words.size()))
        .add("mme_bound", rep.mme_bound)
        .add("rects", static_cast<long long>(fixture.rects.size()));
    res.records.push_back(r);
    res.fail_if(rep.mme_bound > static_cast<int>(fixture.rects.size()),
                "MME bound exceeds the rectangle count");
  }
  res.seconds = suitedetail::now_seconds() - t0;
  return res;
}

// 8. Geometry kernel exactness: randomized clip identities and exact
// child-area additivity across the acceptance cylinder trees.
inline CheckResult check_geometry(const SuiteOptions& opt, const CylinderTree& cone_tree) {
  CheckResult res;
  res.name = "geometry-exactness";
  const double t0 = suitedetail::now_seconds();
  SplitMix64 rng(opt.seed ^ 0x9e3779b97f4a7c15ULL);
  const int trials = opt.quick ? 1000 : 10'000;
  auto random_point = [&rng]() {
    return Vec2{Rat(static_cast<long>(rng.below(280)) - 140, 7),
                Rat(static_cast<long>(rng.below(280)) - 140, 7)};
  };
  auto random_poly = [&]() {
    for (;;) {
      std::vector<Vec2> pts;
      for (int i = 0; i < 7; ++i) pts.push_back(random_point());
      const auto hull = convex_hull(pts);
      if (hull.size() >= 3) {
        auto r = make_polygon(hull);
        if (r.is_polygon()) return r;
      }
    }
  };
  int bad = 0;
  for (int t = 0; t < trials; ++t) {
    const auto p = random_poly();
    const auto q = random_poly();
    const auto pq = intersect_convex(p, q);
    if (!region_subset(pq, p) || !region_subset(pq, q)) ++bad;
    const auto A = random_point();
    auto B = random_point();
    if (A == B) continue;
    if (region_area(clip_left_of_line(p, A, B)) + region_area(clip_left_of_line(p, B, A)) !=
        region_area(p))
      ++bad;
    const auto pickr = [&rng]() {
      return Rat(static_cast<long>(rng.below(9)) - 4, static_cast<long>(rng.below(3)) + 1);
    };
    const AffineMap2 f{pickr(), pickr(), pickr(), pickr(), pickr(), pickr()};
    if (region_area(apply_affine(f, p)) != abs(f.det()) * region_area(p)) ++bad;
  }
  res.fail_if(bad > 0, std::to_string(bad) + " randomized geometry identities failed");
  {
    Record r;
    r.add("check", res.name).add("trials", trials).add("violations", bad);
    res.records.push_back(r);
  }

  // Exact child-area additivity at every node of the acceptance trees.
  PwaMap cat = gallery_map("cat");
  const CylinderTree cat_tree = enumerate_cylinders(cat, opt.quick ? 4 : 6, opt.budget);
  for (const CylinderTree* tree : {&cone_tree, &cat_tree}) {
    bool additive = !tree->truncated;
    for (const auto& node : tree->nodes) {
      if (node.depth == tree->depth) continue;
      Rat sum(0);
      for (const int c : node.children)
        sum += region_area(tree->nodes[static_cast<std::size_t>(c)].region);
      if (sum != region_area(node.region)) additive = false;
    }
    res.fail_if(!additive, "child-area additivity violated in an acceptance tree");
  }
  res.seconds = suitedetail::now_seconds() - t0;
  return res;
}

struct SuiteReport {
  std::vector<CheckResult> checks;
  bool all_pass = true;
  std::string record_text;  // canonical record output (for determinism checks)
};

// Runs checks 1..8 once; the determinism check (9) is byte-comparison of
// record_text across two runs with the same seed, done by the caller.
inline SuiteReport run_suite_once(const SuiteOptions& opt) {
  SuiteReport rep;
  CylinderTree cone_tree;
  suitedetail::StripFixture fixture;
  rep.checks.push_back(check_cone_exactness(opt, &cone_tree));
  rep.checks.push_back(check_cat_entropy(opt));
  rep.checks.push_back(check_multiplicity_bound(opt));
  rep.checks.push_back(check_lyapunov(opt));
  rep.checks.push_back(check_periodic(opt));
  rep.checks.push_back(check_strips(opt, fixture));
  rep.checks.push_back(check_graphs(opt, fixture));
  rep.checks.push_back(check_geometry(opt, cone_tree));

  std::ostringstream os;
  for (const auto& c : rep.checks) {
    rep.all_pass = rep.all_pass && c.pass;
    for (const auto& r : c.records) os << r.line() << '\n';
  }
  rep.record_text = os.str();
  return rep;
}

// Full suite: two identical runs feed the determinism criterion.
inline SuiteReport run_suite(const SuiteOptions& opt) {
  SuiteReport rep = run_suite_once(opt);
  const double t0 = suitedetail::now_seconds();
  const SuiteReport again = run_suite_once(opt);
  CheckResult det;
  det.name = "determinism";
  det.fail_if(again.record_text != rep.record_text,
              "record output differs between two runs with the same seed");
  {
    Record r;
    r.add("check", det.name).add("bytes", static_cast<long long>(rep.record_text.size()))
        .add("identical", again.record_text == rep.record_text);
    det.records.push_back(r);
  }
  det.seconds = suitedetail::now_seconds() - t0;
  rep.all_pass = rep.all_pass && det.pass;
  rep.checks.push_back(det);
  return rep;
}

}  // namespace pwadyn
