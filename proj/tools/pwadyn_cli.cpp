// Command-line front end: validation, entropy and multiplicity estimates,
// manifold and orbit diagnostics, rectangle/strip/graph analysis, periodic
// point counts, and the reproducible acceptance suite.
//
// Exit codes: 0 success, 1 check failure, 2 usage error.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "pwadyn/graph.hpp"
#include "pwadyn/manifold.hpp"
#include "pwadyn/periodic.hpp"
#include "pwadyn/report.hpp"
#include "pwadyn/strips.hpp"
#include "pwadyn/suite.hpp"
#include "pwadyn/symdyn.hpp"

using namespace pwadyn;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Maps are taken from files or from the built-in gallery via `gallery:<name>`.
PwaMap load_map(const std::string& spec) {
  if (spec.rfind("gallery:", 0) == 0) return gallery_map(spec.substr(8));
  try {
    PwaMap m = parse_map_spec(read_file(spec));
    validate(m);
    return m;
  } catch (const ParseError& e) {
    throw std::runtime_error(spec + ": " + e.what());
  }
}

Vec2 parse_point_arg(const std::string& arg) {
  const auto comma = arg.find(',');
  if (comma == std::string::npos)
    throw std::runtime_error("expected point 'x,y', got '" + arg + "'");
  return {Rat::parse(arg.substr(0, comma)), Rat::parse(arg.substr(comma + 1))};
}

struct Output {
  OutputMode mode = OutputMode::records;
  std::vector<Record> records;
  void flush() { emit(std::cout, records, mode); }
};

int run_cli(int argc, char** argv) {
  CLI::App app{"exact-arithmetic analysis of piecewise affine surface maps"};
  app.require_subcommand(1);

  std::string out_mode = "records";
  app.add_option("--out", out_mode, "output mode: records|table")
      ->check(CLI::IsMember({"records", "table"}));

  std::string map_spec, rects_path, graph_path, point_arg;
  std::uint64_t seed = 0;
  bool have_seed = false;
  std::size_t budget = 1'000'000;
  int depth = 6, horizon = 6, maxn = 6, nmax = 8, samples = 400, truncate = 20, length = 50;
  double l0 = 0.125, theta0 = 0.3, h_entropy = -1.0;
  std::string direction = "s", vertex;
  double cluster_factor = 10.0;
  int max_clusters = 6;
  bool quick = false;

  const auto add_map = [&](CLI::App* sub) {
    sub->add_option("--map", map_spec, "map file or gallery:<name>")->required();
  };
  const auto add_seed = [&](CLI::App* sub, bool required) {
    auto* o = sub->add_option("--seed", seed, "PRNG seed");
    o->each([&](const std::string&) { have_seed = true; });
    if (required) o->required();
  };

  auto* validate_cmd = app.add_subcommand("validate", "run the map validity checks");
  add_map(validate_cmd);

  auto* entropy_cmd = app.add_subcommand("entropy", "cylinder counts and entropy estimators");
  add_map(entropy_cmd);
  entropy_cmd->add_option("--depth", depth, "enumeration depth")->required();
  entropy_cmd->add_option("--budget", budget, "node budget");

  auto* mult_cmd = app.add_subcommand("mult", "multiplicity profile");
  add_map(mult_cmd);
  mult_cmd->add_option("--depth", depth, "profile depth")->required();
  mult_cmd->add_option("--budget", budget, "node budget");

  auto* manifold_cmd = app.add_subcommand("manifold", "finite-depth manifold approximation");
  add_map(manifold_cmd);
  manifold_cmd->add_option("--point", point_arg, "base point x,y (exact rationals)")->required();
  manifold_cmd->add_option("--depth", depth, "approximation depth")->required();
  manifold_cmd->add_option("--direction", direction, "s|u")->check(CLI::IsMember({"s", "u"}));

  auto* diag_cmd = app.add_subcommand("diag", "sampled reach/angle diagnostics");
  add_map(diag_cmd);
  diag_cmd->add_option("--samples", samples, "sample count")->required();
  diag_cmd->add_option("--depth", depth, "manifold depth")->required();
  add_seed(diag_cmd, true);

  auto* rects_cmd = app.add_subcommand("rects", "propose a Markov rectangle array");
  add_map(rects_cmd);
  rects_cmd->add_option("--samples", samples, "sample count")->required();
  rects_cmd->add_option("--depth", depth, "manifold depth")->required();
  rects_cmd->add_option("--l0", l0, "reach threshold");
  rects_cmd->add_option("--theta0", theta0, "angle threshold");
  rects_cmd->add_option("--cluster-factor", cluster_factor,
                        "cluster cells have diameter l0 / this factor");
  rects_cmd->add_option("--max-clusters", max_clusters, "largest clusters kept");
  add_seed(rects_cmd, true);

  auto* strips_cmd = app.add_subcommand("strips", "detect hyperbolic strips");
  add_map(strips_cmd);
  strips_cmd->add_option("--rects", rects_path, "rectangle file")->required();
  strips_cmd->add_option("--maxn", maxn, "maximal strip length")->required();
  strips_cmd->add_option("--budget", budget, "node budget");

  auto* return_cmd = app.add_subcommand("return", "good return time of a point");
  add_map(return_cmd);
  return_cmd->add_option("--rects", rects_path, "rectangle file")->required();
  return_cmd->add_option("--point", point_arg, "point x,y")->required();
  return_cmd->add_option("--horizon", horizon, "search horizon")->required();
  return_cmd->add_option("--budget", budget, "node budget");

  auto* graph_cmd = app.add_subcommand("graph", "word graph from a strips file");
  graph_cmd->add_option("--strips", graph_path, "strips file")->required();
  graph_cmd->add_option("--truncate", truncate, "largest loop-truncation level");

  auto* loops_cmd = app.add_subcommand("loops", "exact loop counts at a vertex");
  loops_cmd->add_option("--graph", graph_path, "graph file")->required();
  loops_cmd->add_option("--vertex", vertex, "vertex '<word>:<i>'")->required();
  loops_cmd->add_option("--nmax", nmax, "maximal loop length")->required();

  auto* sample_cmd = app.add_subcommand("sample", "sample a Parry-measure word");
  sample_cmd->add_option("--graph", graph_path, "graph file")->required();
  sample_cmd->add_option("--len", length, "sample length")->required();
  add_seed(sample_cmd, true);
  sample_cmd->add_option("--truncate", truncate, "loop-truncation level");

  auto* periodic_cmd = app.add_subcommand("periodic", "exact periodic point counts");
  periodic_cmd->set_help_flag("--help", "print help");  // frees -h for the entropy knob
  add_map(periodic_cmd);
  periodic_cmd->add_option("--nmax", nmax, "maximal period")->required();
  periodic_cmd->add_option("--h", h_entropy, "entropy for the growth normalization");
  periodic_cmd->add_option("--budget", budget, "node budget");

  auto* suite_cmd = app.add_subcommand("suite", "run the acceptance experiments");
  suite_cmd->add_flag("--quick", quick, "reduced depths");
  add_seed(suite_cmd, false);
  suite_cmd->add_option("--budget", budget, "node budget");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  Output out;
  out.mode = out_mode == "table" ? OutputMode::table : OutputMode::records;

  if (validate_cmd->parsed()) {
    PwaMap m = load_map(map_spec);
    ValidationReport rep = validate(m);
    for (const auto& c : rep.checks) {
      Record r;
      r.add(c.name, c.pass);
      for (std::size_t i = 0; i < c.witnesses.size(); ++i)
        r.add("witness" + std::to_string(i), c.witnesses[i]);
      out.records.push_back(r);
    }
    out.flush();
    return 0;
  }

  if (entropy_cmd->parsed()) {
    PwaMap m = load_map(map_spec);
    const auto counts = count_cylinders(m, depth, budget);
    if (counts.truncated) {
      Record r;
      r.add("truncated", true).add("budget", static_cast<unsigned long long>(budget));
      out.records.push_back(r);
      out.flush();
      return 1;
    }
    const auto est = entropy_estimates(counts);
    for (int k = 1; k <= depth; ++k) {
      Record r;
      r.add("n", k).add("c_n", counts.counts[static_cast<std::size_t>(k - 1)]);
      r.add("boundary", counts.boundary_counts[static_cast<std::size_t>(k - 1)]);
      r.add("avg", est.avg[static_cast<std::size_t>(k - 1)]);
      if (k < depth) r.add("ratio", est.ratio[static_cast<std::size_t>(k - 1)]);
      out.records.push_back(r);
    }
    out.flush();
    return 0;
  }

  if (mult_cmd->parsed()) {
    PwaMap m = load_map(map_spec);
    const auto prof = multiplicity_profile(SystemView(m), depth, budget);
    for (int k = 1; k <= depth; ++k) {
      Record r;
      r.add("n", k).add("max_mult", prof.max_mult[static_cast<std::size_t>(k - 1)]);
      r.add("witness", prof.witness[static_cast<std::size_t>(k - 1)].str());
      out.records.push_back(r);
    }
    out.flush();
    return 0;
  }

  if (manifold_cmd->parsed()) {
    PwaMap m = load_map(map_spec);
    const Vec2 x = parse_point_arg(point_arg);
    const auto dir = direction == "u" ? ManifoldDirection::unstable : ManifoldDirection::stable;
    const auto ma = manifold_region(SystemView(m), x, depth, dir);
    Record r;
    r.add("direction", direction).add("depth", ma.depth);
    r.add("width", ma.width).add("decay_log_rate", ma.decay_log_rate);
    r.add("axis_a", ma.long_axis.a.str()).add("axis_b", ma.long_axis.b.str());
    r.add("area", region_area(ma.region));
    out.records.push_back(r);
    out.flush();
    return 0;
  }

  if (diag_cmd->parsed()) {
    PwaMap m = load_map(map_spec);
    const auto st = orbit_statistics(m, samples, depth, seed);
    Record r;
    r.add("samples", st.requested).add("evaluated", st.evaluated);
    r.add("boundary_skipped", st.boundary_skipped).add("alpha_degenerate", st.alpha_degenerate);
    r.add("distortion", st.distortion);
    const char* qn[] = {"min", "q25", "median", "q75", "max"};
    for (std::size_t i = 0; i < st.rho_quantiles.size(); ++i)
      r.add(std::string("rho_") + qn[i], st.rho_quantiles[i]);
    for (std::size_t i = 0; i < st.alpha_quantiles.size(); ++i)
      r.add(std::string("alpha_") + qn[i], st.alpha_quantiles[i]);
    out.records.push_back(r);
    out.flush();
    return 0;
  }

  if (rects_cmd->parsed()) {
    PwaMap m = load_map(map_spec);
    ProposeOptions popt;
    popt.cluster_factor = cluster_factor;
    popt.max_clusters = max_clusters;
    const auto rects = propose_rectangles(m, samples, depth, l0, theta0, seed, popt);
    std::cout << format_rectangles(rects);
    return rects.empty() ? 1 : 0;
  }

  if (strips_cmd->parsed()) {
    PwaMap m = load_map(map_spec);
    const auto rects = parse_rectangles(read_file(rects_path));
    StripAnalysis a = detect_strips(m, rects, maxn, budget);
    admissible_filter(a);
    int strip_idx = 0;
    for (const auto& s : a.strips) {
      Record r;
      r.add("strip", strip_idx++);
      r.add("n", s.n).add("start", a.rects[static_cast<std::size_t>(s.start_rect)].id);
      r.add("end", a.rects[static_cast<std::size_t>(s.end_rect)].id);
      r.add("admissible", admissible_str(s.admissible));
      r.add("cert", s.manifold_sides_by_provenance);
      r.add("word", a.word_str(s.ext_letters));
      out.records.push_back(r);
    }
    Record r;
    r.add("strips", static_cast<unsigned long long>(a.strips.size()));
    r.add("budget_exceeded", a.budget_exceeded);
    out.records.push_back(r);
    out.flush();
    return a.budget_exceeded ? 1 : 0;
  }

  if (return_cmd->parsed()) {
    PwaMap m = load_map(map_spec);
    const auto rects = parse_rectangles(read_file(rects_path));
    StripAnalysis a = detect_strips(m, rects, horizon, budget);
    admissible_filter(a);
    const Vec2 x = parse_point_arg(point_arg);
    try {
      const ReturnRecord rec = good_return_time(a, x, horizon);
      Record r;
      r.add("tau", rec.tau).add("window", rec.window);
      r.add("N0", rec.N0).add("N1", rec.N1).add("N2", rec.N2);
      std::string times;
      for (std::size_t i = 0; i < rec.tau_iterates.size(); ++i)
        times += (i ? "," : "") + std::to_string(rec.tau_iterates[i]);
      r.add("tau_iterates", times);
      std::string adm;
      for (std::size_t i = 0; i < rec.admissible_times.size(); ++i)
        adm += (i ? "," : "") + std::to_string(rec.admissible_times[i]);
      r.add("admissible_times", adm.empty() ? "-" : adm);
      r.add("heuristic", rec.control_heuristic);
      out.records.push_back(r);
      out.flush();
      return 0;
    } catch (const HorizonExceededError& e) {
      Record r;
      r.add("tau", "horizon-exceeded").add("horizon", horizon).add("detail", e.what());
      out.records.push_back(r);
      out.flush();
      return 1;
    }
  }

  // Graph inputs: either a `word`/`follow` graph file or the record output
  // of the `strips` subcommand (auto-detected).
  const auto load_graph = [&](const std::string& path) {
    const std::string text = read_file(path);
    const auto first = text.find_first_not_of(" \t\r\n#");
    if (first != std::string::npos && text.compare(first, 5, "strip") == 0)
      return word_graph_from_strips_records(text);
    return parse_word_graph(text);
  };

  if (graph_cmd->parsed()) {
    const MarkovGraph g = load_graph(graph_path);
    {
      Record r;
      std::size_t edges = 0;
      for (int v = 0; v < g.vertex_count; ++v) edges += g.out_edges(v).size();
      r.add("words", static_cast<unsigned long long>(g.words.size()));
      r.add("vertices", g.vertex_count).add("edges", static_cast<unsigned long long>(edges));
      out.records.push_back(r);
    }
    for (int n = 1; n <= truncate; ++n) {
      const FiniteTruncation t = finite_truncation(g, n);
      const ComponentReport rep = irreducible_components(t);
      Record r;
      r.add("n", n).add("entropy_ge", t.log_rho);
      r.add("vertices", static_cast<unsigned long long>(t.vertices.size()));
      r.add("components", static_cast<unsigned long long>(rep.components.size()));
      r.add("mme_bound", rep.mme_bound);
      out.records.push_back(r);
    }
    out.flush();
    return 0;
  }

  if (loops_cmd->parsed()) {
    const MarkovGraph g = load_graph(graph_path);
    const auto colon = vertex.rfind(':');
    if (colon == std::string::npos) throw std::runtime_error("vertex must be '<word>:<i>'");
    const std::string wname = vertex.substr(0, colon);
    const int idx = std::atoi(vertex.substr(colon + 1).c_str());
    int wid = -1;
    for (std::size_t w = 0; w < g.word_names.size(); ++w)
      if (g.word_names[w] == wname) wid = static_cast<int>(w);
    if (wid < 0) throw std::runtime_error("unknown word '" + wname + "'");
    const auto counts = loop_counts(g, g.vertex(wid, idx), nmax);
    for (int n = 1; n <= nmax; ++n) {
      Record r;
      r.add("n", n).add("loops", counts[static_cast<std::size_t>(n - 1)].get_str());
      out.records.push_back(r);
    }
    out.flush();
    return 0;
  }

  if (sample_cmd->parsed()) {
    const MarkovGraph g = load_graph(graph_path);
    FiniteTruncation t = finite_truncation(g, truncate);
    if (!t.irreducible) {
      // Sample from the maximal-entropy irreducible component.
      const ComponentReport rep = irreducible_components(t);
      std::size_t best = 0;
      double best_rho = -std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < rep.components.size(); ++c)
        if (rep.log_rho[c] > best_rho) {
          best_rho = rep.log_rho[c];
          best = c;
        }
      if (rep.components.empty()) throw std::runtime_error("empty truncation, nothing to sample");
      const auto& sel = rep.components[best];
      std::vector<int> local(t.adjacency.size(), -1);
      for (std::size_t i = 0; i < sel.size(); ++i)
        local[static_cast<std::size_t>(sel[i])] = static_cast<int>(i);
      FiniteTruncation sub;
      sub.loop_bound = t.loop_bound;
      for (const int v : sel) sub.vertices.push_back(t.vertices[static_cast<std::size_t>(v)]);
      sub.adjacency.assign(sel.size(), {});
      sub.is_base.assign(sel.size(), false);
      for (std::size_t i = 0; i < sel.size(); ++i)
        for (const int u : t.adjacency[static_cast<std::size_t>(sel[i])])
          if (local[static_cast<std::size_t>(u)] >= 0)
            sub.adjacency[i].push_back(local[static_cast<std::size_t>(u)]);
      sub.irreducible = true;
      t = std::move(sub);
    }
    const ParryChain chain = parry_measure(t);
    const auto path = sample_orbit(chain, length, seed);
    const auto letters = project_letters(g, chain, path);
    Record r;
    std::string word;
    for (std::size_t i = 0; i < letters.size(); ++i)
      word += (i ? "," : "") + std::to_string(letters[i]);
    r.add("len", static_cast<unsigned long long>(letters.size()));
    r.add("entropy", chain.entropy).add("period", chain.period);
    r.add("letters", word);
    out.records.push_back(r);
    out.flush();
    return 0;
  }

  if (periodic_cmd->parsed()) {
    PwaMap m = load_map(map_spec);
    const auto reports = periodic_analysis(m, nmax, budget);
    std::vector<std::uint64_t> counts;
    for (const auto& rep : reports) counts.push_back(rep.count());
    const GrowthReport growth = growth_report(counts, h_entropy >= 0 ? h_entropy : 0.0);
    for (int n = 1; n <= nmax; ++n) {
      const auto& rep = reports[static_cast<std::size_t>(n - 1)];
      Record r;
      r.add("n", n).add("count", rep.count());
      r.add("families", static_cast<unsigned long long>(rep.families.size()));
      r.add("cyclic_words", rep.cyclic_words_closed);
      if (h_entropy >= 0) r.add("normalized", growth.normalized[static_cast<std::size_t>(n - 1)]);
      out.records.push_back(r);
    }
    if (h_entropy >= 0) {
      Record r;
      r.add("trailing_min", growth.trailing_min);
      out.records.push_back(r);
    }
    out.flush();
    return 0;
  }

  if (suite_cmd->parsed()) {
    SuiteOptions sopt;
    sopt.quick = quick;
    if (have_seed) sopt.seed = seed;
    sopt.budget = budget;
    const SuiteReport rep = run_suite(sopt);
    std::cout << rep.record_text;
    for (const auto& c : rep.checks) {
      Record r;
      r.add("criterion", c.name).add("pass", c.pass).add("seconds", c.seconds);
      std::cout << r.line() << '\n';
    }
    Record summary;
    summary.add("suite", rep.all_pass ? "pass" : "fail");
    std::cout << summary.line() << '\n';
    return rep.all_pass ? 0 : 1;
  }

  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
