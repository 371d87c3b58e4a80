// Acceptance checks: one PASS/FAIL line per criterion.

#include "homnet/analysis.hpp"
#include "homnet/compiler.hpp"
#include "homnet/datasets.hpp"
#include "homnet/lovasz.hpp"
#include "homnet/training.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>

#include "oracles.hpp"

using namespace homnet;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

// Every pointed database over the graph schema with 1..3 values, up to isomorphism.
std::vector<PointedDatabase> small_patterns() {
  std::vector<PointedDatabase> out;
  std::set<std::string> seen;
  for (int n = 1; n <= 3; ++n)
    for (const auto& d : all_databases(graph_schema(), n)) {
      PointedDatabase p(d, 0);
      if (seen.insert(canonical_form(p)).second) out.push_back(p);
    }
  return out;
}

std::vector<Database> random_targets(int count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Database> out;
  for (int i = 0; i < count; ++i)
    out.push_back(random_database(graph_schema(), 1 + static_cast<int>(rng.below(6)), rng.uniform(0.1, 0.6), rng));
  return out;
}

Outcome compiler_soundness() {
  auto start = Clock::now();
  std::ostringstream d;
  std::size_t formulas = 0, points = 0, mismatches = 0, impure = 0;
  bool enough = true;
  for (const std::string target : {"max-dhn", "sum-dhn", "max-den", "sum-den", "mean-dhn"}) {
    auto suite = oracle::formula_suite(target);
    enough = enough && suite.size() >= 10;
    for (const auto& text : suite) {
      auto f = parse_formula(text);
      auto net = compile(f, parse_compile_target(target));
      EquivalenceConfig cfg;  // <= 3 values exhaustively, 500 random with <= 6 values
      cfg.seed = 1000 + formulas;
      auto rep = check_equivalence(*f, net, cfg);
      ++formulas;
      points += rep.points;
      mismatches += rep.mismatches;
      impure += rep.non_boolean;
      if (!rep.ok()) d << " [" << target << " " << text << ": " << rep.mismatches << " mismatches]";
    }
  }
  const double secs = since(start);
  d << " formulas=" << formulas << " points=" << points << " mismatches=" << mismatches
    << " non-boolean=" << impure << " seconds=" << secs;
  return {enough && mismatches == 0 && impure == 0 && secs < 600, d.str()};
}

Outcome lovasz_bases() {
  auto start = Clock::now();
  auto patterns = small_patterns();
  auto targets = random_targets(100, 7);
  std::size_t checks = 0, wrong = 0;
  for (const auto& f : patterns) {
    auto e = emb_from_hom_basis(f);
    auto h = hom_from_emb_basis(f);
    for (const auto& t : targets) {
      std::vector<Rational> via_e(static_cast<std::size_t>(t.size()), Rational(0)), via_h(via_e);
      for (const auto& term : e) {
        auto c = count_all_roots(term.pattern, t, MatchMode::Hom);
        for (int r = 0; r < t.size(); ++r) via_e[r] += term.coefficient * Rational(c[r]);
      }
      for (const auto& term : h) {
        auto c = count_all_roots(term.pattern, t, MatchMode::Embedding);
        for (int r = 0; r < t.size(); ++r) via_h[r] += term.coefficient * Rational(c[r]);
      }
      for (int r = 0; r < t.size(); ++r) {
        checks += 2;
        wrong += via_e[r] != Rational(oracle::brute_count(f.db, f.root, t, r, 2));
        wrong += via_h[r] != Rational(oracle::brute_count(f.db, f.root, t, r, 0));
      }
    }
  }
  const double secs = since(start);
  std::ostringstream d;
  d << " patterns=" << patterns.size() << " checks=" << checks << " wrong=" << wrong << " seconds=" << secs;
  return {wrong == 0 && secs < 120, d.str()};
}

Outcome partition_identity() {
  auto patterns = small_patterns();
  auto targets = random_targets(100, 11);
  std::size_t checks = 0, wrong = 0;
  for (const auto& f : patterns) {
    std::vector<PointedDatabase> quotients;
    for (const auto& p : set_partitions(f.db.size())) quotients.push_back(quotient(f, p));
    for (const auto& t : targets) {
      std::vector<std::uint64_t> sum(static_cast<std::size_t>(t.size()), 0);
      for (const auto& q : quotients) {
        auto c = count_all_roots(q, t, MatchMode::Injective);
        for (int r = 0; r < t.size(); ++r) sum[r] += c[r];
      }
      for (int r = 0; r < t.size(); ++r) {
        ++checks;
        wrong += sum[r] != oracle::brute_count(f.db, f.root, t, r, 0);
      }
    }
  }
  std::ostringstream d;
  d << " patterns=" << patterns.size() << " checks=" << checks << " wrong=" << wrong;
  return {wrong == 0, d.str()};
}

Outcome lt_network() {
  auto net = local_transitivity_dhn();
  Rng rng(13);
  std::size_t vertices = 0, wrong = 0;
  for (int i = 0; i < 1000; ++i) {
    auto g = random_database(graph_schema(), 1 + static_cast<int>(rng.below(10)), rng.uniform(0.05, 0.6), rng);
    auto trace = run_all(net, g);
    for (int v = 0; v < g.size(); ++v) {
      ++vertices;
      wrong += static_cast<bool>(trace.accept[v]) != oracle_local_transitivity(g, v);
    }
  }
  std::ostringstream d;
  d << " graphs=1000 vertices=" << vertices << " errors=" << wrong;
  return {wrong == 0, d.str()};
}

Outcome den_conversion() {
  Rng rng(17);
  std::size_t differing = 0;
  std::size_t hom_only = 0;
  for (int i = 0; i < 100; ++i) {
    auto net = oracle::random_den(rng, 2);
    auto conv = den_to_dhn_sum(net);
    bool all_hom = true;
    for (const auto& l : conv.layers)
      for (const auto& q : l.queries) all_hom = all_hom && q.mode == MatchMode::Hom;
    hom_only += all_hom;
    auto g = random_database(graph_schema(), 1 + static_cast<int>(rng.below(6)), rng.uniform(0.1, 0.6), rng);
    auto lam = oracle::random_embedding(g.size(), 2, rng);
    auto a = run_all(net, g, &lam);
    auto b = run_all(conv, g, &lam);
    differing += !(a.embeddings.back() == b.embeddings.back() && a.accept == b.accept);
  }
  std::ostringstream d;
  d << " graphs=100 differing=" << differing << " hom-only conversions=" << hom_only;
  return {differing == 0 && hom_only == 100, d.str()};
}

std::string run_summary(const ModelReport& m) {
  std::ostringstream s;
  char buf[160];
  std::snprintf(buf, sizeof buf, " %s: selected test F1=%.4f AUROC=%.4f (mean F1 %.4f +- %.4f)", m.model.c_str(),
                m.best().test.f1, m.best().test.auroc, m.test_f1_mean, m.test_f1_se);
  s << buf << " run seconds=[";
  for (std::size_t i = 0; i < m.runs.size(); ++i) s << (i ? "," : "") << static_cast<long>(m.runs[i].seconds);
  s << "]";
  return s.str();
}

const ModelReport& model(const ExperimentReport& r, const std::string& name) {
  for (const auto& m : r.models)
    if (m.model == name) return m;
  throw Error("report lacks model " + name);
}

Outcome lt_experiment(std::uint64_t seed, int log_every) {
  ExperimentConfig cfg;
  cfg.name = "lt";
  cfg.seed = seed;
  cfg.runs = 3;
  cfg.log_every = log_every;
  auto rep = run_experiment(cfg);
  std::cerr << rep.table();
  const auto& sum = model(rep, "sum-DHN");
  const auto& max = model(rep, "max-DHN");
  bool fast = true;
  for (const auto* m : {&sum, &max})
    for (const auto& r : m->runs) fast = fast && r.seconds < 90 * 60;
  bool pass = sum.best().test.f1 >= 0.95 && sum.best().test.auroc >= 0.98 &&
              max.best().test.f1 <= sum.best().test.f1 - 0.05 && fast;
  return {pass, run_summary(sum) + ";" + run_summary(max)};
}

Outcome sun_experiment(std::uint64_t seed, int log_every) {
  ExperimentConfig cfg;
  cfg.name = "sun";
  cfg.seed = seed;
  cfg.runs = 3;
  cfg.log_every = log_every;
  auto rep = run_experiment(cfg);
  std::cerr << rep.table();
  const auto& sum = model(rep, "sum-DHN");
  const auto& gin = model(rep, "GIN");
  bool pass = sum.best().test.f1 >= 0.98 && gin.best().test.f1 <= 0.85;
  return {pass, run_summary(sum) + ";" + run_summary(gin)};
}

Outcome dataset_integrity() {
  std::ostringstream d;
  bool pass = true;
  for (std::uint64_t seed : {0, 1, 2}) {
    auto lt = gen_local_transitivity(LtConfig{.seed = seed});
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < lt.examples.size(); ++i)
      wrong += lt.labels[i] != static_cast<int>(oracle::locally_transitive(lt.db, lt.examples[i]));
    pass = pass && lt.db.size() == 4000 && lt.db.num_facts() == 34000 && wrong == 0;
    d << " lt[" << seed << "]: " << lt.db.size() << " vertices, " << lt.db.num_facts() << " edges, " << lt.positives()
      << " positive, " << wrong << " label errors;";
    auto sun = gen_sun(SunConfig{.seed = seed});
    auto truth = eval_all(*builtin_formula("phi_sun"), sun.db);
    std::size_t swrong = 0;
    for (std::size_t i = 0; i < sun.examples.size(); ++i)
      swrong += truth[sun.examples[i]] != (sun.labels[i] == 1);
    const std::size_t pos = sun.positives(), neg = sun.examples.size() - pos;
    pass = pass && pos == 600 && neg == 600 && swrong == 0;
    d << " sun[" << seed << "]: " << pos << "/" << neg << " examples, " << swrong << " label errors;";
  }
  return {pass, d.str()};
}

Outcome numerics() {
  const double fnn = oracle::fnn_gradient_error(100, 1);
  const double ln = oracle::layer_norm_gradient_error(50, 2);
  const double bce = oracle::bce_gradient_error();
  double trainer = 0;
  trainer = std::max(trainer, oracle::trainer_gradient_error("sum", false, 3));
  trainer = std::max(trainer, oracle::trainer_gradient_error("max", false, 4));
  trainer = std::max(trainer, oracle::trainer_gradient_error("mean", false, 5));
  trainer = std::max(trainer, oracle::trainer_gradient_error("sum", true, 6));
  const Activation relu{ActivationKind::Relu}, star{ActivationKind::ReluStar};
  std::size_t identity_failures = 0, identity_checks = 0;
  for (long p = -40; p <= 40; ++p)
    for (long q = 1; q <= 12; ++q) {
      Rational x(p, q);
      ++identity_checks;
      identity_failures += activate(star, x) != activate(relu, x) - activate(relu, Rational(x - 1));
    }
  std::ostringstream d;
  d << " fnn=" << fnn << " layernorm=" << ln << " bce=" << bce << " trainer=" << trainer << " relu* identity "
    << identity_checks - identity_failures << "/" << identity_checks;
  const double worst = std::max({fnn, ln, bce, trainer});
  return {worst < 1e-4 && identity_failures == 0, d.str()};
}

Outcome static_analysis() {
  const int degree = 4, cap = 4;
  std::ostringstream d;
  bool pass = true;
  const std::vector<std::pair<std::string, std::string>> satisfiable{
      {"(E x x)", "max-dhn"},
      {"(exists (y) (and (E x y) (not (exists (z) (E y z)))))", "max-dhn"},
      {"(exists (y z) (and (E x y) (E y z) (E z x)))", "max-dhn"},
      {"(exists>= 2 (y) (E x y))", "sum-dhn"},
      {"(and (exists>= 2 (y) (E x y)) (not (exists>= 3 (y) (E x y))))", "sum-dhn"},
      {"(exists (y z) (and (E x y) (E y z) (not (E x z))))", "max-den"},
      {"(exists (y) (and (E x y) (neq x y)))", "sum-den"},
      {"(ratio>= 1/2 (y) (E y y) (E x y))", "mean-dhn"}};
  std::size_t found = 0;
  for (const auto& [text, target] : satisfiable) {
    auto f = parse_formula(text);
    auto net = compile(f, parse_compile_target(target));
    auto res = emptiness_bounded(net, degree, cap);
    bool ok = res.verdict == Verdict::Witness && run(net, *res.witness) && eval(*f, *res.witness) &&
              res.witness->db.size() <= cap && res.witness->db.max_degree() <= degree;
    found += ok;
    if (!ok) d << " [no verified witness for " << text << "]";
  }
  pass = pass && found == satisfiable.size();
  const std::vector<std::pair<std::string, std::string>> contradictions{
      {"(and (E x x) (not (E x x)))", "max-dhn"},
      {"(and (exists (y) (E x y)) (not (exists (y) (E x y))))", "max-dhn"},
      {"(and (exists>= 2 (y) (E x y)) (not (exists (y) (E x y))))", "sum-dhn"},
      {"(and (exists (y) (and (E x y) (neq x y))) (not (exists (y) (E x y))))", "max-den"}};
  std::size_t empty = 0;
  for (const auto& [text, target] : contradictions) {
    auto net = compile(parse_formula(text), parse_compile_target(target));
    auto res = emptiness_bounded(net, degree, cap);
    bool ok = res.verdict != Verdict::Witness;
    empty += ok;
    if (!ok) d << " [witness for contradiction " << text << "]";
  }
  pass = pass && empty == contradictions.size();
  auto two = compile(parse_formula("(exists>= 2 (y) (E x y))"), CompileTarget::SumDhn);
  auto one = compile(parse_formula("(exists (y) (E x y))"), CompileTarget::SumDhn);
  auto fwd = subsumption_bounded(two, one, degree, cap);
  auto rev = subsumption_bounded(one, two, degree, cap);
  bool rev_ok = rev.verdict == Verdict::Witness && rev.witness->db.rows_with(0, 0, rev.witness->root).size() == 1 &&
                run(one, *rev.witness) && !run(two, *rev.witness);
  pass = pass && fwd.verdict != Verdict::Witness && rev_ok;
  d << " witnesses " << found << "/" << satisfiable.size() << ", contradictions empty " << empty << "/"
    << contradictions.size() << ", exists>=2 vs exists: " << (fwd.verdict == Verdict::Witness ? "counterexample" : "none")
    << ", reversed: " << (rev_ok ? "out-degree-1 counterexample" : "missing");
  return {pass, d.str()};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::vector<int> only;
  std::uint64_t seed = 0;
  int log_every = 0;
  app.add_option("--only", only, "criteria to run (default: all)")->delimiter(',');
  app.add_option("--seed", seed, "experiment seed");
  app.add_option("--log-every", log_every, "training progress lines to stderr");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"compiler soundness", compiler_soundness},
      {"Lovasz bases", lovasz_bases},
      {"partition identity", partition_identity},
      {"local transitivity network", lt_network},
      {"DEN to DHN conversion", den_conversion},
      {"local transitivity experiment", [&] { return lt_experiment(seed, log_every); }},
      {"sun experiment", [&] { return sun_experiment(seed, log_every); }},
      {"dataset integrity", dataset_integrity},
      {"numerics", numerics},
      {"static analysis", static_analysis}};
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    auto start = Clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string(" error: ") + e.what()};
    }
    failures += !o.pass;
    char head[128];
    std::snprintf(head, sizeof head, "%s %2d %s (%.1f s):", o.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(),
                  since(start));
    std::cout << head << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
