#include "homnet/compiler.hpp"
#include "homnet/datasets.hpp"

#include <doctest.h>

#include "oracles.hpp"

using namespace homnet;

namespace {

EquivalenceConfig quick(std::uint64_t seed, const Schema& schema = graph_schema()) {
  EquivalenceConfig c;
  c.schema = schema;
  c.exhaustive_size = 2;
  c.max_size = 5;
  c.samples = 60;
  c.seed = seed;
  return c;
}

void check_accepts(const Dhn<Rational>& net, const Formula& f, const Schema& schema, std::uint64_t seed, int trials = 100) {
  Rng rng(seed);
  for (int t = 0; t < trials; ++t) {
    auto d = random_database(schema, 1 + static_cast<int>(rng.below(5)), 0.35, rng);
    auto trace = run_all(net, d);
    auto truth = eval_all(f, d);
    for (int v = 0; v < d.size(); ++v) CHECK(static_cast<bool>(trace.accept[v]) == truth[v]);
  }
}

}  // namespace

TEST_CASE("HML to max-DHN") {
  const Schema sp{{"E", 2}, {"P", 1}};
  auto p = parse_formula("(P x)");
  auto net = compile_hml_max(*p);
  CHECK(is_simple(net));
  CHECK(uses_only(net, Aggregation::Max));
  Rng rng(101);
  for (int t = 0; t < 100; ++t) {
    auto d = random_database(sp, 1 + static_cast<int>(rng.below(5)), 0.3, rng);
    auto trace = run_all(net, d);
    for (int v = 0; v < d.size(); ++v) {
      const int args[1] = {v};
      CHECK(static_cast<bool>(trace.accept[v]) == d.contains(*d.relation_id("P"), args));
    }
  }
  auto sinks = parse_formula("(not (exists (y) (E x y)))");
  auto sn = compile_hml_max(*sinks);
  Rng r2(103);
  for (int t = 0; t < 50; ++t) {
    auto d = random_database(graph_schema(), 5, 0.25, r2);
    auto trace = run_all(sn, d);
    for (int v = 0; v < d.size(); ++v) CHECK(static_cast<bool>(trace.accept[v]) == d.rows_with(0, 0, v).empty());
  }
  auto deep = parse_formula("(exists (y) (and (E x y) (exists (z) (and (E y z) (not (exists (w) (E z w)))))))");
  auto order = subformula_order(deep);
  auto dn = compile_hml_max(*deep);
  CHECK(dn.layers.size() == order.size());
  for (const auto& l : dn.layers) CHECK(l.out_dim() == static_cast<Eigen::Index>(order.size()));
  CHECK(check_equivalence(*deep, dn, quick(1)).ok());
  CHECK_THROWS_AS(compile_hml_max(*parse_formula("(exists>= 2 (y) (E x y))")), Error);
}

TEST_CASE("GHML- to sum-DHN") {
  auto two = parse_formula("(exists>= 2 (y) (E x y))");
  auto net = compile_ghmlminus_sum(*two);
  CHECK(is_simple(net));
  CHECK(is_connected(net));
  Rng rng(107);
  for (int t = 0; t < 100; ++t) {
    auto d = random_database(graph_schema(), 1 + static_cast<int>(rng.below(6)), 0.35, rng);
    auto trace = run_all(net, d);
    for (int v = 0; v < d.size(); ++v) CHECK(static_cast<bool>(trace.accept[v]) == (d.rows_with(0, 0, v).size() >= 2));
  }
  auto one = parse_formula("(exists>= 1 (y z) (and (E x y) (E z y)))");
  auto a = compile_ghmlminus_sum(*one);
  auto b = compile_hml_max(*parse_formula("(exists (y z) (and (E x y) (E z y)))"));
  Rng r2(109);
  for (int t = 0; t < 50; ++t) {
    auto d = random_database(graph_schema(), 5, 0.3, r2);
    CHECK(run_all(a, d).accept == run_all(b, d).accept);
  }
  CHECK_THROWS_AS(compile_ghmlminus_sum(*parse_formula("(exists (y) (and (E x y) (neq x y)))")), Error);
}

TEST_CASE("strict EML to DENs") {
  CHECK(single_value_databases(graph_schema()).size() == 2);
  auto f = parse_formula("(exists (y) (and (E x y) (neq x y)))");
  auto s = strictify(f, StrictifyOptions{.schema = graph_schema()});
  for (auto target : {CompileTarget::MaxDen, CompileTarget::SumDen}) {
    auto net = target == CompileTarget::MaxDen ? compile_eml_max_den(*s) : compile_eml_sum_den(*s);
    check_accepts(net, *f, graph_schema(), 113);
    CHECK_THROWS_AS(target == CompileTarget::MaxDen ? compile_eml_max_den(*f) : compile_eml_sum_den(*f), Error);

    auto strict_sun = strictify(builtin_formula("phi_sun"), StrictifyOptions{.undirected = true, .schema = graph_schema()});
    auto sun = target == CompileTarget::MaxDen ? compile_eml_max_den(*strict_sun) : compile_eml_sum_den(*strict_sun);
    auto data = gen_sun(SunConfig{.seed = 5, .positives = 1, .negatives = 1, .max_decorations = 0});
    auto trace = run_all(sun, data.db);
    for (std::size_t i = 0; i < data.examples.size(); ++i)
      CHECK(static_cast<bool>(trace.accept[data.examples[i]]) == (data.labels[i] == 1));
  }
}

TEST_CASE("RHML to mean-DHN") {
  auto tri = builtin_formula("triangle_ratio");
  auto net = compile_rhml_mean(*tri);
  auto loops = Database(graph_schema(), {{"E", {"a", "b"}}, {"E", {"b", "c"}}, {"E", {"c", "a"}}, {"E", {"a", "a"}},
                                         {"E", {"b", "b"}}, {"E", {"c", "c"}}});
  CHECK(run(net, PointedDatabase(loops, "a")));
  auto lonely = Database(graph_schema(), {}, {"v"});
  CHECK(run(compile_rhml_mean(*parse_formula("(ratio>= 1/2 (y) (E y y) (E x y))")), PointedDatabase(lonely, "v")));
  CHECK_FALSE(run(compile_rhml_mean(*parse_formula("(ratio> 1/2 (y) (E y y) (E x y))")), PointedDatabase(lonely, "v")));
  check_accepts(net, *tri, graph_schema(), 127, 50);
}

TEST_CASE("compiled suites agree with the evaluator") {
  for (const std::string target : {"max-dhn", "sum-dhn", "max-den", "sum-den", "mean-dhn"}) {
    for (const auto& text : oracle::formula_suite(target)) {
      CAPTURE(target);
      CAPTURE(text);
      auto f = parse_formula(text);
      auto net = compile(f, parse_compile_target(target));
      auto rep = check_equivalence(*f, net, quick(7));
      CHECK(rep.mismatches == 0);
      CHECK(rep.non_boolean == 0);
      CHECK(to_json(compile(f, parse_compile_target(target))).dump() == to_json(net).dump());
    }
  }
}

TEST_CASE("corrupted weights are detected") {
  auto f = parse_formula("(exists>= 2 (y) (E x y))");
  auto net = compile_ghmlminus_sum(*f);
  // Shift the bias of the counting coordinate.
  auto& comb = std::get<Fnn<Rational>>(net.layers.back().combine);
  auto& bias = comb.layers.front().bias;
  bias(bias.size() - 1) += 1;
  EquivalenceConfig c;
  c.exhaustive_size = 0;
  c.samples = 500;
  c.seed = 9;
  auto rep = check_equivalence(*f, net, c);
  CHECK(rep.mismatches >= 1);
  CHECK_FALSE(rep.disagreements.empty());
}

TEST_CASE("exhaustive sweep size") {
  std::size_t n3 = all_databases(graph_schema(), 3).size();
  CHECK(n3 == 512);
  EquivalenceConfig c;
  c.exhaustive_size = 3;
  c.samples = 0;
  auto rep = check_equivalence(*parse_formula("(E x x)"), compile(parse_formula("(E x x)"), CompileTarget::MaxDhn), c);
  CHECK(rep.databases == 2 + 16 + 512);
  CHECK(rep.points == 2 * 1 + 16 * 2 + 512 * 3);
}

TEST_CASE("local transitivity network against the evaluator") {
  auto net = local_transitivity_dhn();
  auto rep = check_equivalence(*builtin_formula("local_transitivity"), net, quick(11));
  CHECK(rep.ok());
}
