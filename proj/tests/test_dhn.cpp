#include "homnet/compiler.hpp"
#include "homnet/datasets.hpp"
#include "homnet/dhn.hpp"

#include <doctest.h>

#include "oracles.hpp"

using namespace homnet;

namespace {

Database graph(const std::vector<std::pair<std::string, std::string>>& edges, const std::vector<std::string>& extra = {}) {
  std::vector<Fact> facts;
  for (const auto& [a, b] : edges) facts.push_back({"E", {a, b}});
  return Database(graph_schema(), facts, extra);
}

const Activation kIdentity{ActivationKind::Identity};

Fnn<Rational> identity_fnn(Eigen::Index d) {
  return Fnn<Rational>({AffineLayer<Rational>{Matrix<Rational>::Identity(d, d), RowVector<Rational>::Zero(d), kIdentity}});
}

HomQuery<Rational> ones_query(const PointedDatabase& p, Aggregation agg, Eigen::Index in, MatchMode mode = MatchMode::Hom) {
  HomQuery<Rational> q{p, {}, agg, mode};
  for (int v = 0; v < p.db.size(); ++v) q.transforms.push_back(constant_transform<Rational>(in, RowVector<Rational>::Ones(1)));
  return q;
}

}  // namespace

TEST_CASE("query semantics") {
  auto edge = single_edge_pattern(graph_schema());
  auto sink = graph({{"a", "b"}});
  Matrix<Rational> none(2, 0);
  CHECK(eval_query(ones_query(edge, Aggregation::Max, 0), sink, none, sink.value_id("b"))(0) == 0);
  CHECK(eval_query(ones_query(edge, Aggregation::Mean, 0), sink, none, sink.value_id("b"))(0) == 0);

  Matrix<Rational> lam(2, 2);
  lam << Rational(1, 2), Rational(3), Rational(-1), Rational(7, 3);
  HomQuery<Rational> self{single_vertex_pattern(graph_schema()), {identity_transform<Rational>(2)}, Aggregation::Sum,
                          MatchMode::Hom};
  CHECK(eval_query(self, sink, lam, 1) == lam.row(1));

  auto path = PointedDatabase(graph({{"v1", "v2"}, {"v2", "v3"}}), "v1");
  auto tour = graph({{"1", "2"}, {"2", "3"}, {"1", "3"}});
  Matrix<Rational> empty(3, 0);
  CHECK(eval_query(ones_query(path, Aggregation::Sum, 0), tour, empty, 0)(0) == 1);
}

TEST_CASE("sum query with unit transforms counts homomorphisms") {
  Rng rng(41);
  auto catalog = pattern_catalog_lt();
  for (int t = 0; t < 20; ++t) {
    auto d = random_database(graph_schema(), 6, 0.3, rng);
    Matrix<Rational> empty(d.size(), 0);
    for (const auto& p : catalog) {
      auto q = ones_query(p, Aggregation::Sum, 0);
      auto counts = count_all_roots(p, d, MatchMode::Hom);
      for (int r = 0; r < d.size(); ++r) CHECK(eval_query(q, d, empty, r)(0) == Rational(counts[r]));
    }
  }
}

TEST_CASE("layers compose queries") {
  Rng rng(43);
  auto d = random_database(graph_schema(), 5, 0.4, rng);
  auto lam = oracle::random_embedding(d.size(), 2, rng);
  DhnLayer<Rational> copy;
  copy.queries = {HomQuery<Rational>{single_vertex_pattern(graph_schema()), {identity_transform<Rational>(2)},
                                     Aggregation::Sum, MatchMode::Hom}};
  copy.combine = identity_fnn(2);
  CHECK(apply_layer(copy, d, lam) == lam);

  auto net = oracle::random_den(rng, 2);
  const auto& layer = net.layers[0];
  auto out = apply_layer(layer, d, lam);
  const auto& comb = std::get<Fnn<Rational>>(layer.combine);
  for (int r = 0; r < d.size(); ++r) {
    RowVector<Rational> cat(0);
    for (const auto& q : layer.queries) {
      auto part = eval_query(q, d, lam, r);
      RowVector<Rational> next(cat.size() + part.size());
      next << cat, part;
      cat = next;
    }
    CHECK(comb.forward(cat) == out.row(r));
  }
  // A zero-dimensional first layer ignores the input.
  auto lt = local_transitivity_dhn();
  auto d2 = graph({{"a", "b"}, {"b", "c"}});
  Matrix<Rational> empty(d2.size(), 0);
  CHECK(run_all(lt, d2).accept == run_all(lt, d2, &empty).accept);
}

TEST_CASE("hand-built local transitivity network") {
  auto net = local_transitivity_dhn();
  CHECK(is_simple(net));
  CHECK(uses_only(net, Aggregation::Sum));
  auto tour = graph({{"1", "2"}, {"2", "3"}, {"1", "3"}});
  CHECK(run(net, PointedDatabase(tour, "1")));
  auto path = graph({{"a", "b"}, {"b", "c"}});
  CHECK_FALSE(run(net, PointedDatabase(path, "a")));
  Rng rng(47);
  for (int t = 0; t < 100; ++t) {
    auto d = random_database(graph_schema(), 1 + static_cast<int>(rng.below(7)), 0.35, rng);
    auto trace = run_all(net, d);
    for (int v = 0; v < d.size(); ++v) CHECK(static_cast<bool>(trace.accept[v]) == oracle::locally_transitive(d, v));
  }
}

TEST_CASE("unsatisfiable classifier rejects everything") {
  auto net = local_transitivity_dhn();
  net.classifier.cmp = Comparison::Greater;
  net.classifier.threshold = 2;
  Rng rng(53);
  for (int t = 0; t < 20; ++t) {
    auto d = random_database(graph_schema(), 5, 0.4, rng);
    for (char a : run_all(net, d).accept) CHECK_FALSE(a);
  }
}

TEST_CASE("validation catches shape errors") {
  auto net = local_transitivity_dhn();
  net.layers[1].queries[0].transforms[0] = identity_transform<Rational>(3);
  CHECK_THROWS_AS(validate(net), Error);
  auto bad = local_transitivity_dhn();
  bad.classifier.coordinate = 5;
  CHECK_THROWS_AS(validate(bad), Error);
}

TEST_CASE("isomorphism invariance and locality") {
  Rng rng(59);
  for (int t = 0; t < 30; ++t) {
    auto net = oracle::random_den(rng, 1);
    auto d = random_database(graph_schema(), 5, 0.4, rng);
    auto lam = oracle::random_embedding(d.size(), 1, rng);
    // Rename values in reverse order.
    std::vector<Fact> facts;
    for (auto f : d.facts()) {
      for (auto& a : f.args) a = "z" + std::to_string(9 - std::stoi(a));
      facts.push_back(f);
    }
    std::vector<std::string> extra;
    for (const auto& v : d.values()) extra.push_back("z" + std::to_string(9 - std::stoi(v)));
    Database renamed(graph_schema(), facts, extra);
    Matrix<Rational> lam2(d.size(), 1);
    for (int v = 0; v < d.size(); ++v) lam2(renamed.value_id("z" + std::to_string(9 - std::stoi(d.value(v)))), 0) = lam(v, 0);
    auto a = run_all(net, d, &lam);
    auto b = run_all(net, renamed, &lam2);
    for (int v = 0; v < d.size(); ++v) {
      int w = renamed.value_id("z" + std::to_string(9 - std::stoi(d.value(v))));
      CHECK(a.accept[v] == b.accept[w]);
      CHECK(a.embeddings.back().row(v) == b.embeddings.back().row(w));
    }
    // Grafting an unreachable component leaves connected networks unchanged.
    auto grafted = add_facts(d, {{"E", {"g1", "g2"}}, {"E", {"g2", "g2"}}});
    Matrix<Rational> lam3(grafted.size(), 1);
    for (int v = 0; v < grafted.size(); ++v) {
      auto old = d.find_value(grafted.value(v));
      lam3(v, 0) = old ? lam(*old, 0) : Rational(1);
    }
    auto c = run_all(net, grafted, &lam3);
    for (int v = 0; v < d.size(); ++v) CHECK(c.embeddings.back().row(grafted.value_id(d.value(v))) == a.embeddings.back().row(v));
  }
}

TEST_CASE("den to dhn conversion") {
  Dhn<Rational> single;
  single.schema = graph_schema();
  single.input_dim = 1;
  DhnLayer<Rational> l;
  l.queries = {HomQuery<Rational>{single_vertex_pattern(graph_schema()), {identity_transform<Rational>(1)},
                                  Aggregation::Sum, MatchMode::Embedding}};
  l.combine = identity_fnn(1);
  single.layers = {l};
  single.classifier.threshold = 1;
  auto conv = den_to_dhn_sum(single);
  Rng rng(61);
  for (int t = 0; t < 20; ++t) {
    auto d = random_database(graph_schema(), 4, 0.4, rng);
    auto lam = oracle::random_embedding(d.size(), 1, rng);
    // The induced condition rejects looped vertices.
    Matrix<Rational> expected = lam;
    for (int v = 0; v < d.size(); ++v)
      if (const int vv[2] = {v, v}; d.contains(0, vv)) expected.row(v).setZero();
    CHECK(run_all(conv, d, &lam).embeddings.back() == expected);
    CHECK(run_all(single, d, &lam).embeddings.back() == expected);
  }
  for (int t = 0; t < 5; ++t) {
    auto net = oracle::random_den(rng, 2);
    auto c = den_to_dhn_sum(net);
    for (const auto& layer : c.layers)
      for (const auto& q : layer.queries) CHECK(q.mode == MatchMode::Hom);
    for (int s = 0; s < 20; ++s) {
      auto d = random_database(graph_schema(), 1 + static_cast<int>(rng.below(5)), 0.4, rng);
      auto lam = oracle::random_embedding(d.size(), 2, rng);
      CHECK(run_all(net, d, &lam).embeddings.back() == run_all(c, d, &lam).embeddings.back());
    }
  }
}

TEST_CASE("GIN baseline") {
  Rng rng(67);
  auto gin = gin_baseline({4, 4, 3}, {5}, Activation{ActivationKind::Relu}, rng);
  REQUIRE(gin.layers.size() == 3);
  CHECK(gin.layers[0].queries.size() == 2);
  CHECK(gin.layers[1].queries.size() == 2);
  CHECK(gin.layers[2].queries.size() == 3);
  // 1-regular: a directed cycle.
  auto cyc = graph({{"a", "b"}, {"b", "c"}, {"c", "d"}, {"d", "a"}});
  auto tr = run_all(gin, cyc);
  for (int v = 1; v < 4; ++v) CHECK((tr.embeddings.back().row(v) - tr.embeddings.back().row(0)).norm() < 1e-12);
  // Hand-rolled message passing on a path.
  auto path = graph({{"a", "b"}, {"b", "c"}, {"c", "d"}});
  const int n = path.size();
  Matrix<double> h = Matrix<double>::Ones(n, 1);
  for (std::size_t l = 0; l < gin.layers.size(); ++l) {
    const auto& comb = std::get<Fnn<double>>(gin.layers[l].combine);
    const Eigen::Index w = h.cols();
    Matrix<double> total = h.colwise().sum();
    Matrix<double> next(n, comb.out_dim());
    for (int v = 0; v < n; ++v) {
      RowVector<double> msg = RowVector<double>::Zero(w);
      for (int r : path.rows_with(0, 0, v)) msg += h.row(path.rows()[r].args[1]);
      RowVector<double> in(l + 1 == gin.layers.size() ? 3 * w : 2 * w);
      if (l + 1 == gin.layers.size())
        in << h.row(v), msg, total;
      else
        in << h.row(v), msg;
      next.row(v) = comb.forward(in);
    }
    h = next;
  }
  auto got = run_all(gin, path);
  CHECK((got.embeddings.back() - h).norm() < 1e-12);
}

TEST_CASE("simple max networks stay in the unit interval") {
  Rng rng(71);
  auto net = compile(parse_formula("(or (exists (y) (and (E x y) (not (exists (z) (E y z))))) (E x x))"),
                     CompileTarget::MaxDhn);
  CHECK(is_simple(net));
  for (int t = 0; t < 20; ++t) {
    auto d = random_database(net.schema, 5, 0.3, rng);
    for (const auto& e : run_all(net, d).embeddings)
      for (Eigen::Index i = 0; i < e.size(); ++i) CHECK((e.data()[i] >= 0 && e.data()[i] <= 1));
  }
}

TEST_CASE("network json round trip") {
  auto net = local_transitivity_dhn();
  auto back = dhn_from_json<Rational>(to_json(net));
  CHECK(to_json(back) == to_json(net));
  Rng rng(73);
  auto gin = gin_baseline({3, 2}, {4}, Activation{ActivationKind::Relu}, rng);
  auto gj = to_json(gin);
  CHECK(network_numeric(gj) == "float");
  CHECK(to_json(dhn_from_json<double>(gj)) == gj);
  auto bad = to_json(net);
  bad["layers"][0]["queries"][0]["transforms"].erase("x");
  CHECK_THROWS(dhn_from_json<Rational>(bad));
}
