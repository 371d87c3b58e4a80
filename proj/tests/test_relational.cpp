#include "homnet/relational.hpp"
#include "homnet/rng.hpp"

#include <doctest.h>

using namespace homnet;

namespace {

Database graph(const std::vector<std::pair<std::string, std::string>>& edges, const std::vector<std::string>& extra = {}) {
  std::vector<Fact> facts;
  for (const auto& [a, b] : edges) facts.push_back({"E", {a, b}});
  return Database(graph_schema(), facts, extra);
}

const Schema kEP{{"E", 2}, {"P", 1}, {"R", 3}};

}  // namespace

TEST_CASE("active domain") {
  CHECK(Database(graph_schema()).values().empty());
  CHECK(graph({{"a", "b"}}).values() == std::vector<std::string>{"a", "b"});
  Database d(kEP, {{"E", {"a", "b"}}, {"P", {"c"}}});
  CHECK(d.values() == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("degree") {
  CHECK(Database(graph_schema()).max_degree() == 0);
  CHECK(graph({{"a", "b"}}).max_degree() == 1);
  CHECK(graph({{"a", "b"}, {"b", "c"}, {"c", "a"}}).max_degree() == 2);

  Rng rng(5);
  for (int t = 0; t < 50; ++t) {
    std::vector<Fact> facts;
    for (int i = 0; i < 12; ++i) {
      auto v = [&] { return std::to_string(rng.below(6)); };
      if (rng.bernoulli(0.3))
        facts.push_back({"R", {v(), v(), v()}});
      else
        facts.push_back({"E", {v(), v()}});
    }
    Database d(kEP, facts);
    // Tally of distinct facts per value.
    std::map<std::string, int> tally;
    std::set<Fact> distinct(facts.begin(), facts.end());
    for (const auto& f : distinct) {
      std::set<std::string> seen(f.args.begin(), f.args.end());
      for (const auto& v : seen) ++tally[v];
    }
    int best = 0;
    for (const auto& [v, c] : tally) {
      CHECK(d.degree(d.value_id(v)) == c);
      best = std::max(best, c);
    }
    CHECK(d.max_degree() == best);
    CHECK((d.max_degree() >= 1) == (d.num_facts() > 0));
  }
}

TEST_CASE("gaifman graph") {
  Database clique(kEP, {{"R", {"a", "b", "c"}}});
  auto g = gaifman_graph(clique);
  for (int v = 0; v < 3; ++v) CHECK(g[v].size() == 2);
  auto two = gaifman_graph(graph({{"a", "b"}, {"c", "d"}}));
  CHECK(two[0] == std::vector<int>{1});
  CHECK(two[2] == std::vector<int>{3});
  Database p(kEP, {{"P", {"a"}}});
  CHECK(gaifman_graph(p)[0].empty());
  // Symmetric on random input, no self edges.
  auto loops = gaifman_graph(graph({{"a", "a"}, {"a", "b"}, {"c", "b"}}));
  for (std::size_t u = 0; u < loops.size(); ++u)
    for (int v : loops[u]) {
      CHECK(v != static_cast<int>(u));
      CHECK(std::count(loops[v].begin(), loops[v].end(), static_cast<int>(u)) == 1);
    }
}

TEST_CASE("root eccentricity") {
  CHECK(diameter(PointedDatabase(graph({{"a", "b"}, {"b", "c"}}), "a")) == 2);
  CHECK_FALSE(diameter(make_pointed(kEP, {{"E", {"a", "b"}}, {"P", {"c"}}}, "a")).has_value());
  CHECK(diameter(make_pointed(graph_schema(), {}, "r")) == 0);
  // Adding a fact among existing values never increases it.
  auto base = graph({{"a", "b"}, {"b", "c"}, {"c", "d"}});
  auto more = add_facts(base, {{"E", {"d", "a"}}});
  CHECK(*diameter(PointedDatabase(more, "a")) <= *diameter(PointedDatabase(base, "a")));
}

TEST_CASE("connectivity") {
  CHECK(is_connected(graph({{"a", "b"}, {"b", "c"}, {"c", "a"}})));
  CHECK_FALSE(is_connected(graph({{"a", "b"}, {"c", "d"}})));
  CHECK(is_connected(graph({}, {"v"})));
  CHECK(is_connected(Database(graph_schema())));
}

TEST_CASE("schema checks and nullary relations") {
  CHECK_THROWS_AS(Database(graph_schema(), {{"E", {"a"}}}), Error);
  CHECK_THROWS_AS(Database(graph_schema(), {{"Q", {"a"}}}), Error);
  Database z(Schema{{"Z", 0}, {"E", 2}}, {{"Z", {}}});
  CHECK(z.num_facts() == 1);
  CHECK(z.values().empty());
}

TEST_CASE("json round trip") {
  Database d(kEP, {{"E", {"a", "b"}}, {"P", {"c"}}, {"R", {"a", "b", "c"}}}, {"z"});
  DatabaseDocument doc{d, std::string("a"), std::nullopt, std::nullopt, nullptr};
  Embedding e;
  e.exact = true;
  for (const auto& v : d.values()) e.rows[v] = {Rational(1, 3), Rational(2)};
  doc.embedding = e;
  auto back = document_from_json(to_json(doc));
  CHECK(back.db == d);
  CHECK(back.root == std::string("a"));
  CHECK(back.embedding->rows.at("z")[0] == Rational(1, 3));
  auto m = embedding_matrix<Rational>(back.db, *back.embedding);
  CHECK(m.rows() == 4);
  CHECK(m(0, 1) == Rational(2));
}
