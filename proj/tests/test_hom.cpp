#include "homnet/compiler.hpp"
#include "homnet/hom.hpp"
#include "homnet/lovasz.hpp"

#include <doctest.h>

#include "oracles.hpp"

using namespace homnet;

namespace {

Database graph(const std::vector<std::pair<std::string, std::string>>& edges, const std::vector<std::string>& extra = {}) {
  std::vector<Fact> facts;
  for (const auto& [a, b] : edges) facts.push_back({"E", {a, b}});
  return Database(graph_schema(), facts, extra);
}

const Database kCycle3 = graph({{"a", "b"}, {"b", "c"}, {"c", "a"}});
const Database kTournament = graph({{"1", "2"}, {"2", "3"}, {"1", "3"}});

std::uint64_t count(const PointedDatabase& f, const PointedDatabase& d, MatchMode m) { return count_matches(f, d, m); }

int mode_index(MatchMode m) { return m == MatchMode::Hom ? 0 : m == MatchMode::Injective ? 1 : 2; }

}  // namespace

TEST_CASE("hom counts of small patterns") {
  auto single = make_pointed(graph_schema(), {}, "v");
  CHECK(count(single, PointedDatabase(kCycle3, "a"), MatchMode::Hom) == 1);
  auto edge = PointedDatabase(graph({{"v1", "v2"}}), "v1");
  CHECK(count(edge, PointedDatabase(kCycle3, "a"), MatchMode::Hom) == 1);
  auto path = PointedDatabase(graph({{"v1", "v2"}, {"v2", "v3"}}), "v1");
  CHECK(count(path, PointedDatabase(kTournament, "1"), MatchMode::Hom) ==
        oracle::brute_count(path.db, path.root, kTournament, kTournament.value_id("1"), 0));
  CHECK(count(path, PointedDatabase(kTournament, "1"), MatchMode::Hom) == 1);
  CHECK(count(edge, PointedDatabase(kCycle3, "a"), MatchMode::Embedding) == 1);
  auto pair = make_pointed(graph_schema(), {}, "v1", {"v2"});
  CHECK(count(pair, PointedDatabase(kCycle3, "b"), MatchMode::Hom) == 3);
  auto self = PointedDatabase(kTournament, "1");
  CHECK(count(self, self, MatchMode::Hom) >= 1);
}

TEST_CASE("matcher agrees with brute force and respects mode order") {
  Rng rng(11);
  const Schema s = graph_schema();
  for (int t = 0; t < 150; ++t) {
    auto pdb = random_database(s, 1 + static_cast<int>(rng.below(3)), 0.4, rng);
    auto tdb = random_database(s, 1 + static_cast<int>(rng.below(5)), 0.4, rng);
    PointedDatabase f(pdb, 0);
    for (int r = 0; r < tdb.size(); ++r) {
      PointedDatabase d(tdb, r);
      std::uint64_t c[3];
      for (auto m : {MatchMode::Hom, MatchMode::Injective, MatchMode::Embedding}) {
        c[mode_index(m)] = count(f, d, m);
        CHECK(c[mode_index(m)] == oracle::brute_count(pdb, 0, tdb, r, mode_index(m)));
      }
      CHECK(c[2] <= c[1]);
      CHECK(c[1] <= c[0]);
    }
    CHECK(count_matches(pdb, tdb, MatchMode::Hom) == oracle::brute_count(pdb, 0, tdb, -1, 0));
    auto roots = count_all_roots(f, tdb, MatchMode::Injective);
    for (int r = 0; r < tdb.size(); ++r) CHECK(roots[r] == count(f, PointedDatabase(tdb, r), MatchMode::Injective));
  }
}

TEST_CASE("ternary relations and constraints") {
  const Schema s{{"R", 3}, {"P", 1}};
  Database pattern(s, {{"R", {"x", "y", "z"}}, {"P", {"z"}}});
  Database target(s, {{"R", {"a", "b", "c"}}, {"R", {"a", "a", "a"}}, {"R", {"b", "c", "a"}}, {"P", {"a"}}, {"P", {"c"}}});
  for (int m = 0; m < 3; ++m) {
    auto mode = m == 0 ? MatchMode::Hom : m == 1 ? MatchMode::Injective : MatchMode::Embedding;
    CHECK(count_matches(pattern, target, mode) == oracle::brute_count(pattern, 0, target, -1, m));
  }
  MatchConstraints c;
  c.distinct = {{0, 1}};
  Matcher m(pattern, target, MatchMode::Hom, c);
  CHECK(m.count() == 2);
}

TEST_CASE("enumeration is deterministic") {
  auto path = PointedDatabase(graph({{"v1", "v2"}, {"v2", "v3"}}), "v1");
  Rng rng(3);
  auto t = random_database(graph_schema(), 6, 0.5, rng);
  CHECK(enumerate_matches(path, PointedDatabase(t, 0), MatchMode::Hom) ==
        enumerate_matches(path, PointedDatabase(t, 0), MatchMode::Hom));
}

TEST_CASE("quotients") {
  auto edge = graph({{"v1", "v2"}});
  auto loop = quotient(edge, {0, 0});
  CHECK(loop.size() == 1);
  CHECK(loop.num_facts() == 1);
  CHECK(loop.rows()[0].args == std::vector<int>{0, 0});
  auto path = PointedDatabase(graph({{"v1", "v2"}, {"v2", "v3"}}), "v1");
  CHECK(isomorphic(quotient(path, {0, 1, 2}), path));
  auto folded = quotient(path.db, {0, 1, 0});
  CHECK(isomorphic(PointedDatabase(folded, 0), PointedDatabase(graph({{"w1", "w2"}, {"w2", "w1"}}), "w1")));
  CHECK(set_partitions(3).size() == 5);
  CHECK(set_partitions(4).size() == 15);
}

TEST_CASE("disjoint union multiplies") {
  Rng rng(17);
  for (int t = 0; t < 40; ++t) {
    auto f1 = random_database(graph_schema(), 2, 0.5, rng);
    auto f2 = random_database(graph_schema(), 2, 0.5, rng);
    std::vector<Fact> facts;
    std::vector<std::string> extra;
    for (auto f : f1.facts()) facts.push_back(f);
    for (auto f : f2.facts()) {
      for (auto& a : f.args) a = "b" + a;
      facts.push_back(f);
    }
    for (const auto& v : f1.values()) extra.push_back(v);
    for (const auto& v : f2.values()) extra.push_back("b" + v);
    auto both = make_pointed(graph_schema(), facts, "0", extra);
    auto d = random_database(graph_schema(), 4, 0.4, rng);
    for (int r = 0; r < d.size(); ++r)
      CHECK(count(both, PointedDatabase(d, r), MatchMode::Hom) ==
            count(PointedDatabase(f1, 0), PointedDatabase(d, r), MatchMode::Hom) *
                count_matches(f2, d, MatchMode::Hom));
  }
}

TEST_CASE("canonical forms") {
  auto a = PointedDatabase(graph({{"x", "y"}, {"y", "z"}}), "x");
  auto b = PointedDatabase(graph({{"q", "p"}, {"p", "r"}}), "q");
  auto c = PointedDatabase(graph({{"x", "y"}, {"y", "z"}}), "z");
  CHECK(canonical_form(a) == canonical_form(b));
  CHECK(canonical_form(a) != canonical_form(c));
  auto rl = canonical_relabel(c);
  CHECK(rl.root_name() == "0");
  CHECK(isomorphic(rl, c));
}

namespace {

// Direct count for `to` summed over a basis.
BigInt basis_total(const std::vector<BasisTerm>& basis, const PointedDatabase& d, MatchMode to) {
  Rational total = 0;
  for (const auto& t : basis) total += t.coefficient * Rational(count(t.pattern, d, to));
  CHECK(denominator(total) == 1);
  return BigInt(numerator(total));
}

}  // namespace

TEST_CASE("Lovasz bases on examples") {
  auto single = make_pointed(graph_schema(), {}, "v");
  auto basis = emb_from_hom_basis(single);
  // emb(v) = hom(v) - hom(loop at v)
  auto looped = make_pointed(graph_schema(), {{"E", {"v", "v"}}}, "v");
  REQUIRE(basis.size() == 2);
  for (const auto& term : basis) {
    if (isomorphic(term.pattern, single))
      CHECK(term.coefficient == 1);
    else
      CHECK((isomorphic(term.pattern, looped) && term.coefficient == -1));
  }

  Rng rng(23);
  auto loop = PointedDatabase(graph({{"v", "v"}}), "v");
  auto edge = PointedDatabase(graph({{"v1", "v2"}}), "v1");
  for (const auto& f : {loop, edge}) {
    auto e = emb_from_hom_basis(f);
    auto h = hom_from_emb_basis(f);
    for (int t = 0; t < 100; ++t) {
      auto d = random_database(graph_schema(), 1 + static_cast<int>(rng.below(6)), 0.4, rng);
      PointedDatabase pd(d, static_cast<int>(rng.below(static_cast<std::uint64_t>(d.size()))));
      CHECK(basis_total(e, pd, MatchMode::Hom) == BigInt(oracle::brute_count(f.db, f.root, d, pd.root, 2)));
      CHECK(basis_total(h, pd, MatchMode::Embedding) == BigInt(oracle::brute_count(f.db, f.root, d, pd.root, 0)));
    }
  }
}

TEST_CASE("partition identity on random patterns") {
  Rng rng(29);
  for (int t = 0; t < 30; ++t) {
    auto fdb = random_database(graph_schema(), 1 + static_cast<int>(rng.below(3)), 0.3, rng);
    PointedDatabase f(fdb, 0);
    auto d = random_database(graph_schema(), 4, 0.5, rng);
    for (int r = 0; r < d.size(); ++r) {
      std::uint64_t sum = 0;
      for (const auto& p : set_partitions(fdb.size())) sum += count(quotient(f, p), PointedDatabase(d, r), MatchMode::Injective);
      CHECK(sum == count(f, PointedDatabase(d, r), MatchMode::Hom));
    }
  }
}

TEST_CASE("partition Mobius values") {
  CHECK(partition_mobius({0, 1, 2}) == 1);
  CHECK(partition_mobius({0, 0}) == -1);
  CHECK(partition_mobius({0, 0, 0}) == 2);
  CHECK(partition_mobius({0, 0, 0, 0}) == -6);
  CHECK(partition_mobius({0, 0, 1, 1}) == 1);
}
