#include "homnet/datasets.hpp"
#include "homnet/logic.hpp"
#include "homnet/compiler.hpp"

#include <doctest.h>

#include "oracles.hpp"

using namespace homnet;

TEST_CASE("local transitivity generator") {
  auto d = gen_local_transitivity(LtConfig{.seed = 1});
  CHECK(d.db.size() == 4000);
  CHECK(d.db.num_facts() == 34000);
  CHECK(d.examples.size() == 4000);
  for (std::size_t i = 0; i < d.examples.size(); ++i)
    CHECK(d.labels[i] == static_cast<int>(oracle::locally_transitive(d.db, d.examples[i])));
  auto full = gen_local_transitivity(LtConfig{.seed = 1, .deletions = 0});
  CHECK(full.positives() == 4000);
  CHECK_THROWS_AS(gen_local_transitivity(LtConfig{.seed = 1, .deletions = 38001}), Error);
  CHECK(to_json(to_document(gen_local_transitivity(LtConfig{.seed = 4}))).dump() ==
        to_json(to_document(gen_local_transitivity(LtConfig{.seed = 4}))).dump());
}

TEST_CASE("positive counts stay in the expected band") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    auto d = gen_local_transitivity(LtConfig{.seed = s});
    CAPTURE(s);
    CHECK(d.positives() >= 1700);
    CHECK(d.positives() <= 2150);
  }
}

TEST_CASE("local transitivity oracle") {
  auto tour = Database(graph_schema(), {{"E", {"1", "2"}}, {"E", {"2", "3"}}, {"E", {"1", "3"}}});
  CHECK(oracle_local_transitivity(tour, tour.value_id("1")));
  auto path = Database(graph_schema(), {{"E", {"a", "b"}}, {"E", {"b", "c"}}});
  CHECK_FALSE(oracle_local_transitivity(path, path.value_id("a")));
  auto lt = builtin_formula("local_transitivity");
  Rng rng(131);
  for (int t = 0; t < 100; ++t) {
    auto d = random_database(graph_schema(), 1 + static_cast<int>(rng.below(6)), 0.35, rng);
    auto e = eval_all(*lt, d);
    for (int v = 0; v < d.size(); ++v) CHECK(e[v] == oracle_local_transitivity(d, v));
  }
}

TEST_CASE("sun generator") {
  auto d = gen_sun(SunConfig{.seed = 2});
  CHECK(d.examples.size() == 1200);
  CHECK(d.positives() == 600);
  CHECK(d.db.size() > 1200);
  const int e = *d.db.relation_id("E");
  for (const auto& row : d.db.rows()) {
    CHECK(row.args[0] != row.args[1]);
    const int back[2] = {row.args[1], row.args[0]};
    CHECK(d.db.contains(e, back));
  }
  auto phi = builtin_formula("phi_sun");
  auto truth = eval_all(*phi, d.db);
  for (std::size_t i = 0; i < d.examples.size(); ++i) CHECK(truth[d.examples[i]] == (d.labels[i] == 1));
  auto doc = to_document(d);
  auto back = dataset_from_document(document_from_json(to_json(doc)));
  CHECK(back.examples == d.examples);
  CHECK(back.labels == d.labels);
  CHECK(back.meta == d.meta);
}

TEST_CASE("pattern catalogs") {
  auto c = pattern_catalog_lt();
  CHECK(c.size() == 13);
  for (std::size_t i = 0; i < c.size(); ++i) {
    CHECK(is_connected(c[i].db));
    CHECK(c[i].db.size() <= 3);
    for (std::size_t j = 0; j < i; ++j) CHECK_FALSE(isomorphic(c[i], c[j]));
  }
  auto s = sun_patterns();
  REQUIRE(s.size() == 2);
  CHECK(s[0].db.size() == 6);
  CHECK(s[0].db.num_facts() == 12);
  CHECK(s[1].db.size() == 2);
}

TEST_CASE("splits") {
  auto s = split_examples(4000, 7);
  CHECK(s.train.size() == 2400);
  CHECK(s.val.size() == 800);
  CHECK(s.test.size() == 800);
  auto t = split_examples(4000, 7);
  CHECK(s.train == t.train);
  std::vector<std::size_t> all;
  for (auto* part : {&s.train, &s.val, &s.test}) all.insert(all.end(), part->begin(), part->end());
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < all.size(); ++i) CHECK(all[i] == i);
  CHECK_THROWS_AS(split_examples(10, 1, 0.5, 0.5, 0.5), Error);
}
