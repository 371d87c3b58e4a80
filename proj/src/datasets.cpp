#include "homnet/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace homnet {

std::size_t LabeledDataset::positives() const { return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1)); }

DatabaseDocument to_document(const LabeledDataset& d) {
  DatabaseDocument doc{d.db, std::nullopt, std::nullopt, std::map<std::string, int>{}, d.meta};
  for (std::size_t i = 0; i < d.examples.size(); ++i) (*doc.labels)[d.db.value(d.examples[i])] = d.labels[i];
  return doc;
}

LabeledDataset dataset_from_document(const DatabaseDocument& doc) {
  if (!doc.labels) throw Error("dataset has no labels");
  LabeledDataset d{doc.db, {}, {}, doc.meta};
  std::vector<std::pair<int, int>> ex;
  for (const auto& [name, label] : *doc.labels) {
    if (label != 0 && label != 1) throw Error("labels must be 0 or 1");
    ex.emplace_back(doc.db.value_id(name), label);
  }
  std::sort(ex.begin(), ex.end());
  for (auto [v, l] : ex) {
    d.examples.push_back(v);
    d.labels.push_back(l);
  }
  return d;
}

namespace {

std::vector<int> label_all(const Database& db, const std::vector<int>& vs, bool (*oracle)(const Database&, int)) {
  std::vector<int> out;
  for (int v : vs) out.push_back(oracle(db, v) ? 1 : 0);
  return out;
}

}  // namespace

LabeledDataset gen_local_transitivity(const LtConfig& cfg) {
  if (cfg.chains < 0 || cfg.chain_length < 0) throw Error("chain parameters must be non-negative");
  const long per_chain = static_cast<long>(cfg.chain_length) * (cfg.chain_length - 1) / 2;
  const long total = per_chain * cfg.chains;
  if (cfg.deletions < 0 || cfg.deletions > total)
    throw Error("cannot delete " + std::to_string(cfg.deletions) + " of " + std::to_string(total) + " edges");
  Rng rng(cfg.seed);
  std::vector<std::pair<int, int>> edges;  // global vertex indices
  edges.reserve(static_cast<std::size_t>(total));
  for (int c = 0; c < cfg.chains; ++c)
    for (int a = 0; a < cfg.chain_length; ++a)
      for (int b = a + 1; b < cfg.chain_length; ++b)
        edges.emplace_back(c * cfg.chain_length + a, c * cfg.chain_length + b);
  // Partial Fisher-Yates: the first `deletions` positions become the deleted edges.
  for (int i = 0; i < cfg.deletions; ++i) {
    std::size_t j = static_cast<std::size_t>(i) + rng.below(edges.size() - static_cast<std::size_t>(i));
    std::swap(edges[static_cast<std::size_t>(i)], edges[j]);
  }
  auto name = [&](int g) {
    return "c" + std::to_string(g / std::max(1, cfg.chain_length)) + "_" + std::to_string(g % std::max(1, cfg.chain_length));
  };
  std::vector<std::string> names;
  for (int g = 0; g < cfg.chains * cfg.chain_length; ++g) names.push_back(name(g));
  std::vector<Fact> facts;
  for (std::size_t i = static_cast<std::size_t>(cfg.deletions); i < edges.size(); ++i)
    facts.push_back(Fact{"E", {names[edges[i].first], names[edges[i].second]}});
  LabeledDataset d{Database(graph_schema(), facts, names), {}, {}, {}};
  for (int v = 0; v < d.db.size(); ++v) d.examples.push_back(v);
  d.labels = label_all(d.db, d.examples, oracle_local_transitivity);
  d.meta = {{"generator", "local_transitivity"},
            {"version", kGeneratorVersion},
            {"seed", cfg.seed},
            {"chains", cfg.chains},
            {"chain_length", cfg.chain_length},
            {"deletions", cfg.deletions},
            {"features", "constant, dimension 1"}};
  return d;
}

bool oracle_local_transitivity(const Database& db, int v) {
  auto e = db.relation_id("E");
  if (!e) return true;
  for (int r1 : db.rows_with(*e, 0, v)) {
    int u1 = db.rows()[r1].args[1];
    for (int r2 : db.rows_with(*e, 0, u1)) {
      int u2 = db.rows()[r2].args[1];
      const int args[2] = {v, u2};
      if (!db.contains(*e, args)) return false;
    }
  }
  return true;
}

LabeledDataset gen_sun(const SunConfig& cfg) {
  if (cfg.max_extra_degree < 2 || cfg.max_fattened < 1 || cfg.max_fattened > 6 || cfg.max_decorations < 0)
    throw Error("invalid sun parameters");
  Rng rng(cfg.seed);
  std::vector<std::string> names;
  std::vector<std::pair<int, int>> edges;
  auto fresh = [&](const std::string& n) {
    names.push_back(n);
    return static_cast<int>(names.size()) - 1;
  };
  int counter = 0;
  // A sun with `fatten` pendants fattened; returns its cycle vertices.
  auto sun = [&](const std::string& prefix, int fatten) {
    std::vector<int> cyc, pend;
    for (int i = 0; i < 6; ++i) cyc.push_back(fresh(prefix + "c" + std::to_string(i)));
    for (int i = 0; i < 6; ++i) {
      pend.push_back(fresh(prefix + "p" + std::to_string(i)));
      edges.emplace_back(cyc[i], cyc[(i + 1) % 6]);
      edges.emplace_back(cyc[i], pend[i]);
    }
    std::vector<int> order{0, 1, 2, 3, 4, 5};
    rng.shuffle(order);
    for (int f = 0; f < fatten; ++f) {
      int i = order[static_cast<std::size_t>(f)];
      int degree = 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.max_extra_degree - 1)));
      for (int x = 1; x < degree; ++x) edges.emplace_back(pend[i], fresh(prefix + "p" + std::to_string(i) + "x" + std::to_string(x)));
    }
    return cyc;
  };
  auto fatten_count = [&] { return 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.max_fattened))); };
  std::vector<int> ex_vertices, ex_labels;
  auto example = [&](bool positive) {
    std::string prefix = "s" + std::to_string(counter++) + "_";
    auto cyc = sun(prefix, positive ? 0 : fatten_count());
    int decorations = static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.max_decorations + 1)));
    for (int d = 0; d < decorations; ++d) {
      auto dc = sun(prefix + "d" + std::to_string(d) + "_", fatten_count());
      edges.emplace_back(cyc[rng.below(6)], dc[rng.below(6)]);
    }
    for (int v : cyc) {
      ex_vertices.push_back(v);
      ex_labels.push_back(positive ? 1 : 0);
    }
  };
  std::vector<char> kinds;
  kinds.insert(kinds.end(), static_cast<std::size_t>(cfg.positives), 1);
  kinds.insert(kinds.end(), static_cast<std::size_t>(cfg.negatives), 0);
  rng.shuffle(kinds);
  for (char k : kinds) example(k != 0);
  std::vector<Fact> facts;
  for (auto [a, b] : edges) {
    facts.push_back(Fact{"E", {names[a], names[b]}});
    facts.push_back(Fact{"E", {names[b], names[a]}});
  }
  LabeledDataset d{Database(graph_schema(), facts, names), {}, {}, {}};
  std::vector<std::pair<int, int>> ex;
  for (std::size_t i = 0; i < ex_vertices.size(); ++i) {
    int id = d.db.value_id(names[ex_vertices[i]]);
    if (oracle_sun(d.db, id) != (ex_labels[i] == 1)) throw Error("internal: sun construction disagrees with its oracle");
    ex.emplace_back(id, ex_labels[i]);
  }
  std::sort(ex.begin(), ex.end());
  for (auto [v, l] : ex) {
    d.examples.push_back(v);
    d.labels.push_back(l);
  }
  d.meta = {{"generator", "sun"},
            {"version", kGeneratorVersion},
            {"seed", cfg.seed},
            {"positives", cfg.positives},
            {"negatives", cfg.negatives},
            {"max_extra_degree", cfg.max_extra_degree},
            {"max_fattened", cfg.max_fattened},
            {"max_decorations", cfg.max_decorations},
            {"decoration_attachment", "bridge edge between a random example cycle vertex and a random decoration cycle vertex"},
            {"features", "constant, dimension 1"}};
  return d;
}

bool oracle_sun(const Database& db, int v) {
  auto e = db.relation_id("E");
  if (!e) return false;
  auto nbrs = [&](int u) {
    std::vector<int> out;
    for (int r : db.rows_with(*e, 0, u)) out.push_back(db.rows()[r].args[1]);
    return out;
  };
  auto good = [&](int u) {
    for (int w : nbrs(u))
      if (db.rows_with(*e, 0, w).size() == 1) return true;
    return false;
  };
  if (!good(v)) return false;
  std::vector<int> path{v};
  std::function<bool()> dfs = [&]() -> bool {
    int u = path.back();
    for (int w : nbrs(u)) {
      if (path.size() == 6) {
        if (w == v) return true;
        continue;
      }
      if (std::find(path.begin(), path.end(), w) != path.end() || !good(w)) continue;
      path.push_back(w);
      if (dfs()) return true;
      path.pop_back();
    }
    return false;
  };
  return dfs();
}

std::vector<PointedDatabase> pattern_catalog_lt() {
  const Schema s = graph_schema();
  auto p = [&](std::vector<std::pair<std::string, std::string>> es, const std::string& root) {
    std::vector<Fact> f;
    for (auto& [a, b] : es) f.push_back(Fact{"E", {a, b}});
    return make_pointed(s, f, root);
  };
  return {
      p({{"r", "a"}}, "r"),
      p({{"a", "r"}}, "r"),
      p({{"r", "a"}, {"a", "b"}}, "r"),
      p({{"a", "r"}, {"r", "b"}}, "r"),
      p({{"a", "b"}, {"b", "r"}}, "r"),
      p({{"a", "r"}, {"b", "r"}}, "r"),
      p({{"r", "a"}, {"b", "a"}}, "r"),
      p({{"a", "r"}, {"a", "b"}}, "r"),
      p({{"r", "a"}, {"r", "b"}}, "r"),
      p({{"r", "a"}, {"a", "b"}, {"r", "b"}}, "r"),
      p({{"a", "r"}, {"r", "b"}, {"a", "b"}}, "r"),
      p({{"a", "b"}, {"b", "r"}, {"a", "r"}}, "r"),
      p({{"r", "a"}, {"a", "b"}, {"b", "r"}}, "r"),
  };
}

std::vector<PointedDatabase> sun_patterns() {
  const Schema s = graph_schema();
  std::vector<Fact> cyc;
  for (int i = 0; i < 6; ++i) {
    std::string a = "v" + std::to_string(i), b = "v" + std::to_string((i + 1) % 6);
    cyc.push_back(Fact{"E", {a, b}});
    cyc.push_back(Fact{"E", {b, a}});
  }
  return {make_pointed(s, cyc, "v0"), make_pointed(s, {Fact{"E", {"r", "a"}}, Fact{"E", {"a", "r"}}}, "r")};
}

Split split_examples(std::size_t n, std::uint64_t seed, double train, double val, double test) {
  if (train < 0 || val < 0 || test < 0 || std::abs(train + val + test - 1.0) > 1e-9)
    throw Error("split ratios must be non-negative and sum to 1");
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(seed);
  rng.shuffle(idx);
  auto n_train = static_cast<std::size_t>(std::llround(train * static_cast<double>(n)));
  auto n_val = static_cast<std::size_t>(std::llround(val * static_cast<double>(n)));
  n_train = std::min(n_train, n);
  n_val = std::min(n_val, n - n_train);
  Split s;
  s.train.assign(idx.begin(), idx.begin() + static_cast<long>(n_train));
  s.val.assign(idx.begin() + static_cast<long>(n_train), idx.begin() + static_cast<long>(n_train + n_val));
  s.test.assign(idx.begin() + static_cast<long>(n_train + n_val), idx.end());
  return s;
}

}  // namespace homnet
