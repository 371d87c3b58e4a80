#include "homnet/lovasz.hpp"

#include <algorithm>
#include <map>

namespace homnet {

BigInt partition_mobius(const std::vector<int>& block_of) {
  std::vector<int> sizes(num_blocks(block_of), 0);
  for (int b : block_of) ++sizes[b];
  BigInt m = 1;
  for (int s : sizes) {
    for (int i = 2; i < s; ++i) m *= i;
    if ((s - 1) % 2) m = -m;
  }
  return m;
}

namespace {

using RowSet = std::vector<Database::Row>;

struct Key {
  std::vector<int> block_of;
  RowSet rows;
  auto operator<=>(const Key&) const = default;
};

RowSet rows_of(const Database& db) { return db.rows(); }

// Facts of the quotient, as rows over block indices.
RowSet quotient_rows(const RowSet& rows, const std::vector<int>& block_of) {
  RowSet out;
  for (const auto& r : rows) {
    Database::Row q{r.relation, {}};
    for (int a : r.args) q.args.push_back(block_of[a]);
    out.push_back(std::move(q));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<Database::Row> missing_rows(const Schema& schema, int n, const RowSet& present) {
  std::vector<Database::Row> out;
  for (auto& r : all_possible_rows(schema, n))
    if (!std::binary_search(present.begin(), present.end(), r)) out.push_back(std::move(r));
  if (static_cast<int>(out.size()) > kMaxSupersetFacts)
    throw Error("superset enumeration too large: " + std::to_string(out.size()) + " candidate facts");
  return out;
}

// Calls f(superset rows, number of added rows) for every superset of `base` over n values.
template <typename F>
void for_each_superset(const Schema& schema, int n, const RowSet& base, F&& f) {
  auto extra = missing_rows(schema, n, base);
  const std::uint64_t total = std::uint64_t{1} << extra.size();
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    RowSet s = base;
    int added = 0;
    for (std::size_t i = 0; i < extra.size(); ++i)
      if (mask >> i & 1) {
        s.push_back(extra[i]);
        ++added;
      }
    std::sort(s.begin(), s.end());
    f(s, added);
  }
}

PointedDatabase materialize(const PointedDatabase& F, const std::vector<int>& block_of, const RowSet& rows) {
  const int k = num_blocks(block_of);
  std::vector<std::string> names(k);
  for (int v = 0; v < F.db.size(); ++v) {
    auto& nm = names[block_of[v]];
    nm += (nm.empty() ? "" : "|") + F.db.value(v);
  }
  std::vector<std::string> rel_names;
  for (const auto& [name, ar] : F.db.schema()) rel_names.push_back(name);
  std::vector<Fact> facts;
  for (const auto& r : rows) {
    Fact f{rel_names[r.relation], {}};
    for (int a : r.args) f.args.push_back(names[a]);
    facts.push_back(std::move(f));
  }
  return PointedDatabase(Database(F.db.schema(), facts, names), names[block_of[F.root]]);
}

}  // namespace

std::vector<LabeledTerm> labeled_expansion(const PointedDatabase& F, MatchMode from, MatchMode to) {
  const int n = F.db.size();
  const auto& schema = F.db.schema();
  std::map<Key, Rational> acc;
  auto add_partition_sum = [&](const RowSet& rows, const Rational& sign) {
    for (const auto& p : set_partitions(n)) {
      Rational c = sign * Rational(partition_mobius(p));
      acc[Key{p, quotient_rows(rows, p)}] += c;
    }
  };
  if (to == MatchMode::Hom) {
    if (from == MatchMode::Hom) {
      std::vector<int> discrete(n);
      for (int i = 0; i < n; ++i) discrete[i] = i;
      acc[Key{discrete, rows_of(F.db)}] = 1;
    } else if (from == MatchMode::Injective) {
      add_partition_sum(rows_of(F.db), Rational(1));
    } else {
      for_each_superset(schema, n, rows_of(F.db), [&](const RowSet& s, int added) {
        add_partition_sum(s, Rational(added % 2 ? -1 : 1));
      });
    }
  } else if (to == MatchMode::Embedding) {
    if (from == MatchMode::Embedding) {
      std::vector<int> discrete(n);
      for (int i = 0; i < n; ++i) discrete[i] = i;
      acc[Key{discrete, rows_of(F.db)}] = 1;
    } else {
      auto parts = from == MatchMode::Hom ? set_partitions(n) : std::vector<std::vector<int>>{};
      if (from == MatchMode::Injective) {
        std::vector<int> discrete(n);
        for (int i = 0; i < n; ++i) discrete[i] = i;
        parts.push_back(discrete);
      }
      for (const auto& p : parts) {
        RowSet q = quotient_rows(rows_of(F.db), p);
        for_each_superset(schema, num_blocks(p), q, [&](const RowSet& s, int) { acc[Key{p, s}] += 1; });
      }
    }
  } else {
    throw Error("unsupported expansion target");
  }
  std::vector<LabeledTerm> out;
  for (auto& [key, c] : acc) {
    if (c == 0) continue;
    out.push_back(LabeledTerm{key.block_of, materialize(F, key.block_of, key.rows), c});
  }
  return out;
}

namespace {

std::vector<BasisTerm> group_by_isomorphism(const std::vector<LabeledTerm>& terms) {
  std::map<std::string, std::pair<PointedDatabase, Rational>> groups;
  for (const auto& t : terms) {
    auto key = canonical_form(t.pattern);
    auto it = groups.find(key);
    if (it == groups.end())
      groups.emplace(key, std::make_pair(canonical_relabel(t.pattern), t.coefficient));
    else
      it->second.second += t.coefficient;
  }
  std::vector<BasisTerm> out;
  for (auto& [key, g] : groups)
    if (g.second != 0) out.push_back(BasisTerm{g.first, g.second});
  std::stable_sort(out.begin(), out.end(), [](const BasisTerm& a, const BasisTerm& b) {
    if (a.pattern.db.size() != b.pattern.db.size()) return a.pattern.db.size() > b.pattern.db.size();
    return a.pattern.db.num_facts() < b.pattern.db.num_facts();
  });
  return out;
}

}  // namespace

std::vector<BasisTerm> emb_from_hom_basis(const PointedDatabase& F) {
  return group_by_isomorphism(labeled_expansion(F, MatchMode::Embedding, MatchMode::Hom));
}

std::vector<BasisTerm> hom_from_emb_basis(const PointedDatabase& F) {
  return group_by_isomorphism(labeled_expansion(F, MatchMode::Hom, MatchMode::Embedding));
}

}  // namespace homnet
