#include "homnet/analysis.hpp"

#include <algorithm>
#include <limits>
#include <unordered_set>

namespace homnet {

namespace {

struct State {
  int n = 1;
  std::vector<Database::Row> rows;
};

PointedDatabase to_pointed(const Schema& schema, const std::vector<std::pair<std::string, int>>& rels, const State& s) {
  std::vector<std::string> names;
  for (int i = 0; i < s.n; ++i) names.push_back(std::to_string(i));
  std::vector<Fact> facts;
  for (const auto& r : s.rows) {
    Fact f{rels[r.relation].first, {}};
    for (int a : r.args) f.args.push_back(names[a]);
    facts.push_back(std::move(f));
  }
  return PointedDatabase(Database(schema, facts, names), "0");
}

}  // namespace

std::size_t enumerate_connected(const Schema& schema, int degree_bound, int max_size,
                                const std::function<bool(const PointedDatabase&)>& visit) {
  if (max_size < 1) throw Error("size cap must be at least 1");
  std::vector<std::pair<std::string, int>> rels(schema.begin(), schema.end());
  int max_arity = 0;
  for (const auto& [name, ar] : rels) max_arity = std::max(max_arity, ar);
  std::unordered_set<std::string> seen;
  std::vector<State> frontier{State{}};
  seen.insert(canonical_form(to_pointed(schema, rels, frontier[0])));
  std::size_t visited = 0;
  while (!frontier.empty()) {
    std::vector<State> next;
    for (const auto& s : frontier) {
      ++visited;
      if (!visit(to_pointed(schema, rels, s))) return visited;
      std::vector<int> deg(s.n, 0);
      for (const auto& r : s.rows) {
        std::set<int> vals(r.args.begin(), r.args.end());
        for (int v : vals) ++deg[v];
      }
      const int reach = std::min(max_size, s.n + std::max(0, max_arity - 1));
      for (const auto& cand : all_possible_rows(schema, reach)) {
        if (std::find(s.rows.begin(), s.rows.end(), cand) != s.rows.end()) continue;
        std::set<int> vals(cand.args.begin(), cand.args.end());
        bool touches = cand.args.empty();
        int top = s.n - 1;
        for (int v : vals) {
          if (v < s.n) touches = true;
          top = std::max(top, v);
        }
        if (!touches) continue;
        // New values must be exactly n..top.
        bool gapless = true;
        for (int v = s.n; v <= top; ++v)
          if (!vals.count(v)) gapless = false;
        if (!gapless) continue;
        bool ok = true;
        for (int v : vals)
          if (v < s.n && deg[v] + 1 > degree_bound) ok = false;
        if (!vals.empty() && degree_bound < 1) ok = false;
        if (!ok) continue;
        State t{top + 1, s.rows};
        t.rows.push_back(cand);
        std::sort(t.rows.begin(), t.rows.end());
        if (seen.insert(canonical_form(to_pointed(schema, rels, t))).second) next.push_back(std::move(t));
      }
    }
    frontier = std::move(next);
  }
  return visited;
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Witness: return "witness";
    case Verdict::EmptyDefinitive: return "empty-definitive";
    case Verdict::EmptyBounded: return "empty-bounded";
  }
  return "?";
}

nlohmann::json AnalysisResult::to_json() const {
  nlohmann::json j{{"verdict", to_string(verdict)}, {"examined", examined}, {"note", note}};
  if (required_size) j["definitive_size"] = required_size;
  if (witness) j["witness"] = homnet::to_json(*witness);
  return j;
}

template <typename S>
std::uint64_t definitive_size(const Dhn<S>& net, int degree_bound) {
  if (!is_connected(net)) return 0;
  int max_arity = 0;
  for (const auto& [name, ar] : net.schema) max_arity = std::max(max_arity, ar);
  int k = 1;
  for (const auto& l : net.layers)
    for (const auto& q : l.queries) k = std::max(k, q.pattern.db.size());
  const std::uint64_t radius = static_cast<std::uint64_t>(net.layers.size()) * static_cast<std::uint64_t>(k);
  const std::uint64_t branch = static_cast<std::uint64_t>(degree_bound) * static_cast<std::uint64_t>(std::max(1, max_arity - 1));
  constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
  // 1 + branch + ... + branch^radius, and at least degree_bound^radius.
  std::uint64_t total = 1, term = 1;
  for (std::uint64_t i = 0; i < radius; ++i) {
    if (branch != 0 && term > kMax / branch) return kMax;
    term *= branch;
    if (total > kMax - term) return kMax;
    total += term;
  }
  return total;
}

namespace {

template <typename S>
AnalysisResult search(const Dhn<S>& a, const Dhn<S>* b, int degree_bound, int max_size) {
  AnalysisResult res;
  Schema schema = a.schema;
  if (b)
    for (const auto& [n, ar] : b->schema) {
      auto [it, ins] = schema.emplace(n, ar);
      if (!ins && it->second != ar) throw Error("networks disagree on the arity of " + n);
    }
  res.examined = enumerate_connected(schema, degree_bound, max_size, [&](const PointedDatabase& p) {
    bool hit = run(a, p) && (!b || !run(*b, p));
    if (hit) res.witness = p;
    return !hit;
  });
  if (res.witness) {
    res.verdict = Verdict::Witness;
    return res;
  }
  std::uint64_t need = definitive_size(a, degree_bound);
  if (b && need) need = std::max(need, definitive_size(*b, degree_bound));
  if (b && !definitive_size(*b, degree_bound)) need = 0;
  res.required_size = need;
  if (need && static_cast<std::uint64_t>(max_size) >= need) {
    res.verdict = Verdict::EmptyDefinitive;
  } else {
    res.verdict = Verdict::EmptyBounded;
    res.note = need ? "no witness up to the size cap; a definitive answer needs " + std::to_string(need) + " values"
                    : "no witness up to the size cap; networks with disconnected patterns only admit bounded verdicts";
  }
  return res;
}

}  // namespace

template <typename S>
AnalysisResult emptiness_bounded(const Dhn<S>& net, int degree_bound, int max_size) {
  return search<S>(net, nullptr, degree_bound, max_size);
}

template <typename S>
AnalysisResult subsumption_bounded(const Dhn<S>& a, const Dhn<S>& b, int degree_bound, int max_size) {
  return search<S>(a, &b, degree_bound, max_size);
}

template std::uint64_t definitive_size<double>(const Dhn<double>&, int);
template std::uint64_t definitive_size<Rational>(const Dhn<Rational>&, int);
template AnalysisResult emptiness_bounded<double>(const Dhn<double>&, int, int);
template AnalysisResult emptiness_bounded<Rational>(const Dhn<Rational>&, int, int);
template AnalysisResult subsumption_bounded<double>(const Dhn<double>&, const Dhn<double>&, int, int);
template AnalysisResult subsumption_bounded<Rational>(const Dhn<Rational>&, const Dhn<Rational>&, int, int);

}  // namespace homnet
