#include "homnet/hom.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

namespace homnet {

std::string to_string(MatchMode m) {
  switch (m) {
    case MatchMode::Hom: return "hom";
    case MatchMode::Injective: return "inj";
    case MatchMode::Embedding: return "emb";
  }
  return "?";
}

MatchMode parse_match_mode(std::string_view s) {
  if (s == "hom") return MatchMode::Hom;
  if (s == "inj" || s == "injective") return MatchMode::Injective;
  if (s == "emb" || s == "embedding") return MatchMode::Embedding;
  throw Error("unknown match mode: " + std::string(s));
}

struct Matcher::Step {
  int var = -1;
  int gen_row = -1;  // pattern row linking var to an earlier value, or -1
  int gen_bound_pos = -1;
  int gen_var_pos = -1;
  std::vector<int> checks;  // pattern rows completed by binding var
  std::vector<int> distinct_with;
};

Matcher::Matcher(const Database& pattern, const Database& target, MatchMode mode,
                 MatchConstraints constraints)
    : pattern_(pattern), target_(target), mode_(mode), constraints_(std::move(constraints)) {
  for (int r = 0; r < pattern_.num_relations(); ++r) {
    auto t = target_.relation_id(pattern_.relation_name(r));
    if (t && target_.arity(*t) != pattern_.arity(r))
      throw Error("relation " + pattern_.relation_name(r) + " has different arities in pattern and target");
    rel_map_.push_back(t ? *t : -1);
  }
}

std::vector<Matcher::Step> Matcher::make_plan(std::optional<int> first) const {
  const int n = pattern_.size();
  std::vector<char> placed(n, 0);
  std::vector<int> order;
  if (first) {
    order.push_back(*first);
    placed[*first] = 1;
  }
  while (static_cast<int>(order.size()) < n) {
    int best = -1, best_links = -1, best_inc = -1;
    for (int v = 0; v < n; ++v) {
      if (placed[v]) continue;
      int links = 0;
      for (int rid : pattern_.incident(v)) {
        const auto& row = pattern_.rows()[rid];
        if (std::any_of(row.args.begin(), row.args.end(), [&](int a) { return placed[a]; })) ++links;
      }
      int inc = pattern_.degree(v);
      if (links > best_links || (links == best_links && inc > best_inc)) {
        best = v;
        best_links = links;
        best_inc = inc;
      }
    }
    order.push_back(best);
    placed[best] = 1;
  }
  std::vector<int> pos(n);
  for (int i = 0; i < n; ++i) pos[order[i]] = i;
  std::vector<Step> plan;
  for (int i = 0; i < n; ++i) {
    Step s;
    s.var = order[i];
    for (int rid : pattern_.incident(s.var)) {
      const auto& row = pattern_.rows()[rid];
      int last = 0;
      for (int a : row.args) last = std::max(last, pos[a]);
      if (last == i) s.checks.push_back(rid);
      if (s.gen_row < 0 && !(first && i == 0)) {
        for (int p = 0; p < static_cast<int>(row.args.size()); ++p) {
          if (pos[row.args[p]] < i) {
            s.gen_row = rid;
            s.gen_bound_pos = p;
            break;
          }
        }
        if (s.gen_row >= 0) {
          for (int p = 0; p < static_cast<int>(row.args.size()); ++p)
            if (row.args[p] == s.var) {
              s.gen_var_pos = p;
              break;
            }
        }
      }
    }
    for (auto [a, b] : constraints_.distinct) {
      if (a == s.var && pos[b] < i) s.distinct_with.push_back(b);
      if (b == s.var && pos[a] < i) s.distinct_with.push_back(a);
    }
    plan.push_back(std::move(s));
  }
  return plan;
}

void Matcher::for_each(std::optional<std::pair<int, int>> anchor, const Visitor& visit) const {
  // Nullary facts do not depend on the assignment.
  for (const auto& row : pattern_.rows()) {
    if (!row.args.empty()) continue;
    int t = rel_map_[row.relation];
    if (t < 0 || !target_.contains(t, {})) return;
  }
  if (mode_ == MatchMode::Embedding) {
    for (const auto& row : target_.rows()) {
      if (!row.args.empty()) continue;
      auto p = pattern_.relation_id(target_.relation_name(row.relation));
      if (!p || !pattern_.contains(*p, {})) return;
    }
  }
  for (int r = 0; r < pattern_.num_relations(); ++r)
    if (rel_map_[r] < 0 && !pattern_.rows_of(r).empty()) return;

  const int n = pattern_.size();
  if (anchor && (anchor->first < 0 || anchor->first >= n || anchor->second < 0 ||
                 anchor->second >= target_.size()))
    throw Error("anchor outside pattern or target domain");
  auto plan = make_plan(anchor ? std::optional<int>(anchor->first) : std::nullopt);

  std::vector<int> h(n, -1);
  std::vector<int> inv(target_.size(), -1);
  std::vector<int> args;
  std::vector<std::vector<int>> cand_buf(n);
  bool stop = false;

  auto bind_ok = [&](const Step& s, int tv) -> bool {
    if (mode_ != MatchMode::Hom && inv[tv] >= 0) return false;
    for (int other : s.distinct_with)
      if (h[other] == tv) return false;
    auto lab = constraints_.labels.find(s.var);
    if (lab != constraints_.labels.end() && !lab->second(tv)) return false;
    h[s.var] = tv;
    bool ok = true;
    for (int rid : s.checks) {
      const auto& row = pattern_.rows()[rid];
      args.clear();
      for (int a : row.args) args.push_back(h[a]);
      if (!target_.contains(rel_map_[row.relation], args)) {
        ok = false;
        break;
      }
    }
    if (ok && mode_ == MatchMode::Embedding) {
      inv[tv] = s.var;
      for (int rid : target_.incident(tv)) {
        const auto& row = target_.rows()[rid];
        if (!std::all_of(row.args.begin(), row.args.end(), [&](int a) { return inv[a] >= 0; })) continue;
        auto p = pattern_.relation_id(target_.relation_name(row.relation));
        if (!p) {
          ok = false;
          break;
        }
        args.clear();
        for (int a : row.args) args.push_back(inv[a]);
        if (!pattern_.contains(*p, args)) {
          ok = false;
          break;
        }
      }
      inv[tv] = -1;
    }
    if (!ok) h[s.var] = -1;
    return ok;
  };

  std::function<void(std::size_t)> rec = [&](std::size_t d) {
    if (stop) return;
    if (d == plan.size()) {
      if (!visit(h)) stop = true;
      return;
    }
    const Step& s = plan[d];
    auto& cands = cand_buf[d];
    cands.clear();
    if (d == 0 && anchor) {
      cands.push_back(anchor->second);
    } else if (s.gen_row >= 0) {
      const auto& row = pattern_.rows()[s.gen_row];
      int trel = rel_map_[row.relation];
      int bound = h[row.args[s.gen_bound_pos]];
      for (int rid : target_.rows_with(trel, s.gen_bound_pos, bound))
        cands.push_back(target_.rows()[rid].args[s.gen_var_pos]);
      if (row.args.size() > 2) {
        std::sort(cands.begin(), cands.end());
        cands.erase(std::unique(cands.begin(), cands.end()), cands.end());
      }
    } else {
      cands.resize(target_.size());
      std::iota(cands.begin(), cands.end(), 0);
    }
    for (std::size_t ci = 0; ci < cands.size(); ++ci) {
      int tv = cands[ci];
      if (!bind_ok(s, tv)) continue;
      if (mode_ != MatchMode::Hom) inv[tv] = s.var;
      rec(d + 1);
      if (mode_ != MatchMode::Hom) inv[tv] = -1;
      h[s.var] = -1;
      if (stop) return;
    }
  };
  rec(0);
}

std::uint64_t Matcher::count(std::optional<std::pair<int, int>> anchor) const {
  std::uint64_t c = 0;
  for_each(anchor, [&](std::span<const int>) {
    ++c;
    return true;
  });
  return c;
}

std::vector<std::vector<int>> Matcher::all(std::optional<std::pair<int, int>> anchor) const {
  std::vector<std::vector<int>> out;
  for_each(anchor, [&](std::span<const int> h) {
    out.emplace_back(h.begin(), h.end());
    return true;
  });
  return out;
}

std::uint64_t count_matches(const PointedDatabase& pattern, const PointedDatabase& target,
                            MatchMode mode) {
  return Matcher(pattern.db, target.db, mode).count(std::make_pair(pattern.root, target.root));
}

std::uint64_t count_matches(const Database& pattern, const Database& target, MatchMode mode) {
  return Matcher(pattern, target, mode).count();
}

std::vector<std::vector<int>> enumerate_matches(const PointedDatabase& pattern,
                                                const PointedDatabase& target, MatchMode mode) {
  return Matcher(pattern.db, target.db, mode).all(std::make_pair(pattern.root, target.root));
}

std::vector<std::uint64_t> count_all_roots(const PointedDatabase& pattern, const Database& target,
                                           MatchMode mode) {
  Matcher m(pattern.db, target, mode);
  std::vector<std::uint64_t> out;
  for (int v = 0; v < target.size(); ++v) out.push_back(m.count(std::make_pair(pattern.root, v)));
  return out;
}

std::vector<std::vector<int>> set_partitions(int n) {
  std::vector<std::vector<int>> out;
  if (n == 0) return {{}};
  std::vector<int> a(n, 0);
  std::function<void(int, int)> rec = [&](int i, int maxb) {
    if (i == n) {
      out.push_back(a);
      return;
    }
    for (int b = 0; b <= maxb + 1; ++b) {
      a[i] = b;
      rec(i + 1, std::max(maxb, b));
    }
  };
  a[0] = 0;
  rec(1, 0);
  return out;
}

int num_blocks(const std::vector<int>& block_of) {
  int m = -1;
  for (int b : block_of) m = std::max(m, b);
  return m + 1;
}

Database quotient(const Database& db, const std::vector<int>& block_of) {
  if (static_cast<int>(block_of.size()) != db.size()) throw Error("partition size mismatch");
  int k = num_blocks(block_of);
  std::vector<std::string> names(k);
  for (int v = 0; v < db.size(); ++v) {
    auto& nm = names[block_of[v]];
    nm += (nm.empty() ? "" : "|") + db.value(v);
  }
  std::vector<Fact> facts;
  for (const auto& row : db.rows()) {
    Fact f{db.relation_name(row.relation), {}};
    for (int a : row.args) f.args.push_back(names[block_of[a]]);
    facts.push_back(std::move(f));
  }
  return Database(db.schema(), facts, names);
}

PointedDatabase quotient(const PointedDatabase& p, const std::vector<int>& block_of) {
  Database q = quotient(p.db, block_of);
  std::string root;
  for (int v = 0; v < p.db.size(); ++v)
    if (block_of[v] == block_of[p.root]) root += (root.empty() ? "" : "|") + p.db.value(v);
  return PointedDatabase(std::move(q), root);
}

namespace {

// Relabeling search: values are grouped into classes by a cheap invariant; labels
// are assigned class by class and only permutations within a class are tried.
struct Canonicalizer {
  const Database& db;
  std::optional<int> root;
  std::vector<std::vector<int>> classes;
  std::vector<int> label;
  std::vector<int> best_label;
  std::vector<std::vector<int>> best;
  bool have_best = false;

  std::vector<std::vector<int>> encode(const std::vector<int>& lab) const {
    std::vector<std::vector<int>> enc;
    enc.reserve(db.num_facts());
    for (const auto& row : db.rows()) {
      std::vector<int> e{row.relation};
      for (int a : row.args) e.push_back(lab[a]);
      enc.push_back(std::move(e));
    }
    std::sort(enc.begin(), enc.end());
    return enc;
  }

  void run() {
    const int n = db.size();
    std::vector<std::vector<int>> inv(n);
    for (int v = 0; v < n; ++v) {
      auto& s = inv[v];
      s.push_back(root && *root == v ? 0 : 1);
      std::vector<int> counts;
      for (int rid : db.incident(v)) {
        const auto& row = db.rows()[rid];
        int mask = 0;
        for (std::size_t p = 0; p < row.args.size(); ++p)
          if (row.args[p] == v) mask |= 1 << p;
        counts.push_back(row.relation * 4096 + mask);
      }
      std::sort(counts.begin(), counts.end());
      s.insert(s.end(), counts.begin(), counts.end());
    }
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return inv[a] < inv[b]; });
    for (int i = 0; i < n; ++i) {
      if (i == 0 || inv[order[i]] != inv[order[i - 1]]) classes.emplace_back();
      classes.back().push_back(order[i]);
    }
    label.assign(n, -1);
    assign(0, 0);
  }

  void assign(std::size_t ci, int next_label) {
    if (ci == classes.size()) {
      auto enc = encode(label);
      if (!have_best || enc < best) {
        best = std::move(enc);
        best_label = label;
        have_best = true;
      }
      return;
    }
    auto members = classes[ci];
    std::sort(members.begin(), members.end());
    do {
      for (std::size_t i = 0; i < members.size(); ++i) label[members[i]] = next_label + static_cast<int>(i);
      assign(ci + 1, next_label + static_cast<int>(members.size()));
    } while (std::next_permutation(members.begin(), members.end()));
  }

  std::string str() const {
    std::ostringstream os;
    os << db.size() << (root ? "*" : "") << ";";
    for (const auto& e : best) {
      os << db.relation_name(e[0]) << "(";
      for (std::size_t i = 1; i < e.size(); ++i) os << (i > 1 ? "," : "") << e[i];
      os << ")";
    }
    return os.str();
  }
};

}  // namespace

std::string canonical_form(const PointedDatabase& p) {
  Canonicalizer c{p.db, p.root, {}, {}, {}, {}, false};
  c.run();
  return c.str();
}

std::string canonical_form(const Database& db) {
  Canonicalizer c{db, std::nullopt, {}, {}, {}, {}, false};
  c.run();
  return c.str();
}

bool isomorphic(const PointedDatabase& a, const PointedDatabase& b) {
  return canonical_form(a) == canonical_form(b);
}

PointedDatabase canonical_relabel(const PointedDatabase& p) {
  Canonicalizer c{p.db, p.root, {}, {}, {}, {}, false};
  c.run();
  std::vector<std::string> names(p.db.size());
  for (int v = 0; v < p.db.size(); ++v) names[v] = std::to_string(c.best_label[v]);
  std::vector<Fact> facts;
  for (const auto& row : p.db.rows()) {
    Fact f{p.db.relation_name(row.relation), {}};
    for (int a : row.args) f.args.push_back(names[a]);
    facts.push_back(std::move(f));
  }
  return PointedDatabase(Database(p.db.schema(), facts, names), names[p.root]);
}

std::vector<Database::Row> all_possible_rows(const Schema& schema, int num_values) {
  std::vector<Database::Row> out;
  int r = 0;
  for (const auto& [name, ar] : schema) {
    std::vector<int> t(ar, 0);
    for (;;) {
      out.push_back({r, t});
      int i = ar - 1;
      while (i >= 0 && t[i] == num_values - 1) t[i--] = 0;
      if (i < 0) break;
      ++t[i];
    }
    ++r;
  }
  if (num_values == 0) {
    std::vector<Database::Row> nullary;
    for (const auto& row : out)
      if (row.args.empty()) nullary.push_back(row);
    return nullary;
  }
  return out;
}

}  // namespace homnet
