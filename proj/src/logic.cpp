#include "homnet/logic.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

namespace homnet {

namespace {

const std::set<std::string>& keywords() {
  static const std::set<std::string> k{"not", "or",     "and",    "exists", "exists>=", "graded", "ratio>=",
                                       "ratio>", "count=", "neq", "true",   "false"};
  return k;
}

bool is_relation_atom(const Sexp& s) {
  return s.is_list() && !s.list.empty() && s.list[0].is_atom && !keywords().count(s.list[0].atom) &&
         std::all_of(s.list.begin() + 1, s.list.end(), [](const Sexp& a) { return a.is_atom; });
}

Atom atom_of(const Sexp& s) {
  Atom a{s.list[0].atom, {}};
  for (std::size_t i = 1; i < s.list.size(); ++i) a.args.push_back(s.list[i].atom);
  return a;
}

Sexp atom_sexp(const Atom& a) {
  std::vector<Sexp> l{Sexp::make_atom(a.relation)};
  for (const auto& x : a.args) l.push_back(Sexp::make_atom(x));
  return Sexp::make_list(std::move(l));
}

[[noreturn]] void fail(const std::string& msg, const Sexp& s) {
  throw Error("formula syntax: " + msg + " in " + to_string(s));
}

std::vector<std::string> var_list(const Sexp& s) {
  if (!s.is_list()) fail("expected a variable list", s);
  std::vector<std::string> vars;
  for (const auto& v : s.list) {
    if (!v.is_atom) fail("variables must be symbols", s);
    if (std::find(vars.begin(), vars.end(), v.atom) != vars.end()) fail("repeated variable " + v.atom, s);
    vars.push_back(v.atom);
  }
  return vars;
}

std::uint64_t parse_count(const Sexp& s) {
  if (!s.is_atom) fail("expected a count", s);
  try {
    std::size_t used = 0;
    long long k = std::stoll(s.atom, &used);
    if (used != s.atom.size() || k < 1) fail("count must be a positive integer", s);
    return static_cast<std::uint64_t>(k);
  } catch (const std::logic_error&) {
    fail("count must be a positive integer", s);
  }
}

std::vector<const Sexp*> conjunct_items(const Sexp& body) {
  std::vector<const Sexp*> items;
  if (body.is_atom && body.atom == "true") return items;
  if (body.head() == "and") {
    for (std::size_t i = 1; i < body.list.size(); ++i) items.push_back(&body.list[i]);
  } else {
    items.push_back(&body);
  }
  return items;
}

void add_unary(Block& b, FormulaPtr f, const Sexp& at) {
  auto fv = free_variables(*f);
  if (fv.size() > 1) fail("subformula is not unary", at);
  b.unary.push_back(Conjunct{fv.empty() ? std::string() : *fv.begin(), std::move(f)});
}

Block parse_body(const Sexp& body, std::vector<std::string> vars) {
  Block b;
  b.vars = std::move(vars);
  for (const Sexp* item : conjunct_items(body)) {
    if (is_relation_atom(*item)) {
      b.atoms.push_back(atom_of(*item));
    } else if (item->head() == "not" && item->list.size() == 2 && is_relation_atom(item->list[1])) {
      b.negated.push_back(atom_of(item->list[1]));
    } else if (item->head() == "neq") {
      if (item->list.size() != 3 || !item->list[1].is_atom || !item->list[2].is_atom) fail("neq takes two variables", *item);
      b.distinct.emplace_back(item->list[1].atom, item->list[2].atom);
    } else {
      add_unary(b, formula_from_sexp(*item), *item);
    }
  }
  return b;
}

std::set<std::string> block_free(const Block& b) {
  std::set<std::string> names;
  for (const auto& a : b.atoms) names.insert(a.args.begin(), a.args.end());
  for (const auto& a : b.negated) names.insert(a.args.begin(), a.args.end());
  for (const auto& [u, v] : b.distinct) {
    names.insert(u);
    names.insert(v);
  }
  for (const auto& c : b.unary)
    if (!c.var.empty()) names.insert(c.var);
  for (const auto& v : b.vars) names.erase(v);
  return names;
}

FormulaPtr checked_unary(FormulaPtr f, const Sexp& at) {
  if (free_variables(*f).size() > 1) fail("formula has more than one free variable", at);
  return f;
}

}  // namespace

FormulaPtr make_true() { return make_exists(Block{}); }
FormulaPtr make_false() { return make_not(make_true()); }

FormulaPtr make_not(FormulaPtr f) {
  auto n = std::make_shared<Formula>();
  n->kind = FormulaKind::Not;
  n->children = {std::move(f)};
  return n;
}

FormulaPtr make_or(std::vector<FormulaPtr> fs) {
  if (fs.size() == 1) return fs[0];
  if (fs.empty()) return make_false();
  auto n = std::make_shared<Formula>();
  n->kind = FormulaKind::Or;
  n->children = std::move(fs);
  return n;
}

FormulaPtr make_and(std::vector<FormulaPtr> fs) {
  if (fs.size() == 1) return fs[0];
  if (fs.empty()) return make_true();
  auto n = std::make_shared<Formula>();
  n->kind = FormulaKind::And;
  n->children = std::move(fs);
  return n;
}

FormulaPtr make_exists(Block b) {
  auto n = std::make_shared<Formula>();
  n->kind = FormulaKind::Exists;
  n->block = std::move(b);
  return n;
}

FormulaPtr make_count_exists(std::uint64_t k, Block b) {
  auto n = std::make_shared<Formula>();
  n->kind = FormulaKind::CountExists;
  n->count = k;
  n->block = std::move(b);
  return n;
}

FormulaPtr make_ratio(Comparison cmp, Rational t, Block b) {
  auto n = std::make_shared<Formula>();
  n->kind = FormulaKind::Ratio;
  n->cmp = cmp;
  n->threshold = std::move(t);
  n->block = std::move(b);
  return n;
}

FormulaPtr make_atom_formula(Atom a) {
  Block b;
  b.atoms.push_back(std::move(a));
  return make_exists(std::move(b));
}

FormulaPtr formula_from_sexp(const Sexp& s) {
  if (s.is_atom) {
    if (s.atom == "true") return make_true();
    if (s.atom == "false") return make_false();
    fail("unexpected symbol", s);
  }
  if (is_relation_atom(s)) return checked_unary(make_atom_formula(atom_of(s)), s);
  const auto& h = s.head();
  const auto& l = s.list;
  if (h == "not") {
    if (l.size() != 2) fail("not takes one argument", s);
    return make_not(formula_from_sexp(l[1]));
  }
  if (h == "or" || h == "and") {
    if (l.size() < 3) fail(h + " takes at least two arguments", s);
    std::vector<FormulaPtr> fs;
    for (std::size_t i = 1; i < l.size(); ++i) fs.push_back(formula_from_sexp(l[i]));
    return checked_unary(h == "or" ? make_or(std::move(fs)) : make_and(std::move(fs)), s);
  }
  if (h == "exists") {
    if (l.size() != 3) fail("exists takes a variable list and a body", s);
    return checked_unary(make_exists(parse_body(l[2], var_list(l[1]))), s);
  }
  if (h == "exists>=") {
    if (l.size() != 4) fail("exists>= takes a count, a variable list and a body", s);
    return checked_unary(make_count_exists(parse_count(l[1]), parse_body(l[3], var_list(l[2]))), s);
  }
  if (h == "ratio>=" || h == "ratio>") {
    if (l.size() != 5) fail(h + " takes a threshold, variables, a unary part and an atom part", s);
    if (!l[1].is_atom) fail("threshold must be a number", s);
    Rational t = parse_rational(l[1].atom);
    Block b;
    b.vars = var_list(l[2]);
    for (const Sexp* item : conjunct_items(l[3])) add_unary(b, formula_from_sexp(*item), *item);
    for (const Sexp* item : conjunct_items(l[4])) {
      if (!is_relation_atom(*item)) fail("the second part of a ratio quantifier holds atoms only", *item);
      b.atoms.push_back(atom_of(*item));
    }
    return checked_unary(make_ratio(h == "ratio>" ? Comparison::Greater : Comparison::GreaterEqual, t, std::move(b)), s);
  }
  if (h == "count=") {
    if (l.size() != 4) fail("count= takes variables and two bodies", s);
    auto n = std::make_shared<Formula>();
    n->kind = FormulaKind::CountEqual;
    auto vars = var_list(l[1]);
    n->block = parse_body(l[2], vars);
    n->other = parse_body(l[3], vars);
    return checked_unary(n, s);
  }
  if (h == "graded") {
    if (l.size() != 3 || !l[1].is_list()) fail("graded takes ((var count)...) and a body", s);
    auto n = std::make_shared<Formula>();
    n->kind = FormulaKind::Graded;
    for (const auto& vc : l[1].list) {
      if (!vc.is_list() || vc.list.size() != 2 || !vc.list[0].is_atom) fail("expected (var count)", vc);
      n->block.vars.push_back(vc.list[0].atom);
      n->counts.push_back(parse_count(vc.list[1]));
    }
    std::vector<const Sexp*> bodies;
    if (l[2].head() == "or")
      for (std::size_t i = 1; i < l[2].list.size(); ++i) bodies.push_back(&l[2].list[i]);
    else
      bodies.push_back(&l[2]);
    for (const Sexp* b : bodies) n->disjuncts.push_back(parse_body(*b, n->block.vars));
    return checked_unary(n, s);
  }
  fail("unknown construct", s);
}

FormulaPtr parse_formula(std::string_view text) { return formula_from_sexp(parse_sexp(text)); }

namespace {

bool is_atom_formula(const Formula& f) {
  return f.kind == FormulaKind::Exists && f.block.vars.empty() && f.block.atoms.size() == 1 &&
         f.block.negated.empty() && f.block.distinct.empty() && f.block.unary.empty();
}

Sexp explicit_atom(const Formula& f) {
  return Sexp::make_list({Sexp::make_atom("exists"), Sexp::make_list({}), atom_sexp(f.block.atoms[0])});
}

// Unary conjuncts that would read back as literals are written in explicit form.
Sexp conjunct_sexp(const Formula& f) {
  if (is_atom_formula(f)) return explicit_atom(f);
  if (f.kind == FormulaKind::Not && is_atom_formula(*f.children[0]))
    return Sexp::make_list({Sexp::make_atom("not"), explicit_atom(*f.children[0])});
  return formula_to_sexp(f);
}

Sexp items_sexp(std::vector<Sexp> items) {
  if (items.empty()) return Sexp::make_atom("true");
  if (items.size() == 1) return items[0];
  items.insert(items.begin(), Sexp::make_atom("and"));
  return Sexp::make_list(std::move(items));
}

Sexp body_sexp(const Block& b) {
  std::vector<Sexp> items;
  for (const auto& a : b.atoms) items.push_back(atom_sexp(a));
  for (const auto& a : b.negated) items.push_back(Sexp::make_list({Sexp::make_atom("not"), atom_sexp(a)}));
  for (const auto& [u, v] : b.distinct)
    items.push_back(Sexp::make_list({Sexp::make_atom("neq"), Sexp::make_atom(u), Sexp::make_atom(v)}));
  for (const auto& c : b.unary) items.push_back(conjunct_sexp(*c.formula));
  return items_sexp(std::move(items));
}

Sexp vars_sexp(const std::vector<std::string>& vars) {
  std::vector<Sexp> l;
  for (const auto& v : vars) l.push_back(Sexp::make_atom(v));
  return Sexp::make_list(std::move(l));
}

}  // namespace

Sexp formula_to_sexp(const Formula& f) {
  switch (f.kind) {
    case FormulaKind::Not: return Sexp::make_list({Sexp::make_atom("not"), formula_to_sexp(*f.children[0])});
    case FormulaKind::Or:
    case FormulaKind::And: {
      std::vector<Sexp> l{Sexp::make_atom(f.kind == FormulaKind::Or ? "or" : "and")};
      for (const auto& c : f.children) l.push_back(formula_to_sexp(*c));
      return Sexp::make_list(std::move(l));
    }
    case FormulaKind::Exists: {
      const auto& b = f.block;
      if (is_atom_formula(f)) return atom_sexp(b.atoms[0]);
      if (b.vars.empty() && b.atoms.empty() && b.negated.empty() && b.distinct.empty() && b.unary.empty())
        return Sexp::make_atom("true");
      return Sexp::make_list({Sexp::make_atom("exists"), vars_sexp(b.vars), body_sexp(b)});
    }
    case FormulaKind::CountExists:
      return Sexp::make_list({Sexp::make_atom("exists>="), Sexp::make_atom(std::to_string(f.count)),
                              vars_sexp(f.block.vars), body_sexp(f.block)});
    case FormulaKind::Ratio: {
      std::vector<Sexp> mu, nu;
      for (const auto& c : f.block.unary) mu.push_back(formula_to_sexp(*c.formula));
      for (const auto& a : f.block.atoms) nu.push_back(atom_sexp(a));
      return Sexp::make_list({Sexp::make_atom(f.cmp == Comparison::Greater ? "ratio>" : "ratio>="),
                              Sexp::make_atom(to_string(f.threshold)), vars_sexp(f.block.vars),
                              items_sexp(std::move(mu)), items_sexp(std::move(nu))});
    }
    case FormulaKind::CountEqual:
      return Sexp::make_list(
          {Sexp::make_atom("count="), vars_sexp(f.block.vars), body_sexp(f.block), body_sexp(f.other)});
    case FormulaKind::Graded: {
      std::vector<Sexp> vc;
      for (std::size_t i = 0; i < f.block.vars.size(); ++i)
        vc.push_back(Sexp::make_list({Sexp::make_atom(f.block.vars[i]), Sexp::make_atom(std::to_string(f.counts[i]))}));
      std::vector<Sexp> ds;
      for (const auto& d : f.disjuncts) ds.push_back(body_sexp(d));
      Sexp body = ds.size() == 1 ? ds[0] : [&] {
        ds.insert(ds.begin(), Sexp::make_atom("or"));
        return Sexp::make_list(std::move(ds));
      }();
      return Sexp::make_list({Sexp::make_atom("graded"), Sexp::make_list(std::move(vc)), body});
    }
  }
  return Sexp::make_atom("true");
}

std::string print_formula(const Formula& f) { return to_string(formula_to_sexp(f)); }

std::set<std::string> free_variables(const Formula& f) {
  std::set<std::string> out;
  switch (f.kind) {
    case FormulaKind::Not:
    case FormulaKind::Or:
    case FormulaKind::And:
      for (const auto& c : f.children) {
        auto s = free_variables(*c);
        out.insert(s.begin(), s.end());
      }
      break;
    case FormulaKind::Exists:
    case FormulaKind::CountExists:
    case FormulaKind::Ratio: out = block_free(f.block); break;
    case FormulaKind::CountEqual: {
      out = block_free(f.block);
      auto s = block_free(f.other);
      out.insert(s.begin(), s.end());
      break;
    }
    case FormulaKind::Graded:
      for (const auto& d : f.disjuncts) {
        Block b = d;
        b.vars = f.block.vars;
        auto s = block_free(b);
        out.insert(s.begin(), s.end());
      }
      break;
  }
  return out;
}

std::optional<std::string> free_variable(const Formula& f) {
  auto s = free_variables(f);
  if (s.size() > 1) throw Error("formula has more than one free variable");
  if (s.empty()) return std::nullopt;
  return *s.begin();
}

namespace {

void collect_schema(const Formula& f, Schema& s);

void collect_block(const Block& b, Schema& s) {
  auto add = [&](const Atom& a) {
    auto [it, inserted] = s.emplace(a.relation, static_cast<int>(a.args.size()));
    if (!inserted && it->second != static_cast<int>(a.args.size()))
      throw Error("relation " + a.relation + " used with different arities");
  };
  for (const auto& a : b.atoms) add(a);
  for (const auto& a : b.negated) add(a);
  for (const auto& c : b.unary) collect_schema(*c.formula, s);
}

void collect_schema(const Formula& f, Schema& s) {
  for (const auto& c : f.children) collect_schema(*c, s);
  collect_block(f.block, s);
  collect_block(f.other, s);
  for (const auto& d : f.disjuncts) collect_block(d, s);
}

}  // namespace

Schema formula_schema(const Formula& f) {
  Schema s;
  collect_schema(f, s);
  return s;
}

// ---------------------------------------------------------------------------
// Evaluation

struct Evaluator::Compiled {
  struct Lit {
    int rel;  // -1: relation absent from the database
    std::vector<int> slots;
    bool negated;
  };
  struct Gen {
    int rel = -1, bound_pos = -1, bound_slot = -1, var_pos = -1;
    bool dedupe = false;
  };
  int n_slots = 1;
  std::vector<int> order;                 // slot bound at each level (level 0 = free variable)
  std::vector<std::vector<Lit>> lits;     // checked once the level's slot is bound
  std::vector<std::vector<std::pair<int, int>>> distinct;
  std::vector<std::vector<std::pair<int, const Formula*>>> unary;
  std::vector<Gen> gens;
};

const Evaluator::Compiled& Evaluator::compiled(const Block& b, const std::string& free_name) {
  auto key = std::make_pair(&b, free_name);
  auto it = compiled_.find(key);
  if (it != compiled_.end()) return *it->second;
  auto c = std::make_shared<Compiled>();
  c->n_slots = 1 + static_cast<int>(b.vars.size());
  auto slot_of = [&](const std::string& name) -> int {
    for (std::size_t i = b.vars.size(); i-- > 0;)
      if (b.vars[i] == name) return static_cast<int>(i) + 1;
    if (name == free_name || name.empty()) return 0;
    throw Error("unbound variable " + name);
  };
  std::vector<Compiled::Lit> lits;
  auto add_lit = [&](const Atom& a, bool neg) {
    Compiled::Lit l{-1, {}, neg};
    auto r = db_.relation_id(a.relation);
    if (r) {
      if (db_.arity(*r) != static_cast<int>(a.args.size())) throw Error("arity mismatch for relation " + a.relation);
      l.rel = *r;
    }
    for (const auto& x : a.args) l.slots.push_back(slot_of(x));
    lits.push_back(std::move(l));
  };
  for (const auto& a : b.atoms) add_lit(a, false);
  for (const auto& a : b.negated) add_lit(a, true);

  // Binding order: prefer variables linked by a positive atom to bound ones.
  std::vector<char> placed(c->n_slots, 0);
  placed[0] = 1;
  c->order.push_back(0);
  while (static_cast<int>(c->order.size()) < c->n_slots) {
    int pick = -1;
    for (int s = 1; s < c->n_slots && pick < 0; ++s) {
      if (placed[s]) continue;
      for (const auto& l : lits) {
        if (l.negated || l.rel < 0) continue;
        bool has_s = std::find(l.slots.begin(), l.slots.end(), s) != l.slots.end();
        bool has_bound = std::any_of(l.slots.begin(), l.slots.end(), [&](int t) { return placed[t] && t != 0; }) ||
                         (std::find(l.slots.begin(), l.slots.end(), 0) != l.slots.end() && !free_name.empty());
        if (has_s && has_bound) {
          pick = s;
          break;
        }
      }
    }
    if (pick < 0)
      for (int s = 1; s < c->n_slots; ++s)
        if (!placed[s]) {
          pick = s;
          break;
        }
    placed[pick] = 1;
    c->order.push_back(pick);
  }
  std::vector<int> level_of(c->n_slots);
  for (int i = 0; i < c->n_slots; ++i) level_of[c->order[i]] = i;
  c->lits.assign(c->n_slots, {});
  c->distinct.assign(c->n_slots, {});
  c->unary.assign(c->n_slots, {});
  c->gens.assign(c->n_slots, {});
  for (auto& l : lits) {
    int lv = 0;
    for (int s : l.slots) lv = std::max(lv, level_of[s]);
    c->lits[lv].push_back(l);
  }
  for (const auto& [u, v] : b.distinct) {
    int su = slot_of(u), sv = slot_of(v);
    c->distinct[std::max(level_of[su], level_of[sv])].emplace_back(su, sv);
  }
  for (const auto& cj : b.unary) {
    int s = slot_of(cj.var);
    c->unary[level_of[s]].emplace_back(s, cj.formula.get());
  }
  for (int lv = 1; lv < c->n_slots; ++lv) {
    int s = c->order[lv];
    for (const auto& l : lits) {
      if (l.negated || l.rel < 0) continue;
      int vp = -1, bp = -1;
      for (int p = 0; p < static_cast<int>(l.slots.size()); ++p) {
        if (l.slots[p] == s && vp < 0) vp = p;
        int t = l.slots[p];
        if (t != s && level_of[t] < lv && (t != 0 || !free_name.empty()) && bp < 0) bp = p;
      }
      if (vp >= 0 && bp >= 0) {
        c->gens[lv] = Compiled::Gen{l.rel, bp, l.slots[bp], vp, l.slots.size() > 2};
        break;
      }
    }
  }
  compiled_[key] = c;
  return *c;
}

std::uint64_t Evaluator::count(const Compiled& c, int free_value, std::uint64_t limit, bool with_unary) {
  std::vector<int> asg(c.n_slots, -1);
  asg[0] = free_value;
  std::vector<int> args;
  auto level_ok = [&](int lv) {
    for (const auto& l : c.lits[lv]) {
      bool present = false;
      if (l.rel >= 0) {
        args.clear();
        for (int s : l.slots) args.push_back(asg[s]);
        present = db_.contains(l.rel, args);
      }
      if (present == l.negated) return false;
    }
    for (auto [a, b] : c.distinct[lv])
      if (asg[a] == asg[b]) return false;
    if (with_unary)
      for (auto [s, f] : c.unary[lv])
        if (!holds(*f, asg[s])) return false;
    return true;
  };
  if (!level_ok(0)) return 0;
  std::uint64_t found = 0;
  std::vector<int> cands;
  std::function<void(int)> rec = [&](int lv) {
    if (found >= limit) return;
    if (lv == c.n_slots) {
      ++found;
      return;
    }
    const auto& g = c.gens[lv];
    std::vector<int> local;
    if (g.rel >= 0) {
      for (int rid : db_.rows_with(g.rel, g.bound_pos, asg[g.bound_slot])) local.push_back(db_.rows()[rid].args[g.var_pos]);
      if (g.dedupe) {
        std::sort(local.begin(), local.end());
        local.erase(std::unique(local.begin(), local.end()), local.end());
      }
    } else {
      local.resize(db_.size());
      std::iota(local.begin(), local.end(), 0);
    }
    int s = c.order[lv];
    for (int v : local) {
      asg[s] = v;
      if (level_ok(lv)) rec(lv + 1);
      if (found >= limit) break;
    }
    asg[s] = -1;
  };
  rec(1);
  return found;
}

bool Evaluator::graded(const Formula& f, const std::string& free_name, std::vector<int>& asg, std::size_t level) {
  const auto& vars = f.block.vars;
  if (level == vars.size()) {
    for (const auto& d : f.disjuncts) {
      Block b = d;
      b.vars = vars;
      // Evaluate the disjunct with every variable pinned by the assignment.
      bool ok = true;
      auto value_of = [&](const std::string& name) -> int {
        for (std::size_t i = vars.size(); i-- > 0;)
          if (vars[i] == name) return asg[i + 1];
        if (name == free_name || name.empty()) return asg[0];
        throw Error("unbound variable " + name);
      };
      auto lit = [&](const Atom& a) {
        auto r = db_.relation_id(a.relation);
        if (!r) return false;
        std::vector<int> args;
        for (const auto& x : a.args) args.push_back(value_of(x));
        return db_.contains(*r, args);
      };
      for (const auto& a : d.atoms) ok = ok && lit(a);
      for (const auto& a : d.negated) ok = ok && !lit(a);
      for (const auto& [u, v] : d.distinct) ok = ok && value_of(u) != value_of(v);
      for (const auto& cj : d.unary) ok = ok && holds(*cj.formula, value_of(cj.var));
      if (ok) return true;
    }
    return false;
  }
  std::uint64_t hits = 0;
  for (int v = 0; v < db_.size(); ++v) {
    asg[level + 1] = v;
    if (graded(f, free_name, asg, level + 1) && ++hits >= f.counts[level]) return true;
  }
  return false;
}

bool Evaluator::holds(const Formula& f, int value) {
  auto fit = free_.find(&f);
  if (fit == free_.end()) fit = free_.emplace(&f, free_variable(f)).first;
  const auto& fv = fit->second;
  const int key_value = fv ? value : -1;
  auto key = std::make_pair(&f, key_value);
  if (auto it = memo_.find(key); it != memo_.end()) return it->second;
  const std::string free_name = fv.value_or("");
  bool result = false;
  constexpr auto kAll = std::numeric_limits<std::uint64_t>::max();
  switch (f.kind) {
    case FormulaKind::Not: result = !holds(*f.children[0], value); break;
    case FormulaKind::Or:
      result = std::any_of(f.children.begin(), f.children.end(), [&](const FormulaPtr& c) { return holds(*c, value); });
      break;
    case FormulaKind::And:
      result = std::all_of(f.children.begin(), f.children.end(), [&](const FormulaPtr& c) { return holds(*c, value); });
      break;
    case FormulaKind::Exists: result = count(compiled(f.block, free_name), value, 1, true) >= 1; break;
    case FormulaKind::CountExists:
      result = count(compiled(f.block, free_name), value, f.count, true) >= f.count;
      break;
    case FormulaKind::Ratio: {
      const auto& c = compiled(f.block, free_name);
      std::uint64_t den = count(c, value, kAll, false);
      if (den == 0) {
        result = f.cmp == Comparison::GreaterEqual;
      } else {
        Rational r = Rational(static_cast<long long>(count(c, value, kAll, true))) / Rational(static_cast<long long>(den));
        result = compare(r, f.cmp, f.threshold);
      }
      break;
    }
    case FormulaKind::CountEqual:
      result = count(compiled(f.block, free_name), value, kAll, true) ==
               count(compiled(f.other, free_name), value, kAll, true);
      break;
    case FormulaKind::Graded: {
      std::vector<int> asg(f.block.vars.size() + 1, -1);
      asg[0] = value;
      result = graded(f, free_name, asg, 0);
      break;
    }
  }
  memo_[key] = result;
  return result;
}

bool eval(const Formula& f, const PointedDatabase& p) { return Evaluator(p.db).holds(f, p.root); }

std::vector<bool> eval_all(const Formula& f, const Database& db) {
  Evaluator e(db);
  std::vector<bool> out;
  for (int v = 0; v < db.size(); ++v) out.push_back(e.holds(f, v));
  return out;
}

// ---------------------------------------------------------------------------
// Classification

namespace {

bool block_connected(const Block& b, const std::string& x) {
  std::vector<std::string> names{x};
  names.insert(names.end(), b.vars.begin(), b.vars.end());
  if (b.vars.empty()) return true;
  auto idx = [&](const std::string& n) -> int {
    for (std::size_t i = names.size(); i-- > 0;)
      if (names[i] == n) return static_cast<int>(i);
    return 0;
  };
  std::vector<int> parent(names.size());
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int a) { return parent[a] == a ? a : parent[a] = find(parent[a]); };
  std::vector<char> seen(names.size(), 0);
  for (const auto& a : b.atoms) {
    int first = -1;
    for (const auto& arg : a.args) {
      int i = idx(arg);
      seen[i] = 1;
      if (first < 0)
        first = i;
      else
        parent[find(i)] = find(first);
    }
  }
  for (std::size_t i = 0; i < names.size(); ++i)
    if (!seen[i] || find(static_cast<int>(i)) != find(0)) return false;
  return true;
}

struct FormulaScan {
  FormulaInfo info;
  bool has_count = false, has_graded = false, has_neg_lit = false, has_ratio = false, has_count_eq = false;
  bool connected = true;

  int visit(const Formula& f) {
    auto x = free_variable(f).value_or("");
    int depth = 0;
    auto visit_block = [&](const Block& b) {
      if (!block_connected(b, x)) connected = false;
      for (const auto& a : b.negated) {
        std::set<std::string> args(a.args.begin(), a.args.end());
        if (args.size() > 1) has_neg_lit = true;
      }
      if (!b.distinct.empty()) has_neg_lit = true;
      info.width = std::max(info.width, static_cast<int>(b.vars.size()));
      int inner = 0;
      for (const auto& c : b.unary) inner = std::max(inner, visit(*c.formula));
      return inner + (b.vars.empty() ? 0 : 1);
    };
    switch (f.kind) {
      case FormulaKind::Not:
      case FormulaKind::Or:
      case FormulaKind::And:
        for (const auto& c : f.children) depth = std::max(depth, visit(*c));
        break;
      case FormulaKind::Exists:
        info.counting_bound = std::max<std::uint64_t>(info.counting_bound, 1);
        depth = visit_block(f.block);
        break;
      case FormulaKind::CountExists:
        has_count = true;
        info.counting_bound = std::max(info.counting_bound, f.count);
        depth = visit_block(f.block);
        break;
      case FormulaKind::Ratio:
        has_ratio = true;
        depth = visit_block(f.block);
        break;
      case FormulaKind::CountEqual:
        has_count_eq = true;
        depth = std::max(visit_block(f.block), visit_block(f.other));
        break;
      case FormulaKind::Graded:
        has_graded = true;
        for (auto k : f.counts) info.counting_bound = std::max(info.counting_bound, k);
        for (const auto& d : f.disjuncts) {
          Block b = d;
          b.vars = f.block.vars;
          depth = std::max(depth, visit_block(b));
        }
        break;
    }
    info.depth = std::max(info.depth, depth);
    return depth;
  }
};

}  // namespace

FormulaInfo classify(const Formula& f) {
  FormulaScan c;
  c.visit(f);
  FormulaInfo info = c.info;
  const bool base = !c.has_ratio && !c.has_count_eq;
  info.hml = base && !c.has_count && !c.has_graded && !c.has_neg_lit;
  info.ghml_minus = base && !c.has_graded && !c.has_neg_lit;
  info.ghml = base && !c.has_neg_lit;
  info.eml = base && !c.has_count && !c.has_graded;
  info.rhml = !c.has_count && !c.has_graded && !c.has_neg_lit && !c.has_count_eq;
  info.connected = c.connected;
  return info;
}

// ---------------------------------------------------------------------------
// Strict normal form

namespace {

struct Strictifier {
  const StrictifyOptions& opts;
  Schema schema;

  FormulaPtr go(const FormulaPtr& f, const std::string& fallback_free) {
    switch (f->kind) {
      case FormulaKind::Not: return make_not(go(f->children[0], fallback_free));
      case FormulaKind::Or:
      case FormulaKind::And: {
        std::vector<FormulaPtr> cs;
        for (const auto& c : f->children) cs.push_back(go(c, fallback_free));
        return f->kind == FormulaKind::Or ? make_or(std::move(cs)) : make_and(std::move(cs));
      }
      case FormulaKind::Exists: return block(*f, fallback_free);
      default: throw Error("strict normal form is defined for existential formulas with literals only");
    }
  }

  FormulaPtr block(const Formula& f, const std::string& fallback_free) {
    const Block& b = f.block;
    std::string x = free_variable(f).value_or("");
    if (x.empty()) {
      x = fallback_free;
      while (std::find(b.vars.begin(), b.vars.end(), x) != b.vars.end()) x += "_";
    }
    std::vector<std::string> names{x};
    names.insert(names.end(), b.vars.begin(), b.vars.end());
    const int n = static_cast<int>(names.size());
    auto idx = [&](const std::string& s) -> int {
      for (int i = n; i-- > 1;)
        if (names[i] == s) return i;
      return 0;
    };
    std::vector<FormulaPtr> out;
    for (const auto& part : set_partitions(n)) {
      // Blocks of variables forced equal; block 0 always contains x.
      bool ok = true;
      for (const auto& [u, v] : b.distinct)
        if (part[idx(u)] == part[idx(v)]) ok = false;
      if (!ok) continue;
      const int k = num_blocks(part);
      std::vector<std::string> rep(k);
      for (int i = 0; i < n; ++i)
        if (rep[part[i]].empty()) rep[part[i]] = names[i];
      auto lit_key = [&](const Atom& a) {
        Database::Row r{0, {}};
        int ri = 0;
        for (const auto& [name, ar] : schema) {
          if (name == a.relation) break;
          ++ri;
        }
        r.relation = ri;
        for (const auto& arg : a.args) r.args.push_back(part[idx(arg)]);
        return r;
      };
      std::map<Database::Row, int> forced;  // 1 present, 0 absent
      auto force = [&](const Database::Row& r, int val) {
        auto [it, ins] = forced.emplace(r, val);
        if (!ins && it->second != val) ok = false;
      };
      auto rels = std::vector<std::pair<std::string, int>>(schema.begin(), schema.end());
      auto apply_undirected = [&](const Database::Row& r, int val) {
        force(r, val);
        if (opts.undirected && r.args.size() == 2) {
          if (r.args[0] == r.args[1] && val == 1) ok = false;
          force(Database::Row{r.relation, {r.args[1], r.args[0]}}, val);
        }
      };
      for (const auto& a : b.atoms) apply_undirected(lit_key(a), 1);
      for (const auto& a : b.negated) apply_undirected(lit_key(a), 0);
      if (opts.undirected)
        for (int ri = 0; ri < static_cast<int>(rels.size()); ++ri)
          if (rels[ri].second == 2)
            for (int v = 0; v < k; ++v) force(Database::Row{ri, {v, v}}, 0);
      if (!ok) continue;
      // Free atoms: those not forced; under the undirected reading a pair of
      // directions is one choice.
      std::vector<std::vector<Database::Row>> choices;
      for (const auto& r : all_possible_rows(schema, k)) {
        if (forced.count(r)) continue;
        if (opts.undirected && r.args.size() == 2) {
          if (r.args[0] > r.args[1]) continue;
          choices.push_back({r, Database::Row{r.relation, {r.args[1], r.args[0]}}});
        } else {
          choices.push_back({r});
        }
      }
      if (choices.size() > 40 || out.size() + (std::size_t{1} << choices.size()) > opts.max_blocks)
        throw Error("strict normal form exceeds the block limit");
      std::vector<FormulaPtr> unary_strict;
      for (const auto& c : b.unary) unary_strict.push_back(go(c.formula, "x"));
      for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << choices.size()); ++mask) {
        std::map<Database::Row, int> full = forced;
        for (std::size_t i = 0; i < choices.size(); ++i)
          for (const auto& r : choices[i]) full[r] = (mask >> i & 1) ? 1 : 0;
        Block nb;
        for (int i = 1; i < k; ++i) nb.vars.push_back(rep[i]);
        for (const auto& [r, val] : full) {
          Atom a{rels[r.relation].first, {}};
          for (int arg : r.args) a.args.push_back(rep[arg]);
          (val ? nb.atoms : nb.negated).push_back(std::move(a));
        }
        for (int i = 0; i < k; ++i)
          for (int j = i + 1; j < k; ++j) nb.distinct.emplace_back(rep[i], rep[j]);
        for (std::size_t ci = 0; ci < b.unary.size(); ++ci) {
          const auto& c = b.unary[ci];
          std::string at = c.var.empty() ? rep[0] : rep[part[idx(c.var)]];
          nb.unary.push_back(Conjunct{at, rename_free(unary_strict[ci], at)});
        }
        out.push_back(make_exists(std::move(nb)));
      }
    }
    return make_or(std::move(out));
  }

  // The strict form of a closed subformula is placed on a block variable, so its
  // free variable takes that variable's name.
  FormulaPtr rename_free(const FormulaPtr& f, const std::string& name) {
    auto fv = free_variable(*f);
    if (fv && *fv == name) return f;
    if (!fv) return f;
    return substitute(f, *fv, name);
  }

  FormulaPtr substitute(const FormulaPtr& f, const std::string& from, const std::string& to) {
    auto n = std::make_shared<Formula>(*f);
    for (auto& c : n->children) c = substitute(c, from, to);
    auto fix_block = [&](Block& b) {
      if (std::find(b.vars.begin(), b.vars.end(), from) != b.vars.end()) return;
      if (std::find(b.vars.begin(), b.vars.end(), to) != b.vars.end())
        throw Error("variable capture while renaming " + from + " to " + to);
      auto fix = [&](std::string& s) {
        if (s == from) s = to;
      };
      for (auto& a : b.atoms) std::for_each(a.args.begin(), a.args.end(), fix);
      for (auto& a : b.negated) std::for_each(a.args.begin(), a.args.end(), fix);
      for (auto& [u, v] : b.distinct) {
        fix(u);
        fix(v);
      }
      for (auto& c : b.unary) {
        if (c.var == from) {
          c.var = to;
          c.formula = substitute(c.formula, from, to);
        }
      }
    };
    fix_block(n->block);
    fix_block(n->other);
    return n;
  }
};

}  // namespace

FormulaPtr strictify(const FormulaPtr& f, const StrictifyOptions& opts) {
  Strictifier s{opts, opts.schema ? *opts.schema : formula_schema(*f)};
  if (s.schema.empty()) s.schema = graph_schema();
  return s.go(f, free_variable(*f).value_or("x"));
}

bool is_strict(const Formula& f, const Schema& schema) {
  switch (f.kind) {
    case FormulaKind::Not:
    case FormulaKind::Or:
    case FormulaKind::And:
      return std::all_of(f.children.begin(), f.children.end(), [&](const FormulaPtr& c) { return is_strict(*c, schema); });
    case FormulaKind::Exists: break;
    default: return false;
  }
  const Block& b = f.block;
  auto x = free_variable(f);
  if (!x) return false;
  std::vector<std::string> names{*x};
  names.insert(names.end(), b.vars.begin(), b.vars.end());
  std::set<std::pair<std::string, std::string>> dist;
  for (auto [u, v] : b.distinct) {
    if (u > v) std::swap(u, v);
    dist.emplace(u, v);
  }
  for (std::size_t i = 0; i < names.size(); ++i)
    for (std::size_t j = i + 1; j < names.size(); ++j) {
      auto u = names[i], v = names[j];
      if (u > v) std::swap(u, v);
      if (!dist.count({u, v})) return false;
    }
  std::set<Atom> pos(b.atoms.begin(), b.atoms.end()), neg(b.negated.begin(), b.negated.end());
  std::vector<std::pair<std::string, int>> rels(schema.begin(), schema.end());
  for (const auto& r : all_possible_rows(schema, static_cast<int>(names.size()))) {
    Atom a{rels[r.relation].first, {}};
    for (int arg : r.args) a.args.push_back(names[arg]);
    if (pos.count(a) == neg.count(a)) return false;
  }
  if (pos.size() + neg.size() != all_possible_rows(schema, static_cast<int>(names.size())).size()) return false;
  for (const auto& c : b.unary)
    if (!is_strict(*c.formula, schema)) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Builtin catalog

namespace {

std::string sun_formula_text() {
  const std::vector<std::string> xs{"x", "x2", "x3", "x4", "x5", "x6"};
  auto has_leaf = [](const std::string& v) {
    return "(exists (y) (and (E " + v + " y) (exists (z) (E y z)) (not (exists (z1 z2) (and (E y z1) (E y z2) (neq z1 z2))))))";
  };
  std::string body = "(and";
  for (std::size_t i = 0; i < 6; ++i) body += " (E " + xs[i] + " " + xs[(i + 1) % 6] + ")";
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = i + 1; j < 6; ++j) body += " (neq " + xs[i] + " " + xs[j] + ")";
  for (const auto& v : xs) body += " " + has_leaf(v);
  body += ")";
  return "(exists (x2 x3 x4 x5 x6) " + body + ")";
}

}  // namespace

std::vector<BuiltinFormula> builtin_formulas() {
  return {
      {"phi_sun", parse_formula(sun_formula_text()),
       "x lies on a 6-cycle of distinct values each of which has a neighbor with exactly one neighbor"},
      {"local_transitivity", parse_formula("(not (exists (y z) (and (E x y) (E y z) (not (E x z)))))"),
       "every 2-step path from x is closed by an edge from x"},
      {"local_transitivity_count",
       parse_formula("(count= (y z) (and (E x y) (E y z)) (and (E x y) (E y z) (E x z)))"),
       "x has as many 2-step paths as chorded triangles"},
      {"triangle_ratio",
       parse_formula("(ratio>= 1/2 (y z) (and (E x x) (E y y) (E z z)) (and (E x y) (E y z) (E z x)))"),
       "at least half of the triangles through x have loops on all corners"},
      {"out_edge", parse_formula("(exists (y) (E x y))"), "x has an out-neighbor"},
      {"two_out_edges", parse_formula("(exists>= 2 (y) (E x y))"), "x has at least two out-neighbors"},
      {"sink_successor", parse_formula("(exists (y) (and (E x y) (not (exists (z) (E y z)))))"),
       "x has an out-neighbor without out-neighbors"},
      {"loop", parse_formula("(E x x)"), "x has a loop"},
  };
}

FormulaPtr builtin_formula(const std::string& name) {
  for (auto& b : builtin_formulas())
    if (b.name == name) return b.formula;
  throw Error("unknown builtin formula: " + name);
}

}  // namespace homnet
