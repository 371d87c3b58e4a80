#include "homnet/compiler.hpp"

#include <algorithm>

namespace homnet {

std::string to_string(CompileTarget t) {
  switch (t) {
    case CompileTarget::MaxDhn: return "max-dhn";
    case CompileTarget::SumDhn: return "sum-dhn";
    case CompileTarget::MaxDen: return "max-den";
    case CompileTarget::SumDen: return "sum-den";
    case CompileTarget::MeanDhn: return "mean-dhn";
  }
  return "?";
}

CompileTarget parse_compile_target(std::string_view s) {
  if (s == "max-dhn") return CompileTarget::MaxDhn;
  if (s == "sum-dhn") return CompileTarget::SumDhn;
  if (s == "max-den") return CompileTarget::MaxDen;
  if (s == "sum-den") return CompileTarget::SumDen;
  if (s == "mean-dhn") return CompileTarget::MeanDhn;
  throw Error("unknown compile target: " + std::string(s));
}

namespace {

using Q = Rational;
using Triplets = std::vector<Eigen::Triplet<Q>>;
constexpr ActivationKind kStar = ActivationKind::ReluStar;

// Moves single-variable negated atoms into unary negations.
FormulaPtr normalize(const FormulaPtr& f) {
  auto n = std::make_shared<Formula>(*f);
  for (auto& c : n->children) c = normalize(c);
  auto fix = [](Block& b) {
    std::vector<Atom> keep;
    for (auto& a : b.negated) {
      std::set<std::string> args(a.args.begin(), a.args.end());
      if (args.size() <= 1) {
        std::string v = args.empty() ? std::string() : *args.begin();
        b.unary.push_back(Conjunct{v, make_not(make_atom_formula(a))});
      } else {
        keep.push_back(a);
      }
    }
    b.negated = std::move(keep);
    for (auto& c : b.unary) c.formula = normalize(c.formula);
  };
  fix(n->block);
  fix(n->other);
  for (auto& d : n->disjuncts) fix(d);
  return n;
}

void collect(const FormulaPtr& f, std::vector<FormulaPtr>& out, std::set<std::string>& seen) {
  for (const auto& c : f->children) collect(c, out, seen);
  for (const auto& c : f->block.unary) collect(c.formula, out, seen);
  for (const auto& c : f->other.unary) collect(c.formula, out, seen);
  for (const auto& d : f->disjuncts)
    for (const auto& c : d.unary) collect(c.formula, out, seen);
  if (seen.insert(print_formula(*f)).second) out.push_back(f);
}

struct Builder {
  Schema schema;
  Aggregation agg;
  MatchMode mode;
  bool clamp_counts;  // sum aggregation: blocks report ReLU*(count - (n-1))
  std::vector<FormulaPtr> subs;
  std::map<std::string, int> index;
  Eigen::Index k = 0;

  Builder(Schema s, Aggregation a, MatchMode m, const FormulaPtr& f) : schema(std::move(s)), agg(a), mode(m) {
    clamp_counts = agg == Aggregation::Sum;
    std::set<std::string> seen;
    collect(f, subs, seen);
    for (std::size_t i = 0; i < subs.size(); ++i) index[print_formula(*subs[i])] = static_cast<int>(i);
    k = static_cast<Eigen::Index>(subs.size());
  }

  int coord(const Formula& f) const { return index.at(print_formula(f)); }

  static Fnn<Q> affine(Eigen::Index in, Eigen::Index out, const Triplets& e, RowVector<Q> bias) {
    Fnn<Q> f;
    f.layers.push_back(sparse_layer<Q>(in, out, e, std::move(bias), Activation{ActivationKind::ReluStar}));
    return f;
  }

  // Transform on one pattern value: ReLU*(sum of the conjunct coordinates - (n-1)).
  Fnn<Q> filter(Eigen::Index in, const std::vector<int>& coords) const {
    Triplets e;
    for (int c : coords) e.emplace_back(c, 0, Q(1));
    RowVector<Q> b(1);
    b(0) = coords.empty() ? Q(1) : Q(1 - static_cast<long>(coords.size()));
    if (in == 0 && !coords.empty()) throw Error("internal: unary conjunct at the first layer");
    return affine(in, 1, e, b);
  }

  Transform<Q> copy_transform(Eigen::Index in) const {
    if (in == 0) return constant_transform<Q>(0, RowVector<Q>::Zero(k), kStar);
    return identity_transform<Q>(k, kStar);
  }

  // Queries whose summed outputs reproduce the previous embedding; returns offsets.
  std::vector<Eigen::Index> add_copy(std::vector<HomQuery<Q>>& qs, Eigen::Index& width, Eigen::Index in) const {
    std::vector<Eigen::Index> offs;
    if (mode == MatchMode::Embedding) {
      for (auto& p : single_value_databases(schema)) {
        qs.push_back(HomQuery<Q>{p, {copy_transform(in)}, agg, mode});
        offs.push_back(width);
        width += k;
      }
    } else {
      qs.push_back(HomQuery<Q>{single_vertex_pattern(schema), {copy_transform(in)}, agg, MatchMode::Hom});
      offs.push_back(width);
      width += k;
    }
    return offs;
  }

  // Pattern query of a block: facts from its atoms, value filters from its unary conjuncts.
  HomQuery<Q> block_query(const Formula& f, const Block& b, Eigen::Index in, bool with_filters) const {
    std::string root = free_variable(f).value_or("");
    if (root.empty()) {
      root = "_root";
      while (std::find(b.vars.begin(), b.vars.end(), root) != b.vars.end()) root += "_";
    }
    if (std::find(b.vars.begin(), b.vars.end(), root) != b.vars.end())
      throw Error("cannot compile a block that rebinds its free variable " + root);
    std::vector<Fact> facts;
    for (const auto& a : b.atoms) facts.push_back(Fact{a.relation, a.args});
    auto p = make_pointed(schema, facts, root, b.vars);
    std::vector<std::vector<int>> conj(p.db.size());
    if (with_filters)
      for (const auto& c : b.unary) conj[p.db.value_id(c.var.empty() ? root : c.var)].push_back(coord(*c.formula));
    HomQuery<Q> q{p, {}, agg, mode};
    for (int v = 0; v < p.db.size(); ++v) q.transforms.push_back(single(filter(in, conj[v])));
    return q;
  }

  DhnLayer<Q> layer(int i, Eigen::Index in) const {
    const Formula& f = *subs[i];
    std::vector<HomQuery<Q>> qs;
    Eigen::Index width = 0;
    Triplets e;
    RowVector<Q> bias = RowVector<Q>::Zero(k);

    if (agg == Aggregation::Mean && (f.kind == FormulaKind::Exists || f.kind == FormulaKind::Ratio)) {
      // [ratio, support, copy] feeding an exact comparator.
      Comparison cmp = f.kind == FormulaKind::Exists ? Comparison::Greater : f.cmp;
      Q t = f.kind == FormulaKind::Exists ? Q(0) : f.threshold;
      auto ratio = block_query(f, f.block, in, true);
      auto support = block_query(f, f.block, in, false);
      for (auto& tr : support.transforms) tr = constant_transform<Q>(in, RowVector<Q>::Ones(1), kStar);
      qs = {ratio, support};
      width = 2;
      add_copy(qs, width, in);
      return DhnLayer<Q>{std::move(qs), RatioCombine<Q>{i, cmp, t, k}, std::nullopt};
    }

    Eigen::Index main = -1;
    if (f.kind == FormulaKind::Exists || f.kind == FormulaKind::CountExists) {
      qs.push_back(block_query(f, f.block, in, true));
      main = width++;
    }
    auto offs = add_copy(qs, width, in);
    auto from_prev = [&](int j, int col, Q w) {
      for (auto o : offs) e.emplace_back(o + j, col, w);
    };
    for (int j = 0; j < k; ++j)
      if (j != i) from_prev(j, j, Q(1));
    switch (f.kind) {
      case FormulaKind::Not:
        from_prev(coord(*f.children[0]), i, Q(-1));
        bias(i) = Q(1);
        break;
      case FormulaKind::Or:
        for (const auto& c : f.children) from_prev(coord(*c), i, Q(1));
        break;
      case FormulaKind::And:
        for (const auto& c : f.children) from_prev(coord(*c), i, Q(1));
        bias(i) = Q(1 - static_cast<long>(f.children.size()));
        break;
      case FormulaKind::Exists:
        e.emplace_back(main, i, Q(1));
        break;
      case FormulaKind::CountExists:
        e.emplace_back(main, i, Q(1));
        bias(i) = Q(1 - static_cast<long>(f.count));
        break;
      default: throw Error("construct not supported by this compilation target");
    }
    return DhnLayer<Q>{std::move(qs), affine(width, k, e, bias), std::nullopt};
  }

  Dhn<Q> build() const {
    Dhn<Q> net;
    net.schema = schema;
    net.input_dim = 0;
    for (int i = 0; i < k; ++i) net.layers.push_back(layer(i, i == 0 ? 0 : k));
    net.classifier.coordinate = k - 1;
    net.classifier.cmp = Comparison::GreaterEqual;
    net.classifier.threshold = Q(1);
    validate(net);
    return net;
  }
};

Dhn<Q> build(const Formula& f, const Schema& schema, Aggregation agg, MatchMode mode) {
  auto root = std::make_shared<Formula>(f);
  auto norm = mode == MatchMode::Embedding ? root : normalize(root);
  if (free_variables(*norm).size() > 1) throw Error("formula must have at most one free variable");
  return Builder(compile_schema(f, schema), agg, mode, norm).build();
}

}  // namespace

std::vector<FormulaPtr> subformula_order(const FormulaPtr& f) {
  std::vector<FormulaPtr> out;
  std::set<std::string> seen;
  collect(normalize(f), out, seen);
  return out;
}

Schema compile_schema(const Formula& f, const Schema& extra) {
  Schema s = graph_schema();
  auto merge = [&](const Schema& t) {
    for (const auto& [name, ar] : t) {
      auto [it, ins] = s.emplace(name, ar);
      if (!ins && it->second != ar) throw Error("relation " + name + " has conflicting arities");
    }
  };
  if (!extra.empty()) {
    s = extra;
    auto fs = formula_schema(f);
    merge(fs);
  } else {
    merge(formula_schema(f));
  }
  return s;
}

Dhn<Rational> compile_hml_max(const Formula& f, const Schema& schema) {
  if (!classify(f).hml) throw Error("formula is not in HML");
  return build(f, schema, Aggregation::Max, MatchMode::Hom);
}

Dhn<Rational> compile_ghmlminus_sum(const Formula& f, const Schema& schema) {
  if (!classify(f).ghml_minus) throw Error("formula is not in GHML-");
  return build(f, schema, Aggregation::Sum, MatchMode::Hom);
}

Dhn<Rational> compile_eml_max_den(const Formula& f, const Schema& schema) {
  Schema s = compile_schema(f, schema);
  if (!classify(f).eml || !is_strict(f, s)) throw Error("formula is not strict EML over the schema");
  return build(f, s, Aggregation::Max, MatchMode::Embedding);
}

Dhn<Rational> compile_eml_sum_den(const Formula& f, const Schema& schema) {
  Schema s = compile_schema(f, schema);
  if (!classify(f).eml || !is_strict(f, s)) throw Error("formula is not strict EML over the schema");
  return build(f, s, Aggregation::Sum, MatchMode::Embedding);
}

Dhn<Rational> compile_rhml_mean(const Formula& f, const Schema& schema) {
  if (!classify(f).rhml) throw Error("formula is not in RHML");
  return build(f, schema, Aggregation::Mean, MatchMode::Hom);
}

Dhn<Rational> compile(const FormulaPtr& f, CompileTarget target, const Schema& schema) {
  switch (target) {
    case CompileTarget::MaxDhn: return compile_hml_max(*f, schema);
    case CompileTarget::SumDhn: return compile_ghmlminus_sum(*f, schema);
    case CompileTarget::MeanDhn: return compile_rhml_mean(*f, schema);
    case CompileTarget::MaxDen:
    case CompileTarget::SumDen: {
      Schema s = compile_schema(*f, schema);
      FormulaPtr g = is_strict(*f, s) ? f : strictify(f, StrictifyOptions{.schema = s});
      return target == CompileTarget::MaxDen ? compile_eml_max_den(*g, s) : compile_eml_sum_den(*g, s);
    }
  }
  throw Error("unknown compile target");
}

Dhn<Rational> local_transitivity_dhn() {
  const Schema schema = graph_schema();
  Dhn<Q> net;
  net.schema = schema;
  auto ones = [](Eigen::Index in) { return constant_transform<Q>(in, RowVector<Q>::Ones(1), kStar); };
  auto path = make_pointed(schema, {{"E", {"x", "y"}}, {"E", {"y", "z"}}}, "x");
  auto tri = make_pointed(schema, {{"E", {"x", "y"}}, {"E", {"y", "z"}}, {"E", {"x", "z"}}}, "x");
  DhnLayer<Q> l1;
  l1.queries.push_back(HomQuery<Q>{path, {ones(0), ones(0), ones(0)}, Aggregation::Sum, MatchMode::Hom});
  l1.queries.push_back(HomQuery<Q>{tri, {ones(0), ones(0), ones(0)}, Aggregation::Sum, MatchMode::Hom});
  // (ReLU*(paths - triangles), ReLU*(triangles - paths))
  Fnn<Q> c1;
  c1.layers.push_back(sparse_layer<Q>(2, 2, {{0, 0, Q(1)}, {1, 0, Q(-1)}, {0, 1, Q(-1)}, {1, 1, Q(1)}},
                                      RowVector<Q>::Zero(2), Activation{ActivationKind::ReluStar}));
  l1.combine = c1;
  DhnLayer<Q> l2;
  l2.queries.push_back(HomQuery<Q>{single_vertex_pattern(schema), {identity_transform<Q>(2, kStar)}, Aggregation::Sum,
                                   MatchMode::Hom});
  Fnn<Q> c2;
  c2.layers.push_back(sparse_layer<Q>(2, 1, {{0, 0, Q(-1)}, {1, 0, Q(-1)}}, RowVector<Q>::Ones(1),
                                      Activation{ActivationKind::ReluStar}));
  l2.combine = c2;
  net.layers = {l1, l2};
  net.classifier.coordinate = 0;
  net.classifier.threshold = Q(1);
  validate(net);
  return net;
}

std::vector<PointedDatabase> single_value_databases(const Schema& schema) {
  auto rows = all_possible_rows(schema, 1);
  if (rows.size() > 20) throw Error("schema has too many single-value facts");
  std::vector<std::pair<std::string, int>> rels(schema.begin(), schema.end());
  std::vector<PointedDatabase> out;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << rows.size()); ++mask) {
    std::vector<Fact> facts;
    for (std::size_t i = 0; i < rows.size(); ++i)
      if (mask >> i & 1) facts.push_back(Fact{rels[rows[i].relation].first, std::vector<std::string>(rows[i].args.size(), "x")});
    out.push_back(make_pointed(schema, facts, "x"));
  }
  return out;
}

namespace {

std::vector<std::string> value_names(int n) {
  std::vector<std::string> names;
  for (int i = 0; i < n; ++i) names.push_back(std::to_string(i));
  return names;
}

Fact row_fact(const std::vector<std::pair<std::string, int>>& rels, const Database::Row& r,
              const std::vector<std::string>& names) {
  Fact f{rels[r.relation].first, {}};
  for (int a : r.args) f.args.push_back(names[a]);
  return f;
}

}  // namespace

std::vector<Database> all_databases(const Schema& schema, int n) {
  auto rows = all_possible_rows(schema, n);
  if (rows.size() > 24) throw Error("too many databases to enumerate");
  std::vector<std::pair<std::string, int>> rels(schema.begin(), schema.end());
  auto names = value_names(n);
  std::vector<Database> out;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << rows.size()); ++mask) {
    std::vector<Fact> facts;
    for (std::size_t i = 0; i < rows.size(); ++i)
      if (mask >> i & 1) facts.push_back(row_fact(rels, rows[i], names));
    out.emplace_back(schema, facts, names);
  }
  return out;
}

Database random_database(const Schema& schema, int n, double p, Rng& rng) {
  std::vector<std::pair<std::string, int>> rels(schema.begin(), schema.end());
  auto names = value_names(n);
  std::vector<Fact> facts;
  for (const auto& r : all_possible_rows(schema, n))
    if (rng.bernoulli(p)) facts.push_back(row_fact(rels, r, names));
  return Database(schema, facts, names);
}

nlohmann::json EquivalenceReport::to_json() const {
  nlohmann::json d = nlohmann::json::array();
  for (const auto& x : disagreements)
    d.push_back({{"database", x.database}, {"root", x.root}, {"formula", x.formula}, {"network", x.network}});
  return {{"databases", databases},   {"points", points}, {"mismatches", mismatches},
          {"non_boolean", non_boolean}, {"ok", ok()},       {"disagreements", d}};
}

template <typename S>
EquivalenceReport check_equivalence(const Formula& f, const Dhn<S>& net, const EquivalenceConfig& cfg) {
  EquivalenceReport rep;
  auto check = [&](const Database& db) {
    auto truth = eval_all(f, db);
    auto trace = run_all(net, db);
    ++rep.databases;
    if constexpr (is_exact_v<S>) {
      if (cfg.check_boolean) {
        bool pure = true;
        for (const auto& m : trace.embeddings)
          for (Eigen::Index i = 0; i < m.size() && pure; ++i)
            if (m.data()[i] != S(0) && m.data()[i] != S(1)) pure = false;
        if (!pure) ++rep.non_boolean;
      }
    }
    for (int v = 0; v < db.size(); ++v) {
      ++rep.points;
      bool got = trace.accept[v] != 0;
      if (got == truth[v]) continue;
      ++rep.mismatches;
      if (rep.disagreements.size() < cfg.max_reported)
        rep.disagreements.push_back(Disagreement{homnet::to_json(db), db.value(v), truth[v], got});
    }
  };
  for (int n = 1; n <= cfg.exhaustive_size; ++n)
    for (const auto& db : all_databases(cfg.schema, n)) check(db);
  Rng rng(cfg.seed);
  for (int s = 0; s < cfg.samples; ++s) {
    int n = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::max(1, cfg.max_size))));
    double p = rng.uniform(0.05, 0.6);
    check(random_database(cfg.schema, n, p, rng));
  }
  return rep;
}

template EquivalenceReport check_equivalence<double>(const Formula&, const Dhn<double>&, const EquivalenceConfig&);
template EquivalenceReport check_equivalence<Rational>(const Formula&, const Dhn<Rational>&, const EquivalenceConfig&);

}  // namespace homnet
