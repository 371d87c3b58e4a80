#include "homnet/dhn.hpp"

#include "homnet/lovasz.hpp"

#include <algorithm>

namespace homnet {

std::string to_string(Aggregation a) {
  switch (a) {
    case Aggregation::Sum: return "sum";
    case Aggregation::Max: return "max";
    case Aggregation::Mean: return "mean";
  }
  return "?";
}

Aggregation parse_aggregation(std::string_view s) {
  if (s == "sum") return Aggregation::Sum;
  if (s == "max") return Aggregation::Max;
  if (s == "mean") return Aggregation::Mean;
  throw Error("unknown aggregation: " + std::string(s));
}

std::string to_string(Comparison c) { return c == Comparison::Greater ? ">" : ">="; }

Comparison parse_comparison(std::string_view s) {
  if (s == ">") return Comparison::Greater;
  if (s == ">=") return Comparison::GreaterEqual;
  throw Error("unknown comparison: " + std::string(s));
}

template <typename S>
Matrix<S> Transform<S>::apply_batch(const Matrix<S>& x) const {
  if (factors.empty()) throw Error("transform without factors");
  Matrix<S> out = factors[0].forward_batch(x);
  for (std::size_t i = 1; i < factors.size(); ++i) out = out.cwiseProduct(factors[i].forward_batch(x));
  return out;
}

template <typename S>
Eigen::Index DhnLayer<S>::in_dim() const {
  return queries.empty() ? 0 : queries.front().transforms.front().in_dim();
}

template <typename S>
Eigen::Index DhnLayer<S>::out_dim() const {
  return std::visit(
      [](const auto& c) -> Eigen::Index {
        using C = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<C, Fnn<S>>)
          return c.out_dim();
        else
          return c.dim;
      },
      combine);
}

namespace {

template <typename S>
void aggregate_into(const HomQuery<S>& q, const std::vector<Matrix<S>>& tables, const Matcher& m, int root,
                    Eigen::Ref<RowVector<S>> out) {
  const Eigen::Index d = out.size();
  out.setZero();
  std::size_t count = 0;
  RowVector<S> prod(d);
  m.for_each(std::make_pair(q.pattern.root, root), [&](std::span<const int> h) {
    prod = tables[0].row(h[0]);
    for (std::size_t v = 1; v < h.size(); ++v) prod = prod.cwiseProduct(tables[v].row(h[v]));
    if (q.agg == Aggregation::Max && count > 0)
      out = out.cwiseMax(prod);
    else if (q.agg == Aggregation::Max)
      out = prod;
    else
      out += prod;
    ++count;
    return true;
  });
  if (q.agg == Aggregation::Mean && count > 0) out /= S(static_cast<long>(count));
}

template <typename S>
std::vector<Matrix<S>> transform_tables(const HomQuery<S>& q, const Matrix<S>& embedding) {
  std::vector<Matrix<S>> tables;
  for (const auto& t : q.transforms) tables.push_back(t.apply_batch(embedding));
  return tables;
}

template <typename S>
Matrix<S> apply_combine(const Combine<S>& c, const Matrix<S>& y) {
  if (const auto* f = std::get_if<Fnn<S>>(&c)) return f->forward_batch(y);
  const auto& r = std::get<RatioCombine<S>>(c);
  if (y.cols() != r.dim + 2) throw Error("ratio combine input has the wrong dimension");
  Matrix<S> out = y.rightCols(r.dim);
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    bool bit = y(i, 1) == S(0) ? r.cmp == Comparison::GreaterEqual : compare<S>(y(i, 0), r.cmp, r.threshold);
    out(i, r.position) = bit ? S(1) : S(0);
  }
  return out;
}

template <typename S>
Matrix<S> apply_norm(const LayerNormParams<S>& n, const Matrix<S>& x) {
  if constexpr (std::is_same_v<S, double>) {
    return layer_norm_forward(x, n.gamma, n.beta, n.eps, nullptr);
  } else {
    (void)n;
    (void)x;
    throw Error("layer normalization has no exact rational form");
  }
}

}  // namespace

template <typename S>
RowVector<S> eval_query(const HomQuery<S>& q, const Database& db, const Matrix<S>& embedding, int root) {
  auto tables = transform_tables(q, embedding);
  Matcher m(q.pattern.db, db, q.mode);
  RowVector<S> out(q.out_dim());
  aggregate_into<S>(q, tables, m, root, out);
  return out;
}

template <typename S>
Matrix<S> apply_layer(const DhnLayer<S>& layer, const Database& db, const Matrix<S>& embedding) {
  Eigen::Index total = 0;
  for (const auto& q : layer.queries) total += q.out_dim();
  Matrix<S> y(db.size(), total);
  Eigen::Index off = 0;
  for (const auto& q : layer.queries) {
    auto tables = transform_tables(q, embedding);
    Matcher m(q.pattern.db, db, q.mode);
    const Eigen::Index d = q.out_dim();
    RowVector<S> row(d);
    for (int u = 0; u < db.size(); ++u) {
      aggregate_into<S>(q, tables, m, u, row);
      y.block(u, off, 1, d) = row;
    }
    off += d;
  }
  Matrix<S> out = apply_combine(layer.combine, y);
  if (layer.norm) out = apply_norm(*layer.norm, out);
  return out;
}

template <typename S>
S classifier_score(const Classifier<S>& c, const RowVector<S>& embedding) {
  if (c.head) return c.head->forward(embedding)(c.coordinate);
  return embedding(c.coordinate);
}

template <typename S>
Trace<S> run_all(const Dhn<S>& net, const Database& db, const Matrix<S>* input) {
  Trace<S> t;
  Matrix<S> emb = input ? *input : Matrix<S>(db.size(), net.input_dim);
  if (emb.rows() != db.size() || emb.cols() != net.input_dim)
    throw Error("input embedding does not match the network's input dimension");
  t.embeddings.push_back(emb);
  for (const auto& layer : net.layers) {
    emb = apply_layer(layer, db, emb);
    t.embeddings.push_back(emb);
  }
  for (int v = 0; v < db.size(); ++v) {
    S score = classifier_score<S>(net.classifier, emb.row(v));
    t.accept.push_back(compare<S>(score, net.classifier.cmp, net.classifier.threshold));
    t.scores.push_back(std::move(score));
  }
  return t;
}

template <typename S>
bool run(const Dhn<S>& net, const PointedDatabase& p, const Matrix<S>* input) {
  return run_all(net, p.db, input).accept[p.root];
}

template <typename S>
void validate(const Dhn<S>& net) {
  Eigen::Index dim = net.input_dim;
  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    const auto& layer = net.layers[li];
    const std::string where = "layer " + std::to_string(li + 1) + ": ";
    if (layer.queries.empty()) throw Error(where + "no queries");
    Eigen::Index total = 0;
    for (const auto& q : layer.queries) {
      if (static_cast<int>(q.transforms.size()) != q.pattern.db.size())
        throw Error(where + "a query needs one transform per pattern value");
      for (const auto& t : q.transforms) {
        if (t.factors.empty()) throw Error(where + "transform without factors");
        for (const auto& f : t.factors) {
          if (f.layers.empty()) throw Error(where + "empty feed-forward network");
          if (f.in_dim() != dim)
            throw Error(where + "transform expects input dimension " + std::to_string(f.in_dim()) + ", layer input is " +
                        std::to_string(dim));
          if (f.out_dim() != q.out_dim()) throw Error(where + "transforms of one query disagree on output dimension");
        }
      }
      total += q.out_dim();
    }
    if (const auto* f = std::get_if<Fnn<S>>(&layer.combine)) {
      if (f->layers.empty() || f->in_dim() != total)
        throw Error(where + "combine expects " + std::to_string(f->layers.empty() ? 0 : f->in_dim()) +
                    " inputs, queries produce " + std::to_string(total));
    } else {
      const auto& r = std::get<RatioCombine<S>>(layer.combine);
      if (total != r.dim + 2 || r.position < 0 || r.position >= r.dim)
        throw Error(where + "ratio combine does not match its queries");
    }
    dim = layer.out_dim();
    if (layer.norm && (layer.norm->gamma.size() != dim || layer.norm->beta.size() != dim))
      throw Error(where + "normalization size mismatch");
  }
  const auto& c = net.classifier;
  Eigen::Index cdim = dim;
  if (c.head) {
    if (c.head->in_dim() != dim) throw Error("classifier head input dimension mismatch");
    cdim = c.head->out_dim();
  }
  if (c.coordinate < 0 || c.coordinate >= cdim) throw Error("classifier coordinate out of range");
}

template <typename S>
bool is_simple(const Dhn<S>& net) {
  if (net.classifier.head) return false;
  for (const auto& layer : net.layers) {
    if (layer.norm) return false;
    const auto* f = std::get_if<Fnn<S>>(&layer.combine);
    if (!f || !f->is_simple()) return false;
    for (const auto& q : layer.queries)
      for (const auto& t : q.transforms)
        if (t.factors.size() != 1 || !t.factors[0].is_simple()) return false;
  }
  return true;
}

template <typename S>
bool is_connected(const Dhn<S>& net) {
  for (const auto& layer : net.layers)
    for (const auto& q : layer.queries)
      if (!homnet::is_connected(q.pattern.db)) return false;
  return true;
}

template <typename S>
bool uses_only(const Dhn<S>& net, Aggregation agg) {
  for (const auto& layer : net.layers)
    for (const auto& q : layer.queries)
      if (q.agg != agg) return false;
  return true;
}

namespace {

template <typename T, typename S>
T conv(const S& s) {
  if constexpr (std::is_same_v<T, S>)
    return s;
  else if constexpr (std::is_same_v<T, double>)
    return s.template convert_to<double>();
  else
    return rational_from_double(s);
}

}  // namespace

template <typename S>
template <typename T>
Dhn<T> Dhn<S>::cast() const {
  Dhn<T> out;
  out.schema = schema;
  out.input_dim = input_dim;
  for (const auto& l : layers) {
    DhnLayer<T> nl;
    for (const auto& q : l.queries) {
      HomQuery<T> nq{q.pattern, {}, q.agg, q.mode};
      for (const auto& t : q.transforms) {
        Transform<T> nt;
        for (const auto& f : t.factors) nt.factors.push_back(f.template cast<T>());
        nq.transforms.push_back(std::move(nt));
      }
      nl.queries.push_back(std::move(nq));
    }
    if (const auto* f = std::get_if<Fnn<S>>(&l.combine))
      nl.combine = f->template cast<T>();
    else {
      const auto& r = std::get<RatioCombine<S>>(l.combine);
      nl.combine = RatioCombine<T>{r.position, r.cmp, conv<T>(r.threshold), r.dim};
    }
    if (l.norm) {
      auto c = [](const S& s) { return conv<T>(s); };
      nl.norm = LayerNormParams<T>{l.norm->gamma.unaryExpr(c), l.norm->beta.unaryExpr(c), l.norm->eps};
    }
    out.layers.push_back(std::move(nl));
  }
  if (classifier.head) out.classifier.head = classifier.head->template cast<T>();
  out.classifier.coordinate = classifier.coordinate;
  out.classifier.cmp = classifier.cmp;
  out.classifier.threshold = conv<T>(classifier.threshold);
  return out;
}

template <typename S>
Dhn<S> den_to_dhn_sum(const Dhn<S>& net) {
  validate(net);
  if (!uses_only(net, Aggregation::Sum)) throw Error("conversion requires sum aggregation in every query");
  Dhn<S> out = net;
  for (auto& layer : out.layers) {
    const auto* comb = std::get_if<Fnn<S>>(&layer.combine);
    if (!comb) throw Error("conversion requires feed-forward combines");
    std::vector<HomQuery<S>> queries;
    std::vector<Eigen::Triplet<S>> entries;
    Eigen::Index old_off = 0, new_off = 0;
    for (const auto& q : layer.queries) {
      const Eigen::Index d = q.out_dim();
      if (q.mode == MatchMode::Hom) {
        for (Eigen::Index j = 0; j < d; ++j) entries.emplace_back(new_off + j, old_off + j, S(1));
        queries.push_back(q);
        new_off += d;
      } else {
        for (const auto& term : labeled_expansion(q.pattern, q.mode, MatchMode::Hom)) {
          HomQuery<S> nq{term.pattern, {}, Aggregation::Sum, MatchMode::Hom};
          nq.transforms.resize(term.pattern.db.size());
          std::vector<std::string> names(num_blocks(term.block_of));
          for (int v = 0; v < q.pattern.db.size(); ++v) {
            auto& nm = names[term.block_of[v]];
            nm += (nm.empty() ? "" : "|") + q.pattern.db.value(v);
          }
          for (int v = 0; v < q.pattern.db.size(); ++v) {
            int id = term.pattern.db.value_id(names[term.block_of[v]]);
            auto& fs = nq.transforms[id].factors;
            fs.insert(fs.end(), q.transforms[v].factors.begin(), q.transforms[v].factors.end());
          }
          S c = scalar_cast<S>(term.coefficient);
          for (Eigen::Index j = 0; j < d; ++j) entries.emplace_back(new_off + j, old_off + j, c);
          queries.push_back(std::move(nq));
          new_off += d;
        }
      }
      old_off += d;
    }
    Fnn<S> combined;
    combined.layers.push_back(sparse_layer<S>(new_off, old_off, entries, RowVector<S>::Zero(old_off),
                                              Activation{ActivationKind::Identity}));
    combined.layers.insert(combined.layers.end(), comb->layers.begin(), comb->layers.end());
    layer.queries = std::move(queries);
    layer.combine = std::move(combined);
  }
  return out;
}

PointedDatabase single_vertex_pattern(const Schema& schema) { return make_pointed(schema, {}, "x"); }

PointedDatabase single_edge_pattern(const Schema& schema, const std::string& relation) {
  return make_pointed(schema, {Fact{relation, {"x", "y"}}}, "x");
}

template <typename S>
Transform<S> identity_transform(Eigen::Index dim, ActivationKind act) {
  std::vector<Eigen::Triplet<S>> e;
  for (Eigen::Index i = 0; i < dim; ++i) e.emplace_back(i, i, S(1));
  Fnn<S> f;
  f.layers.push_back(sparse_layer<S>(dim, dim, e, RowVector<S>::Zero(dim), Activation{act}));
  return single(std::move(f));
}

template <typename S>
Transform<S> constant_transform(Eigen::Index in, const RowVector<S>& value, ActivationKind act) {
  Fnn<S> f;
  f.layers.push_back(sparse_layer<S>(in, value.size(), {}, value, Activation{act}));
  return single(std::move(f));
}

Dhn<double> gin_baseline(const std::vector<Eigen::Index>& dims, const std::vector<Eigen::Index>& combine_hidden,
                         Activation act, Rng& rng) {
  if (dims.empty()) throw Error("GIN baseline needs at least one layer");
  const Schema schema = graph_schema();
  Dhn<double> net;
  net.schema = schema;
  Eigen::Index prev = 0;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    DhnLayer<double> layer;
    const bool last = i + 1 == dims.size();
    auto message = [&]() {
      return prev == 0 ? constant_transform<double>(0, RowVector<double>::Ones(1)) : identity_transform<double>(prev);
    };
    const Eigen::Index width = prev == 0 ? 1 : prev;
    HomQuery<double> self{single_vertex_pattern(schema), {message()}, Aggregation::Sum, MatchMode::Hom};
    HomQuery<double> edge{single_edge_pattern(schema), {}, Aggregation::Sum, MatchMode::Hom};
    edge.transforms = {message(), message()};
    edge.transforms[edge.pattern.root] = constant_transform<double>(prev, RowVector<double>::Ones(width));
    layer.queries = {self, edge};
    Eigen::Index in = 2 * width;
    if (last) {
      HomQuery<double> readout{make_pointed(schema, {}, "x", {"y"}), {}, Aggregation::Sum, MatchMode::Hom};
      readout.transforms = {message(), message()};
      readout.transforms[readout.pattern.root] = constant_transform<double>(prev, RowVector<double>::Ones(width));
      layer.queries.push_back(readout);
      in += width;
    }
    std::vector<Eigen::Index> widths{in};
    widths.insert(widths.end(), combine_hidden.begin(), combine_hidden.end());
    widths.push_back(dims[i]);
    layer.combine = random_fnn(widths, act, Activation{ActivationKind::Identity}, rng);
    net.layers.push_back(std::move(layer));
    prev = dims[i];
  }
  net.classifier.head = random_fnn({prev, prev, 1}, act, Activation{ActivationKind::Identity}, rng);
  net.classifier.cmp = Comparison::Greater;
  net.classifier.threshold = 0.0;
  return net;
}

#define HOMNET_INSTANTIATE(S)                                                                       \
  template struct Transform<S>;                                                                     \
  template struct DhnLayer<S>;                                                                      \
  template RowVector<S> eval_query<S>(const HomQuery<S>&, const Database&, const Matrix<S>&, int); \
  template Matrix<S> apply_layer<S>(const DhnLayer<S>&, const Database&, const Matrix<S>&);        \
  template Trace<S> run_all<S>(const Dhn<S>&, const Database&, const Matrix<S>*);                  \
  template bool run<S>(const Dhn<S>&, const PointedDatabase&, const Matrix<S>*);                   \
  template S classifier_score<S>(const Classifier<S>&, const RowVector<S>&);                       \
  template void validate<S>(const Dhn<S>&);                                                         \
  template bool is_simple<S>(const Dhn<S>&);                                                        \
  template bool is_connected<S>(const Dhn<S>&);                                                     \
  template bool uses_only<S>(const Dhn<S>&, Aggregation);                                           \
  template Dhn<S> den_to_dhn_sum<S>(const Dhn<S>&);                                                 \
  template Transform<S> identity_transform<S>(Eigen::Index, ActivationKind);                                   \
  template Transform<S> constant_transform<S>(Eigen::Index, const RowVector<S>&, ActivationKind);                \
  template Dhn<double> Dhn<S>::cast<double>() const;                                                \
  template Dhn<Rational> Dhn<S>::cast<Rational>() const;

HOMNET_INSTANTIATE(double)
HOMNET_INSTANTIATE(Rational)

}  // namespace homnet
