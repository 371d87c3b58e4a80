#include "homnet/training.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <chrono>
#include <cmath>
#include <iostream>
#include <numeric>

namespace homnet {

namespace {

using RM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Activation leaky(double slope) { return Activation{ActivationKind::LeakyRelu, slope}; }
const Activation kIdentity{ActivationKind::Identity};

nlohmann::json query_json(const QuerySpec& q) {
  nlohmann::json kinds = nlohmann::json::array();
  for (auto k : q.kinds) kinds.push_back(k == TransformKind::Trainable ? "trainable" : k == TransformKind::Identity ? "identity" : "ones");
  return {{"pattern", to_json(q.pattern)}, {"mode", to_string(q.mode)}, {"agg", to_string(q.agg)}, {"kinds", kinds}};
}

}  // namespace

nlohmann::json ModelConfig::to_json() const {
  nlohmann::json qs = nlohmann::json::array(), extra = nlohmann::json::array();
  for (const auto& q : queries) qs.push_back(query_json(q));
  for (const auto& q : last_extra) extra.push_back(query_json(q));
  return {{"name", name},
          {"queries", qs},
          {"last_layer_extra", extra},
          {"layers", layers},
          {"dim", dim},
          {"transform_hidden", transform_hidden},
          {"combine_hidden", combine_hidden},
          {"combine_hidden_layers", combine_hidden_layers},
          {"head_hidden", head_hidden},
          {"leaky_slope", leaky_slope},
          {"layer_norm", layer_norm},
          {"layer_norm_eps", layer_norm_eps},
          {"lr", lr},
          {"epochs", epochs},
          {"adam", {{"beta1", adam.beta1}, {"beta2", adam.beta2}, {"eps", adam.eps}}},
          {"init", "uniform(-1/sqrt(fan_in), 1/sqrt(fan_in))"},
          {"loss", "binary cross-entropy with logits, full batch"}};
}

ModelConfig dhn_model(const std::string& name, const std::vector<PointedDatabase>& patterns, MatchMode mode,
                      Aggregation agg) {
  ModelConfig c;
  c.name = name;
  for (const auto& p : patterns) c.queries.push_back(QuerySpec{p, mode, agg, {}});
  return c;
}

ModelConfig gin_model(const std::string& name) {
  const Schema s = graph_schema();
  ModelConfig c;
  c.name = name;
  QuerySpec self{single_vertex_pattern(s), MatchMode::Hom, Aggregation::Sum, {TransformKind::Identity}};
  QuerySpec edge{single_edge_pattern(s), MatchMode::Hom, Aggregation::Sum, {}};
  edge.kinds.assign(2, TransformKind::Identity);
  edge.kinds[static_cast<std::size_t>(edge.pattern.root)] = TransformKind::Ones;
  QuerySpec readout{make_pointed(s, {}, "x", {"y"}), MatchMode::Hom, Aggregation::Sum, {}};
  readout.kinds.assign(2, TransformKind::Identity);
  readout.kinds[static_cast<std::size_t>(readout.pattern.root)] = TransformKind::Ones;
  c.queries = {self, edge};
  c.last_extra = {readout};
  c.lr = 1e-3;
  c.epochs = 10000;
  return c;
}

// ---------------------------------------------------------------------------
// Metrics

double f1_score(const std::vector<double>& scores, const std::vector<int>& labels, double threshold) {
  if (scores.size() != labels.size() || scores.empty()) throw Error("metrics need equally many scores and labels");
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    bool pred = scores[i] > threshold;
    if (pred && labels[i] == 1) ++tp;
    if (pred && labels[i] != 1) ++fp;
    if (!pred && labels[i] == 1) ++fn;
  }
  if (tp == 0) return 0.0;
  return 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

double auroc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size() || scores.empty()) throw Error("metrics need equally many scores and labels");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = avg;
    i = j + 1;
  }
  double pos = 0, neg = 0, sum = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] == 1) {
      pos += 1;
      sum += rank[i];
    } else {
      neg += 1;
    }
  }
  if (pos == 0 || neg == 0) return std::nan("");
  return (sum - pos * (pos + 1) / 2.0) / (pos * neg);
}

Metrics compute_metrics(const std::vector<double>& scores, const std::vector<int>& labels, double threshold) {
  Metrics m;
  m.f1 = f1_score(scores, labels, threshold);
  m.auroc = auroc(scores, labels);
  m.auroc_defined = !std::isnan(m.auroc);
  if (!m.auroc_defined) m.auroc = 0;
  return m;
}

// ---------------------------------------------------------------------------
// Match lists

MatchIndex MatchIndex::build(const PointedDatabase& pattern, const Database& target, MatchMode mode) {
  MatchIndex idx;
  idx.size = pattern.db.size();
  idx.root = pattern.root;
  if (idx.size == 2 && pattern.db.num_facts() == 0) {
    idx.readout = true;
    return idx;
  }
  Matcher m(pattern.db, target, mode);
  idx.offset.reserve(static_cast<std::size_t>(target.size()) + 1);
  idx.offset.push_back(0);
  for (int r = 0; r < target.size(); ++r) {
    m.for_each(std::make_pair(pattern.root, r), [&](std::span<const int> h) {
      idx.values.insert(idx.values.end(), h.begin(), h.end());
      return true;
    });
    idx.offset.push_back(idx.values.size() / static_cast<std::size_t>(idx.size));
  }
  return idx;
}

// ---------------------------------------------------------------------------
// Trainer

struct Trainer::Impl {
  struct Query {
    QuerySpec spec;
    std::shared_ptr<const MatchIndex> idx;
    std::vector<TransformKind> kinds;
    bool trainable = false;
    Eigen::Index in = 0, out = 0;
    std::vector<Fnn<double>> fnn;  // per value when trainable
    std::vector<FnnTape<double>> tape;
    std::vector<FnnGrad<double>> grad;
    std::vector<RM> z;   // per value outputs (unused for Ones)
    RM acc;              // sum/mean: aggregate of non-root factors; readout: column total
    RM a;                // query output
    std::vector<int> arg;  // max: winning match per (root, coordinate)
    std::vector<double> inv_count;  // mean
  };
  struct Layer {
    std::vector<Query> queries;
    Fnn<double> combine;
    FnnTape<double> tape;
    FnnGrad<double> grad;
    bool norm = false;
    RowVector<double> gamma, beta, d_gamma, d_beta;
    LayerNormTape norm_tape;
  };

  ModelConfig cfg;
  const Database* db;
  int n = 0;
  std::vector<Layer> layers;
  Fnn<double> head;
  FnnTape<double> head_tape;
  FnnGrad<double> head_grad;
  std::vector<Matrix<double>> h;  // h[0] input, h[l + 1] after layer l
  Adam adam;
  std::vector<double*> params;
  std::vector<double*> grads;
  std::vector<std::size_t> sizes;

  Impl(const ModelConfig& c, const Database& d, std::uint64_t seed) : cfg(c), db(&d), n(d.size()), adam(c.adam) {
    adam = Adam(AdamConfig{c.lr, c.adam.beta1, c.adam.beta2, c.adam.eps});
    if (cfg.layers < 1) throw Error("a model needs at least one layer");
    Rng rng(seed);
    std::map<std::string, std::shared_ptr<const MatchIndex>> cache;
    auto index_for = [&](const QuerySpec& q) {
      std::string key = canonical_form(q.pattern) + "|" + to_string(q.mode);
      auto it = cache.find(key);
      if (it == cache.end())
        it = cache.emplace(key, std::make_shared<MatchIndex>(MatchIndex::build(q.pattern, d, q.mode))).first;
      return it->second;
    };
    Eigen::Index in = 1;  // constant input feature
    const Activation act = leaky(cfg.leaky_slope);
    for (int l = 0; l < cfg.layers; ++l) {
      Layer layer;
      auto specs = cfg.queries;
      if (l + 1 == cfg.layers) specs.insert(specs.end(), cfg.last_extra.begin(), cfg.last_extra.end());
      if (specs.empty()) throw Error("a layer needs at least one query");
      Eigen::Index total = 0;
      for (const auto& spec : specs) {
        Query q;
        q.spec = spec;
        q.idx = index_for(spec);
        const int size = spec.pattern.db.size();
        q.kinds = spec.kinds.empty() ? std::vector<TransformKind>(static_cast<std::size_t>(size), TransformKind::Trainable)
                                     : spec.kinds;
        if (static_cast<int>(q.kinds.size()) != size) throw Error("query needs one transform kind per pattern value");
        q.trainable = std::find(q.kinds.begin(), q.kinds.end(), TransformKind::Trainable) != q.kinds.end();
        if (q.trainable && std::any_of(q.kinds.begin(), q.kinds.end(), [](auto k) { return k != TransformKind::Trainable; }))
          throw Error("trainable transforms cannot be mixed with fixed ones in one query");
        if (q.idx->readout && spec.agg != Aggregation::Sum) throw Error("readout queries need sum aggregation");
        q.in = in;
        q.out = q.trainable ? cfg.dim : in;
        if (q.trainable)
          for (int v = 0; v < size; ++v) q.fnn.push_back(random_fnn({in, cfg.transform_hidden, cfg.dim}, act, kIdentity, rng));
        q.tape.resize(q.fnn.size());
        q.grad.resize(q.fnn.size());
        q.z.resize(static_cast<std::size_t>(size));
        total += q.out;
        layer.queries.push_back(std::move(q));
      }
      std::vector<Eigen::Index> widths{total};
      for (int i = 0; i < cfg.combine_hidden_layers; ++i) widths.push_back(cfg.combine_hidden);
      widths.push_back(cfg.dim);
      layer.combine = random_fnn(widths, act, kIdentity, rng);
      layer.norm = cfg.layer_norm && l + 1 < cfg.layers;
      if (layer.norm) {
        layer.gamma = RowVector<double>::Ones(cfg.dim);
        layer.beta = RowVector<double>::Zero(cfg.dim);
        layer.d_gamma = RowVector<double>::Zero(cfg.dim);
        layer.d_beta = RowVector<double>::Zero(cfg.dim);
      }
      layers.push_back(std::move(layer));
      in = cfg.dim;
    }
    head = random_fnn({in, cfg.head_hidden, 1}, act, kIdentity, rng);
    auto reg_fnn = [&](Fnn<double>& f, FnnGrad<double>& g) {
      g.weight.clear();
      g.bias.clear();
      for (auto& l : f.layers) {
        g.weight.push_back(Matrix<double>::Zero(l.in_dim(), l.out_dim()));
        g.bias.push_back(RowVector<double>::Zero(l.out_dim()));
      }
      for (std::size_t i = 0; i < f.layers.size(); ++i) {
        params.push_back(f.layers[i].dense().data());
        grads.push_back(g.weight[i].data());
        sizes.push_back(static_cast<std::size_t>(g.weight[i].size()));
        params.push_back(f.layers[i].bias.data());
        grads.push_back(g.bias[i].data());
        sizes.push_back(static_cast<std::size_t>(g.bias[i].size()));
      }
    };
    for (auto& layer : layers) {
      for (auto& q : layer.queries)
        for (std::size_t v = 0; v < q.fnn.size(); ++v) reg_fnn(q.fnn[v], q.grad[v]);
      reg_fnn(layer.combine, layer.grad);
      if (layer.norm) {
        params.push_back(layer.gamma.data());
        grads.push_back(layer.d_gamma.data());
        sizes.push_back(static_cast<std::size_t>(layer.gamma.size()));
        params.push_back(layer.beta.data());
        grads.push_back(layer.d_beta.data());
        sizes.push_back(static_cast<std::size_t>(layer.beta.size()));
      }
    }
    reg_fnn(head, head_grad);
  }

  void forward_query(Query& q, const Matrix<double>& x) {
    const auto& idx = *q.idx;
    const Eigen::Index d = q.out;
    const int size = idx.size;
    for (int v = 0; v < size; ++v) {
      if (q.kinds[v] == TransformKind::Trainable)
        q.z[v] = q.fnn[v].forward_batch(x, &q.tape[v]);
      else if (q.kinds[v] == TransformKind::Identity)
        q.z[v] = x;
    }
    auto factor = [&](int v) -> const double* { return q.kinds[v] == TransformKind::Ones ? nullptr : q.z[v].data(); };
    q.a = RM::Zero(n, d);
    if (idx.readout) {
      const int other = 1 - idx.root;
      q.acc = RM::Zero(1, d);
      if (factor(other))
        q.acc = q.z[other].colwise().sum();
      else
        q.acc.setConstant(static_cast<double>(n));
      for (int r = 0; r < n; ++r) {
        q.a.row(r) = q.acc.row(0);
        if (factor(idx.root)) q.a.row(r).array() *= q.z[idx.root].row(r).array();
      }
      return;
    }
    std::vector<double> prod(static_cast<std::size_t>(d));
    if (q.spec.agg == Aggregation::Max) {
      q.arg.assign(static_cast<std::size_t>(n * d), -1);
      for (int r = 0; r < n; ++r) {
        double* out = q.a.row(r).data();
        int* arg = q.arg.data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(d);
        for (std::size_t m = idx.offset[r]; m < idx.offset[r + 1]; ++m) {
          const int* mv = idx.values.data() + m * static_cast<std::size_t>(size);
          std::fill(prod.begin(), prod.end(), 1.0);
          for (int v = 0; v < size; ++v) {
            const double* z = factor(v);
            if (!z) continue;
            z += static_cast<std::size_t>(mv[v]) * static_cast<std::size_t>(d);
            for (Eigen::Index j = 0; j < d; ++j) prod[j] *= z[j];
          }
          for (Eigen::Index j = 0; j < d; ++j)
            if (arg[j] < 0 || prod[j] > out[j]) {
              out[j] = prod[j];
              arg[j] = static_cast<int>(m);
            }
        }
      }
      return;
    }
    // Sum and mean: the root factor is common to all matches of a root.
    q.acc = RM::Zero(n, d);
    q.inv_count.assign(static_cast<std::size_t>(n), 1.0);
    for (int r = 0; r < n; ++r) {
      double* acc = q.acc.row(r).data();
      for (std::size_t m = idx.offset[r]; m < idx.offset[r + 1]; ++m) {
        const int* mv = idx.values.data() + m * static_cast<std::size_t>(size);
        std::fill(prod.begin(), prod.end(), 1.0);
        for (int v = 0; v < size; ++v) {
          if (v == idx.root) continue;
          const double* z = factor(v);
          if (!z) continue;
          z += static_cast<std::size_t>(mv[v]) * static_cast<std::size_t>(d);
          for (Eigen::Index j = 0; j < d; ++j) prod[j] *= z[j];
        }
        for (Eigen::Index j = 0; j < d; ++j) acc[j] += prod[j];
      }
      if (q.spec.agg == Aggregation::Mean && idx.count(r) > 0) q.inv_count[r] = 1.0 / static_cast<double>(idx.count(r));
      q.a.row(r) = q.acc.row(r) * q.inv_count[r];
      if (factor(idx.root)) q.a.row(r).array() *= q.z[idx.root].row(r).array();
    }
  }

  // Accumulates transform gradients; adds dL/dx into dx when given.
  void backward_query(Query& q, const RM& da, Matrix<double>* dx) {
    const auto& idx = *q.idx;
    const Eigen::Index d = q.out;
    const int size = idx.size;
    std::vector<RM> dz(static_cast<std::size_t>(size));
    for (int v = 0; v < size; ++v)
      if (q.kinds[v] != TransformKind::Ones) dz[v] = RM::Zero(n, d);
    auto live = [&](int v) { return q.kinds[v] != TransformKind::Ones; };
    if (idx.readout) {
      const int other = 1 - idx.root;
      RM droot_sum = RM::Zero(1, d);  // sum over r of da[r] * z_root[r]
      for (int r = 0; r < n; ++r) {
        if (live(idx.root)) {
          dz[idx.root].row(r) = da.row(r).array() * q.acc.row(0).array();
          droot_sum.row(0).array() += da.row(r).array() * q.z[idx.root].row(r).array();
        } else {
          droot_sum.row(0) += da.row(r);
        }
      }
      if (live(other))
        for (int u = 0; u < n; ++u) dz[other].row(u) = droot_sum.row(0);
    } else if (q.spec.agg == Aggregation::Max) {
      for (int r = 0; r < n; ++r) {
        const int* arg = q.arg.data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(d);
        for (Eigen::Index j = 0; j < d; ++j) {
          if (arg[j] < 0) continue;
          const int* mv = idx.values.data() + static_cast<std::size_t>(arg[j]) * static_cast<std::size_t>(size);
          const double g = da(r, j);
          for (int v = 0; v < size; ++v) {
            if (!live(v)) continue;
            double p = g;
            for (int w = 0; w < size; ++w)
              if (w != v && live(w)) p *= q.z[w](mv[w], j);
            dz[v](mv[v], j) += p;
          }
        }
      }
    } else {
      std::vector<int> others;
      for (int v = 0; v < size; ++v)
        if (v != idx.root && live(v)) others.push_back(v);
      std::vector<double> ds(static_cast<std::size_t>(d));
      std::vector<double> pre(static_cast<std::size_t>(d) * (others.size() + 1));
      for (int r = 0; r < n; ++r) {
        // da[r] = z_root[r] * acc[r] * inv_count[r]
        for (Eigen::Index j = 0; j < d; ++j) {
          double g = da(r, j) * q.inv_count[r];
          if (live(idx.root)) {
            dz[idx.root](r, j) += g * q.acc(r, j);
            g *= q.z[idx.root](r, j);
          }
          ds[j] = g;
        }
        if (others.empty()) continue;
        for (std::size_t m = idx.offset[r]; m < idx.offset[r + 1]; ++m) {
          const int* mv = idx.values.data() + m * static_cast<std::size_t>(size);
          if (others.size() == 1) {
            double* t = dz[others[0]].row(mv[others[0]]).data();
            for (Eigen::Index j = 0; j < d; ++j) t[j] += ds[j];
            continue;
          }
          if (others.size() == 2) {
            const int a = others[0], b = others[1];
            const double* za = q.z[a].row(mv[a]).data();
            const double* zb = q.z[b].row(mv[b]).data();
            double* ta = dz[a].row(mv[a]).data();
            double* tb = dz[b].row(mv[b]).data();
            for (Eigen::Index j = 0; j < d; ++j) {
              ta[j] += ds[j] * zb[j];
              tb[j] += ds[j] * za[j];
            }
            continue;
          }
          // Prefix products, then a suffix sweep.
          const std::size_t k = others.size();
          std::fill(pre.begin(), pre.begin() + d, 1.0);
          for (std::size_t i = 0; i < k; ++i) {
            const double* z = q.z[others[i]].row(mv[others[i]]).data();
            for (Eigen::Index j = 0; j < d; ++j) pre[(i + 1) * d + j] = pre[i * d + j] * z[j];
          }
          std::vector<double> suf(ds);
          for (std::size_t i = k; i-- > 0;) {
            const int v = others[i];
            double* t = dz[v].row(mv[v]).data();
            const double* z = q.z[v].row(mv[v]).data();
            for (Eigen::Index j = 0; j < d; ++j) {
              t[j] += suf[j] * pre[i * d + j];
              suf[j] *= z[j];
            }
          }
        }
      }
    }
    for (int v = 0; v < size; ++v) {
      if (q.kinds[v] == TransformKind::Trainable) {
        Matrix<double> g = q.fnn[v].backward(q.tape[v], Matrix<double>(dz[v]), q.grad[v]);
        if (dx) *dx += g;
      } else if (q.kinds[v] == TransformKind::Identity && dx) {
        *dx += Matrix<double>(dz[v]);
      }
    }
  }

  std::vector<double> forward() {
    h.assign(1, Matrix<double>::Ones(n, 1));
    for (auto& layer : layers) {
      Eigen::Index total = 0;
      for (auto& q : layer.queries) {
        forward_query(q, h.back());
        total += q.out;
      }
      Matrix<double> x(n, total);
      Eigen::Index off = 0;
      for (auto& q : layer.queries) {
        x.middleCols(off, q.out) = q.a;
        off += q.out;
      }
      Matrix<double> y = layer.combine.forward_batch(x, &layer.tape);
      if (layer.norm) y = layer_norm_forward(y, layer.gamma, layer.beta, cfg.layer_norm_eps, &layer.norm_tape);
      h.push_back(std::move(y));
    }
    Matrix<double> logits = head.forward_batch(h.back(), &head_tape);
    return std::vector<double>(logits.data(), logits.data() + logits.size());
  }

  double loss_and_gradient(const std::vector<int>& values, const std::vector<int>& labels, std::vector<double>* out) {
    if (values.size() != labels.size() || values.empty()) throw Error("training needs labeled values");
    auto logits = forward();
    for (std::size_t i = 0; i < grads.size(); ++i) std::fill(grads[i], grads[i] + sizes[i], 0.0);
    Matrix<double> dlogit = Matrix<double>::Zero(n, 1);
    double loss = 0;
    const double scale = 1.0 / static_cast<double>(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
      auto b = bce_with_logits(logits[values[i]], labels[i]);
      loss += b.loss * scale;
      dlogit(values[i], 0) += b.grad * scale;
    }
    Matrix<double> dh = head.backward(head_tape, dlogit, head_grad);
    for (std::size_t l = layers.size(); l-- > 0;) {
      auto& layer = layers[l];
      if (layer.norm) dh = layer_norm_backward(layer.norm_tape, layer.gamma, dh, layer.d_gamma, layer.d_beta);
      Matrix<double> dx = layer.combine.backward(layer.tape, dh, layer.grad);
      Matrix<double> dprev = Matrix<double>::Zero(n, h[l].cols());
      Eigen::Index off = 0;
      for (auto& q : layer.queries) {
        RM da = dx.middleCols(off, q.out);
        backward_query(q, da, l > 0 ? &dprev : nullptr);
        off += q.out;
      }
      dh = std::move(dprev);
    }
    if (out) *out = std::move(logits);
    return loss;
  }
};

Trainer::Trainer(const ModelConfig& cfg, const Database& db, std::uint64_t seed)
    : impl_(std::make_unique<Impl>(cfg, db, seed)) {}
Trainer::~Trainer() = default;
Trainer::Trainer(Trainer&&) noexcept = default;

std::vector<double> Trainer::forward() { return impl_->forward(); }

double Trainer::loss_and_gradient(const std::vector<int>& values, const std::vector<int>& labels) {
  return impl_->loss_and_gradient(values, labels, nullptr);
}

double Trainer::step(const std::vector<int>& values, const std::vector<int>& labels, std::vector<double>* logits) {
  double loss = impl_->loss_and_gradient(values, labels, logits);
  std::vector<const double*> g(impl_->grads.begin(), impl_->grads.end());
  impl_->adam.step(impl_->params, g, impl_->sizes);
  return loss;
}

std::vector<std::pair<double*, double*>> Trainer::parameters() {
  std::vector<std::pair<double*, double*>> out;
  for (std::size_t i = 0; i < impl_->params.size(); ++i)
    for (std::size_t j = 0; j < impl_->sizes[i]; ++j) out.emplace_back(impl_->params[i] + j, impl_->grads[i] + j);
  return out;
}

std::size_t Trainer::num_parameters() const {
  return std::accumulate(impl_->sizes.begin(), impl_->sizes.end(), std::size_t{0});
}

Dhn<double> Trainer::export_dhn() const {
  const auto& m = *impl_;
  Dhn<double> net;
  net.schema = m.db->schema();
  net.input_dim = 0;
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    const auto& layer = m.layers[l];
    DhnLayer<double> out;
    for (const auto& q : layer.queries) {
      HomQuery<double> hq{q.spec.pattern, {}, q.spec.agg, q.spec.mode};
      for (int v = 0; v < q.spec.pattern.db.size(); ++v) {
        const auto kind = q.kinds[v];
        if (l == 0) {
          RowVector<double> c;
          if (kind == TransformKind::Trainable)
            c = q.fnn[v].forward(RowVector<double>::Ones(1));
          else
            c = RowVector<double>::Ones(q.out);
          hq.transforms.push_back(constant_transform<double>(0, c));
        } else if (kind == TransformKind::Trainable) {
          hq.transforms.push_back(single(q.fnn[v]));
        } else if (kind == TransformKind::Identity) {
          hq.transforms.push_back(identity_transform<double>(q.in));
        } else {
          hq.transforms.push_back(constant_transform<double>(q.in, RowVector<double>::Ones(q.out)));
        }
      }
      out.queries.push_back(std::move(hq));
    }
    out.combine = layer.combine;
    if (layer.norm) out.norm = LayerNormParams<double>{layer.gamma, layer.beta, m.cfg.layer_norm_eps};
    net.layers.push_back(std::move(out));
  }
  net.classifier.head = m.head;
  net.classifier.coordinate = 0;
  net.classifier.cmp = Comparison::Greater;
  net.classifier.threshold = 0.0;
  validate(net);
  return net;
}

// ---------------------------------------------------------------------------
// Runs and experiments

nlohmann::json RunResult::to_json() const {
  auto metrics = [](const Metrics& m) {
    return nlohmann::json{{"f1", m.f1}, {"auroc", m.auroc}, {"auroc_defined", m.auroc_defined}};
  };
  return {{"seed", seed}, {"val", metrics(val)}, {"test", metrics(test)}, {"seconds", seconds},
          {"loss", loss},  {"val_f1", val_f1}};
}

namespace {

void gather(const LabeledDataset& data, const std::vector<std::size_t>& idx, std::vector<int>& values,
            std::vector<int>& labels) {
  values.clear();
  labels.clear();
  for (auto i : idx) {
    values.push_back(data.examples[i]);
    labels.push_back(data.labels[i]);
  }
}

std::vector<double> pick(const std::vector<double>& logits, const std::vector<int>& values) {
  std::vector<double> out;
  for (int v : values) out.push_back(logits[static_cast<std::size_t>(v)]);
  return out;
}

std::pair<double, double> mean_se(const std::vector<double>& xs) {
  if (xs.empty()) return {0, 0};
  double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  if (xs.size() < 2) return {mean, 0};
  double var = 0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= static_cast<double>(xs.size() - 1);
  return {mean, std::sqrt(var / static_cast<double>(xs.size()))};
}

}  // namespace

RunResult train_run(const ModelConfig& cfg, const LabeledDataset& data, const Split& split, std::uint64_t seed,
                    bool keep_model, int log_every) {
  auto start = std::chrono::steady_clock::now();
  RunResult res;
  res.seed = seed;
  std::vector<int> tv, tl, vv, vl, sv, sl;
  gather(data, split.train, tv, tl);
  gather(data, split.val, vv, vl);
  gather(data, split.test, sv, sl);
  Trainer t(cfg, data.db, seed);
  std::vector<double> logits;
  for (int e = 0; e < cfg.epochs; ++e) {
    double loss = t.step(tv, tl, &logits);
    res.loss.push_back(loss);
    res.val_f1.push_back(vv.empty() ? 0.0 : f1_score(pick(logits, vv), vl));
    if (log_every > 0 && (e % log_every == 0 || e + 1 == cfg.epochs))
      std::cerr << cfg.name << " seed " << seed << " epoch " << e << " loss " << loss << " val_f1 " << res.val_f1.back()
                << "\n";
  }
  logits = t.forward();
  if (!vv.empty()) res.val = compute_metrics(pick(logits, vv), vl);
  if (!sv.empty()) res.test = compute_metrics(pick(logits, sv), sl);
  if (keep_model) res.model = std::make_shared<Dhn<double>>(t.export_dhn());
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

ModelReport train_model(const ModelConfig& cfg, const LabeledDataset& data, const Split& split, std::uint64_t seed,
                        int runs, bool keep_models, int log_every) {
  ModelReport rep;
  rep.model = cfg.name;
  Rng seeds(seed);
  std::vector<std::uint64_t> run_seeds;
  for (int r = 0; r < runs; ++r) run_seeds.push_back(seeds.next());
  rep.runs.resize(run_seeds.size());
  const std::size_t workers =
      std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, std::max<std::size_t>(run_seeds.size(), 1));
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(run_seeds.size());
  auto work = [&] {
    for (std::size_t i; (i = next++) < run_seeds.size();) {
      try {
        rep.runs[i] = train_run(cfg, data, split, run_seeds[i], keep_models, log_every);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  for (std::size_t i = 1; i < rep.runs.size(); ++i)
    if (rep.runs[i].val.f1 > rep.runs[rep.selected].val.f1) rep.selected = i;
  std::vector<double> vf, va, tf, ta;
  for (const auto& r : rep.runs) {
    vf.push_back(r.val.f1);
    va.push_back(r.val.auroc);
    tf.push_back(r.test.f1);
    ta.push_back(r.test.auroc);
  }
  std::tie(rep.val_f1_mean, rep.val_f1_se) = mean_se(vf);
  std::tie(rep.val_auroc_mean, rep.val_auroc_se) = mean_se(va);
  std::tie(rep.test_f1_mean, rep.test_f1_se) = mean_se(tf);
  std::tie(rep.test_auroc_mean, rep.test_auroc_se) = mean_se(ta);
  return rep;
}

std::vector<ModelConfig> default_models(const std::string& experiment) {
  if (experiment == "lt")
    return {dhn_model("sum-DHN", pattern_catalog_lt(), MatchMode::Hom, Aggregation::Sum),
            dhn_model("max-DHN", pattern_catalog_lt(), MatchMode::Hom, Aggregation::Max)};
  if (experiment == "sun")
    return {dhn_model("sum-DHN", sun_patterns(), MatchMode::Injective, Aggregation::Sum), gin_model("GIN")};
  throw Error("unknown experiment: " + experiment + " (expected lt or sun)");
}

LabeledDataset experiment_dataset(const std::string& experiment, std::uint64_t seed) {
  if (experiment == "lt") return gen_local_transitivity(LtConfig{.seed = seed});
  if (experiment == "sun") return gen_sun(SunConfig{.seed = seed});
  throw Error("unknown experiment: " + experiment + " (expected lt or sun)");
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  ExperimentReport rep;
  rep.name = cfg.name;
  auto models = cfg.models.empty() ? default_models(cfg.name) : cfg.models;
  if (cfg.epochs)
    for (auto& m : models) m.epochs = *cfg.epochs;
  auto data = experiment_dataset(cfg.name, cfg.seed);
  auto split = split_examples(data.examples.size(), cfg.seed + 1);
  nlohmann::json mj = nlohmann::json::array();
  for (const auto& m : models) mj.push_back(m.to_json());
  rep.config = {{"experiment", cfg.name},
                {"seed", cfg.seed},
                {"runs", cfg.runs},
                {"dataset", data.meta},
                {"examples", data.examples.size()},
                {"positives", data.positives()},
                {"split", {{"train", split.train.size()}, {"val", split.val.size()}, {"test", split.test.size()}}},
                {"models", mj}};
  for (std::size_t i = 0; i < models.size(); ++i)
    rep.models.push_back(train_model(models[i], data, split, cfg.seed * 1000003 + i + 7, cfg.runs, cfg.keep_models, cfg.log_every));
  return rep;
}

}  // namespace homnet
