#include "homnet/neural.hpp"

#include "homnet/relational.hpp"

#include <cmath>

namespace homnet {

template <>
double activate<double>(const Activation& a, const double& x) {
  switch (a.kind) {
    case ActivationKind::Identity: return x;
    case ActivationKind::Relu: return x > 0 ? x : 0.0;
    case ActivationKind::ReluStar: return x <= 0 ? 0.0 : (x >= 1 ? 1.0 : x);
    case ActivationKind::LeakyRelu: return x > 0 ? x : a.slope * x;
    case ActivationKind::Heaviside: return x >= 0 ? 1.0 : 0.0;
  }
  return x;
}

template <>
Rational activate<Rational>(const Activation& a, const Rational& x) {
  switch (a.kind) {
    case ActivationKind::Identity: return x;
    case ActivationKind::Relu: return x > 0 ? x : Rational(0);
    case ActivationKind::ReluStar: return x <= 0 ? Rational(0) : (x >= 1 ? Rational(1) : x);
    case ActivationKind::LeakyRelu: return x > 0 ? x : rational_from_double(a.slope) * x;
    case ActivationKind::Heaviside: return x >= 0 ? Rational(1) : Rational(0);
  }
  return x;
}

double activate_derivative(const Activation& a, double x) {
  switch (a.kind) {
    case ActivationKind::Identity: return 1.0;
    case ActivationKind::Relu: return x > 0 ? 1.0 : 0.0;
    case ActivationKind::ReluStar: return (x > 0 && x < 1) ? 1.0 : 0.0;
    case ActivationKind::LeakyRelu: return x > 0 ? 1.0 : a.slope;
    case ActivationKind::Heaviside: return 0.0;
  }
  return 1.0;
}

nlohmann::json to_json(const Activation& a) {
  switch (a.kind) {
    case ActivationKind::Identity: return "identity";
    case ActivationKind::Relu: return "relu";
    case ActivationKind::ReluStar: return "relu*";
    case ActivationKind::Heaviside: return "heaviside";
    case ActivationKind::LeakyRelu: return nlohmann::json{{"kind", "leaky_relu"}, {"slope", a.slope}};
  }
  return "identity";
}

Activation activation_from_json(const nlohmann::json& j) {
  if (j.is_object()) {
    if (j.value("kind", "") != "leaky_relu") throw Error("unknown activation object");
    return Activation{ActivationKind::LeakyRelu, j.value("slope", 0.01)};
  }
  auto s = j.get<std::string>();
  if (s == "identity") return {ActivationKind::Identity};
  if (s == "relu") return {ActivationKind::Relu};
  if (s == "relu*") return {ActivationKind::ReluStar};
  if (s == "heaviside") return {ActivationKind::Heaviside};
  if (s == "leaky_relu") return {ActivationKind::LeakyRelu, 0.01};
  throw Error("unknown activation: " + s);
}

template <typename S>
Eigen::Index AffineLayer<S>::in_dim() const {
  return std::visit([](const auto& w) -> Eigen::Index { return w.rows(); }, weight);
}

template <typename S>
RowVector<S> Fnn<S>::forward(const RowVector<S>& x) const {
  Matrix<S> m = x;
  return forward_batch(m).row(0);
}

template <typename S>
Matrix<S> Fnn<S>::forward_batch(const Matrix<S>& x, FnnTape<S>* tape) const {
  if (layers.empty()) throw Error("feed-forward network without layers");
  if (tape) {
    tape->inputs.clear();
    tape->pre.clear();
  }
  Matrix<S> cur = x;
  for (const auto& layer : layers) {
    if (cur.cols() != layer.in_dim())
      throw Error("feed-forward input has dimension " + std::to_string(cur.cols()) + ", expected " +
                  std::to_string(layer.in_dim()));
    Matrix<S> z;
    if (layer.is_sparse())
      z = cur * std::get<1>(layer.weight);
    else
      z = cur * std::get<0>(layer.weight);
    z.rowwise() += layer.bias;
    if (tape) {
      tape->inputs.push_back(std::move(cur));
      tape->pre.push_back(z);
    }
    const Activation act = layer.activation;
    if (act.kind == ActivationKind::Identity)
      cur = std::move(z);
    else
      cur = z.unaryExpr([act](const S& v) { return activate<S>(act, v); });
  }
  return cur;
}

template <typename S>
Matrix<S> Fnn<S>::backward(const FnnTape<S>& tape, const Matrix<S>& d_out, FnnGrad<S>& grad) const {
  if constexpr (!std::is_same_v<S, double>) {
    throw Error("backpropagation is only available in floating-point mode");
  } else {
    if (grad.weight.size() != layers.size()) {
      grad.weight.clear();
      grad.bias.clear();
      for (const auto& l : layers) {
        grad.weight.push_back(Matrix<double>::Zero(l.in_dim(), l.out_dim()));
        grad.bias.push_back(RowVector<double>::Zero(l.out_dim()));
      }
    }
    Matrix<double> d = d_out;
    for (std::size_t i = layers.size(); i-- > 0;) {
      const auto& layer = layers[i];
      const Activation act = layer.activation;
      if (act.kind != ActivationKind::Identity)
        d.array() *= tape.pre[i].unaryExpr([act](double v) { return activate_derivative(act, v); }).array();
      grad.weight[i].noalias() += tape.inputs[i].transpose() * d;
      grad.bias[i] += d.colwise().sum();
      if (layer.is_sparse())
        d = d * std::get<1>(layer.weight).transpose();
      else
        d = d * std::get<0>(layer.weight).transpose();
    }
    return d;
  }
}

template <typename S>
bool Fnn<S>::is_simple() const {
  return layers.size() == 1 && layers[0].activation.kind == ActivationKind::ReluStar;
}

namespace {

template <typename T, typename S>
T convert_scalar(const S& s) {
  if constexpr (std::is_same_v<T, S>) {
    return s;
  } else if constexpr (std::is_same_v<T, double>) {
    return s.template convert_to<double>();
  } else {
    return rational_from_double(s);
  }
}

}  // namespace

template <typename S>
template <typename T>
Fnn<T> Fnn<S>::cast() const {
  Fnn<T> out;
  for (const auto& l : layers) {
    AffineLayer<T> t;
    auto conv = [](const S& s) { return convert_scalar<T, S>(s); };
    if (l.is_sparse()) {
      const auto& sp = std::get<1>(l.weight);
      SparseMatrix<T> w(sp.rows(), sp.cols());
      std::vector<Eigen::Triplet<T>> trips;
      for (int k = 0; k < sp.outerSize(); ++k)
        for (typename SparseMatrix<S>::InnerIterator it(sp, k); it; ++it)
          trips.emplace_back(it.row(), it.col(), conv(it.value()));
      w.setFromTriplets(trips.begin(), trips.end());
      t.weight = std::move(w);
    } else {
      t.weight = Matrix<T>(std::get<0>(l.weight).unaryExpr(conv));
    }
    t.bias = l.bias.unaryExpr(conv);
    t.activation = l.activation;
    out.layers.push_back(std::move(t));
  }
  return out;
}

AffineLayer<double> random_dense_layer(Eigen::Index in, Eigen::Index out, Activation act, Rng& rng) {
  AffineLayer<double> l;
  double bound = in > 0 ? 1.0 / std::sqrt(static_cast<double>(in)) : 1.0;
  Matrix<double> w(in, out);
  for (Eigen::Index i = 0; i < in; ++i)
    for (Eigen::Index j = 0; j < out; ++j) w(i, j) = rng.uniform(-bound, bound);
  RowVector<double> b(out);
  for (Eigen::Index j = 0; j < out; ++j) b(j) = rng.uniform(-bound, bound);
  l.weight = std::move(w);
  l.bias = std::move(b);
  l.activation = act;
  return l;
}

Fnn<double> random_fnn(const std::vector<Eigen::Index>& widths, Activation hidden, Activation output,
                       Rng& rng) {
  if (widths.size() < 2) throw Error("a network needs input and output widths");
  Fnn<double> f;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i)
    f.layers.push_back(random_dense_layer(widths[i], widths[i + 1], i + 2 == widths.size() ? output : hidden, rng));
  return f;
}

template <typename S>
AffineLayer<S> sparse_layer(Eigen::Index in, Eigen::Index out, const std::vector<Eigen::Triplet<S>>& entries,
                            RowVector<S> bias, Activation act) {
  SparseMatrix<S> w(in, out);
  w.setFromTriplets(entries.begin(), entries.end());
  w.makeCompressed();
  AffineLayer<S> l;
  l.weight = std::move(w);
  l.bias = std::move(bias);
  l.activation = act;
  return l;
}

namespace {

template <typename S>
nlohmann::json scalar_json(const S& s) {
  if constexpr (std::is_same_v<S, double>)
    return s;
  else
    return to_string(s);
}

template <typename S>
S scalar_of(const nlohmann::json& j) {
  Rational r;
  if (j.is_string())
    r = parse_rational(j.get<std::string>());
  else if (j.is_number_integer())
    r = Rational(j.get<long long>());
  else if (j.is_number()) {
    if constexpr (std::is_same_v<S, double>) return j.get<double>();
    r = rational_from_double(j.get<double>());
  } else
    throw Error("expected a scalar");
  return scalar_cast<S>(r);
}

}  // namespace

template <typename S>
nlohmann::json to_json(const Fnn<S>& f) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : f.layers) {
    nlohmann::json jl;
    jl["in"] = l.in_dim();
    jl["out"] = l.out_dim();
    if (l.is_sparse()) {
      nlohmann::json entries = nlohmann::json::array();
      const auto& sp = std::get<1>(l.weight);
      for (int k = 0; k < sp.outerSize(); ++k)
        for (typename SparseMatrix<S>::InnerIterator it(sp, k); it; ++it)
          entries.push_back(nlohmann::json::array({it.row(), it.col(), scalar_json(it.value())}));
      jl["weight"] = nlohmann::json{{"sparse", entries}};
    } else {
      const auto& w = std::get<0>(l.weight);
      nlohmann::json rows = nlohmann::json::array();
      for (Eigen::Index i = 0; i < w.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < w.cols(); ++c) row.push_back(scalar_json(w(i, c)));
        rows.push_back(row);
      }
      jl["weight"] = rows;
    }
    nlohmann::json b = nlohmann::json::array();
    for (Eigen::Index c = 0; c < l.bias.size(); ++c) b.push_back(scalar_json(l.bias(c)));
    jl["bias"] = b;
    jl["activation"] = to_json(l.activation);
    layers.push_back(jl);
  }
  return nlohmann::json{{"layers", layers}};
}

template <typename S>
Fnn<S> fnn_from_json(const nlohmann::json& j) {
  Fnn<S> f;
  if (!j.contains("layers") || !j["layers"].is_array() || j["layers"].empty())
    throw Error("feed-forward network needs a non-empty layers array");
  for (const auto& jl : j["layers"]) {
    const Eigen::Index in = jl.at("in").get<Eigen::Index>();
    const Eigen::Index out = jl.at("out").get<Eigen::Index>();
    AffineLayer<S> l;
    const auto& w = jl.at("weight");
    if (w.is_object()) {
      std::vector<Eigen::Triplet<S>> trips;
      for (const auto& e : w.at("sparse")) {
        auto r = e.at(0).get<Eigen::Index>(), c = e.at(1).get<Eigen::Index>();
        if (r < 0 || r >= in || c < 0 || c >= out) throw Error("sparse weight entry out of range");
        trips.emplace_back(r, c, scalar_of<S>(e.at(2)));
      }
      SparseMatrix<S> sp(in, out);
      sp.setFromTriplets(trips.begin(), trips.end());
      sp.makeCompressed();
      l.weight = std::move(sp);
    } else {
      Matrix<S> m(in, out);
      if (static_cast<Eigen::Index>(w.size()) != in) throw Error("weight row count does not match input dimension");
      for (Eigen::Index r = 0; r < in; ++r) {
        if (static_cast<Eigen::Index>(w[r].size()) != out) throw Error("weight column count does not match output dimension");
        for (Eigen::Index c = 0; c < out; ++c) m(r, c) = scalar_of<S>(w[r][c]);
      }
      l.weight = std::move(m);
    }
    const auto& b = jl.at("bias");
    if (static_cast<Eigen::Index>(b.size()) != out) throw Error("bias size does not match output dimension");
    l.bias.resize(out);
    for (Eigen::Index c = 0; c < out; ++c) l.bias(c) = scalar_of<S>(b[c]);
    l.activation = activation_from_json(jl.at("activation"));
    if (!f.layers.empty() && f.layers.back().out_dim() != in)
      throw Error("consecutive layer dimensions do not match");
    f.layers.push_back(std::move(l));
  }
  return f;
}

void Adam::step(const std::vector<double*>& params, const std::vector<const double*>& grads,
                const std::vector<std::size_t>& sizes) {
  if (m_.empty()) {
    for (auto n : sizes) {
      m_.emplace_back(n, 0.0);
      v_.emplace_back(n, 0.0);
    }
  }
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t b = 0; b < params.size(); ++b) {
    double* p = params[b];
    const double* g = grads[b];
    auto& m = m_[b];
    auto& v = v_[b];
    for (std::size_t i = 0; i < sizes[b]; ++i) {
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
      p[i] -= cfg_.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg_.eps);
    }
  }
}

BceResult bce_with_logits(double logit, double label) {
  double loss = std::max(logit, 0.0) - logit * label + std::log1p(std::exp(-std::abs(logit)));
  double sig = logit >= 0 ? 1.0 / (1.0 + std::exp(-logit)) : std::exp(logit) / (1.0 + std::exp(logit));
  return {loss, sig - label};
}

Matrix<double> layer_norm_forward(const Matrix<double>& x, const RowVector<double>& gamma,
                                  const RowVector<double>& beta, double eps, LayerNormTape* tape) {
  const Eigen::Index n = x.rows(), d = x.cols();
  Matrix<double> xhat(n, d);
  Eigen::VectorXd inv(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double mean = x.row(i).mean();
    double var = (x.row(i).array() - mean).square().mean();
    inv(i) = 1.0 / std::sqrt(var + eps);
    xhat.row(i) = (x.row(i).array() - mean) * inv(i);
  }
  Matrix<double> y = (xhat.array().rowwise() * gamma.array()).rowwise() + beta.array();
  if (tape) {
    tape->xhat = std::move(xhat);
    tape->inv_std = std::move(inv);
  }
  return y;
}

Matrix<double> layer_norm_backward(const LayerNormTape& tape, const RowVector<double>& gamma,
                                   const Matrix<double>& d_out, RowVector<double>& d_gamma,
                                   RowVector<double>& d_beta) {
  const Eigen::Index n = d_out.rows(), d = d_out.cols();
  if (d_gamma.size() != d) d_gamma = RowVector<double>::Zero(d);
  if (d_beta.size() != d) d_beta = RowVector<double>::Zero(d);
  d_gamma += (d_out.array() * tape.xhat.array()).colwise().sum().matrix();
  d_beta += d_out.colwise().sum();
  Matrix<double> dxhat = d_out.array().rowwise() * gamma.array();
  Matrix<double> dx(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    double m1 = dxhat.row(i).mean();
    double m2 = (dxhat.row(i).array() * tape.xhat.row(i).array()).mean();
    dx.row(i) = tape.inv_std(i) * (dxhat.row(i).array() - m1 - tape.xhat.row(i).array() * m2);
  }
  return dx;
}

template struct AffineLayer<double>;
template struct AffineLayer<Rational>;
template class Fnn<double>;
template class Fnn<Rational>;
template Fnn<double> Fnn<Rational>::cast<double>() const;
template Fnn<Rational> Fnn<double>::cast<Rational>() const;
template Fnn<double> Fnn<double>::cast<double>() const;
template Fnn<Rational> Fnn<Rational>::cast<Rational>() const;
template AffineLayer<double> sparse_layer<double>(Eigen::Index, Eigen::Index, const std::vector<Eigen::Triplet<double>>&,
                                                  RowVector<double>, Activation);
template AffineLayer<Rational> sparse_layer<Rational>(Eigen::Index, Eigen::Index,
                                                      const std::vector<Eigen::Triplet<Rational>>&,
                                                      RowVector<Rational>, Activation);
template nlohmann::json to_json<double>(const Fnn<double>&);
template nlohmann::json to_json<Rational>(const Fnn<Rational>&);
template Fnn<double> fnn_from_json<double>(const nlohmann::json&);
template Fnn<Rational> fnn_from_json<Rational>(const nlohmann::json&);

}  // namespace homnet
