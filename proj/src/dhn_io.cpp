#include "homnet/dhn.hpp"

namespace homnet {

namespace {

template <typename S>
nlohmann::json sj(const S& s) {
  if constexpr (std::is_same_v<S, double>)
    return s;
  else
    return to_string(s);
}

template <typename S>
S sof(const nlohmann::json& j) {
  if constexpr (std::is_same_v<S, double>) {
    if (j.is_number()) return j.get<double>();
    return parse_rational(j.get<std::string>()).convert_to<double>();
  } else {
    if (j.is_string()) return parse_rational(j.get<std::string>());
    if (j.is_number_integer()) return Rational(j.get<long long>());
    return rational_from_double(j.get<double>());
  }
}

template <typename S>
nlohmann::json row_json(const RowVector<S>& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(sj(v(i)));
  return a;
}

template <typename S>
RowVector<S> row_of(const nlohmann::json& j) {
  RowVector<S> v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = sof<S>(j[i]);
  return v;
}

}  // namespace

std::string network_numeric(const nlohmann::json& j) {
  auto n = j.value("numeric", "float");
  if (n != "rational" && n != "float") throw Error("numeric must be \"rational\" or \"float\"");
  return n;
}

template <typename S>
nlohmann::json to_json(const Dhn<S>& net) {
  nlohmann::json j;
  j["numeric"] = is_exact_v<S> ? "rational" : "float";
  nlohmann::json schema = nlohmann::json::object();
  for (const auto& [name, ar] : net.schema) schema[name] = ar;
  j["schema"] = schema;
  j["input_dim"] = net.input_dim;
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : net.layers) {
    nlohmann::json jl;
    nlohmann::json qs = nlohmann::json::array();
    for (const auto& q : l.queries) {
      nlohmann::json jq;
      jq["pattern"] = to_json(q.pattern);
      jq["agg"] = to_string(q.agg);
      jq["mode"] = to_string(q.mode);
      nlohmann::json ts = nlohmann::json::object();
      for (int v = 0; v < q.pattern.db.size(); ++v) {
        nlohmann::json fs = nlohmann::json::array();
        for (const auto& f : q.transforms[v].factors) fs.push_back(to_json(f));
        ts[q.pattern.db.value(v)] = fs;
      }
      jq["transforms"] = ts;
      qs.push_back(jq);
    }
    jl["queries"] = qs;
    if (const auto* f = std::get_if<Fnn<S>>(&l.combine)) {
      auto c = to_json(*f);
      c["kind"] = "fnn";
      jl["combine"] = c;
    } else {
      const auto& r = std::get<RatioCombine<S>>(l.combine);
      jl["combine"] = nlohmann::json{{"kind", "ratio"},
                                     {"position", r.position},
                                     {"cmp", to_string(r.cmp)},
                                     {"threshold", sj(r.threshold)},
                                     {"dim", r.dim}};
    }
    if (l.norm)
      jl["layer_norm"] = nlohmann::json{{"gamma", row_json<S>(l.norm->gamma)},
                                        {"beta", row_json<S>(l.norm->beta)},
                                        {"eps", l.norm->eps}};
    layers.push_back(jl);
  }
  j["layers"] = layers;
  nlohmann::json c;
  if (net.classifier.head) c["head"] = to_json(*net.classifier.head);
  c["coordinate"] = net.classifier.coordinate;
  c["cmp"] = to_string(net.classifier.cmp);
  c["threshold"] = sj(net.classifier.threshold);
  j["classify"] = c;
  return j;
}

template <typename S>
Dhn<S> dhn_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error("network must be a JSON object");
  Dhn<S> net;
  if (!j.contains("schema")) throw Error("network lacks a schema");
  for (const auto& [name, ar] : j["schema"].items()) net.schema[name] = ar.template get<int>();
  net.input_dim = j.value("input_dim", 0);
  for (const auto& jl : j.at("layers")) {
    DhnLayer<S> l;
    for (const auto& jq : jl.at("queries")) {
      HomQuery<S> q;
      q.pattern = pointed_from_json(jq.at("pattern"));
      q.agg = parse_aggregation(jq.at("agg").get<std::string>());
      q.mode = parse_match_mode(jq.at("mode").get<std::string>());
      q.transforms.resize(q.pattern.db.size());
      const auto& ts = jq.at("transforms");
      for (int v = 0; v < q.pattern.db.size(); ++v) {
        const auto& name = q.pattern.db.value(v);
        if (!ts.contains(name)) throw Error("query lacks a transform for pattern value " + name);
        for (const auto& jf : ts[name]) q.transforms[v].factors.push_back(fnn_from_json<S>(jf));
      }
      if (ts.size() != static_cast<std::size_t>(q.pattern.db.size()))
        throw Error("query has transforms for values outside its pattern");
      l.queries.push_back(std::move(q));
    }
    const auto& jc = jl.at("combine");
    auto kind = jc.value("kind", "fnn");
    if (kind == "fnn")
      l.combine = fnn_from_json<S>(jc);
    else if (kind == "ratio")
      l.combine = RatioCombine<S>{jc.at("position").get<Eigen::Index>(), parse_comparison(jc.at("cmp").get<std::string>()),
                                  sof<S>(jc.at("threshold")), jc.at("dim").get<Eigen::Index>()};
    else
      throw Error("unknown combine kind: " + kind);
    if (jl.contains("layer_norm")) {
      const auto& n = jl["layer_norm"];
      l.norm = LayerNormParams<S>{row_of<S>(n.at("gamma")), row_of<S>(n.at("beta")), n.value("eps", 1e-5)};
    }
    net.layers.push_back(std::move(l));
  }
  const auto& c = j.at("classify");
  if (c.contains("head")) net.classifier.head = fnn_from_json<S>(c["head"]);
  net.classifier.coordinate = c.value("coordinate", 0);
  net.classifier.cmp = parse_comparison(c.value("cmp", ">="));
  net.classifier.threshold = sof<S>(c.at("threshold"));
  validate(net);
  return net;
}

template nlohmann::json to_json<double>(const Dhn<double>&);
template nlohmann::json to_json<Rational>(const Dhn<Rational>&);
template Dhn<double> dhn_from_json<double>(const nlohmann::json&);
template Dhn<Rational> dhn_from_json<Rational>(const nlohmann::json&);

}  // namespace homnet
