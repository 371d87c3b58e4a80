#include "homnet/training.hpp"

#include <cstdio>
#include <sstream>

namespace homnet {

namespace {

Metrics metrics_of(const nlohmann::json& j) {
  Metrics m;
  m.f1 = j.at("f1").get<double>();
  m.auroc = j.at("auroc").get<double>();
  m.auroc_defined = j.value("auroc_defined", true);
  return m;
}

std::string pm(double mean, double se) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f +- %.4f", mean, se);
  return buf;
}

}  // namespace

nlohmann::json ExperimentReport::to_json() const {
  nlohmann::json ms = nlohmann::json::array();
  for (const auto& m : models) {
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& r : m.runs) runs.push_back(r.to_json());
    ms.push_back({{"model", m.model},
                  {"runs", runs},
                  {"selected", m.selected},
                  {"val", {{"f1_mean", m.val_f1_mean}, {"f1_se", m.val_f1_se}, {"auroc_mean", m.val_auroc_mean},
                           {"auroc_se", m.val_auroc_se}}},
                  {"test", {{"f1_mean", m.test_f1_mean}, {"f1_se", m.test_f1_se}, {"auroc_mean", m.test_auroc_mean},
                            {"auroc_se", m.test_auroc_se}}}});
  }
  return {{"experiment", name}, {"config", config}, {"models", ms}};
}

ExperimentReport ExperimentReport::from_json(const nlohmann::json& j) {
  ExperimentReport rep;
  rep.name = j.at("experiment").get<std::string>();
  rep.config = j.value("config", nlohmann::json::object());
  for (const auto& jm : j.at("models")) {
    ModelReport m;
    m.model = jm.at("model").get<std::string>();
    for (const auto& jr : jm.at("runs")) {
      RunResult r;
      r.seed = jr.at("seed").get<std::uint64_t>();
      r.val = metrics_of(jr.at("val"));
      r.test = metrics_of(jr.at("test"));
      r.seconds = jr.value("seconds", 0.0);
      r.loss = jr.value("loss", std::vector<double>{});
      r.val_f1 = jr.value("val_f1", std::vector<double>{});
      m.runs.push_back(std::move(r));
    }
    m.selected = jm.value("selected", std::size_t{0});
    if (!m.runs.empty() && m.selected >= m.runs.size()) throw Error("report selects a missing run");
    const auto& v = jm.at("val");
    const auto& t = jm.at("test");
    m.val_f1_mean = v.at("f1_mean");
    m.val_f1_se = v.at("f1_se");
    m.val_auroc_mean = v.at("auroc_mean");
    m.val_auroc_se = v.at("auroc_se");
    m.test_f1_mean = t.at("f1_mean");
    m.test_f1_se = t.at("f1_se");
    m.test_auroc_mean = t.at("auroc_mean");
    m.test_auroc_se = t.at("auroc_se");
    rep.models.push_back(std::move(m));
  }
  return rep;
}

std::string ExperimentReport::table() const {
  std::ostringstream out;
  out << "experiment " << name << "\n";
  out << "model      | runs | test F1            | test AUROC         | best run (val F1 / test F1)\n";
  for (const auto& m : models) {
    std::string name_col = m.model;
    name_col.resize(std::max<std::size_t>(name_col.size(), 10), ' ');
    out << name_col << " | " << m.runs.size() << "    | " << pm(m.test_f1_mean, m.test_f1_se) << " | "
        << pm(m.test_auroc_mean, m.test_auroc_se) << " | ";
    if (m.runs.empty()) {
      out << "-\n";
      continue;
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f / %.4f", m.best().val.f1, m.best().test.f1);
    out << buf << "\n";
  }
  return out.str();
}

}  // namespace homnet
