#include "json_codec.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "loggrouper/error.hpp"

namespace loggrouper::codec {
namespace {

std::string linkage_name(Linkage l) { return l == Linkage::Ward ? "ward" : "average"; }

Linkage parse_linkage(const std::string& s) {
  if (s == "ward") return Linkage::Ward;
  if (s == "average") return Linkage::Average;
  throw Error(ErrorCode::InvalidArgument, "unknown linkage '" + s + "'");
}

Timestamp timestamp_field(const json& j, const char* name) {
  const auto text = j.at(name).get<std::string>();
  auto ts = parse_timestamp(text);
  if (!ts)
    throw Error(ErrorCode::InvalidArgument,
                std::string("window.") + name + ": invalid timestamp '" + text + "'");
  return *ts;
}

}  // namespace

double sig6(double v) {
  if (!std::isfinite(v) || v == 0.0) return v == 0.0 ? 0.0 : v;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return std::strtod(buf, nullptr);
}

json to_json(const RunConfig& c) {
  json window = json::object();
  if (c.window.from != min_timestamp()) window["from"] = format_timestamp(c.window.from);
  if (c.window.to != max_timestamp()) window["to"] = format_timestamp(c.window.to);
  window["branches"] = std::vector<std::string>(c.window.branches.begin(), c.window.branches.end());

  json j;
  j["window"] = window;
  j["vectorizers"] = json::array();
  for (auto v : c.vectorizers) j["vectorizers"].push_back(std::string(to_string(v)));
  j["clusterers"] = json::array();
  for (auto a : c.clusterers) j["clusterers"].push_back(std::string(to_string(a)));
  j["preprocessing"] = std::string(to_string(c.preprocessing));
  j["seed"] = c.seed;
  j["k_range"] = c.k_range;
  if (c.provider) j["provider"] = *c.provider;
  if (c.word_vectors) j["word_vectors"] = *c.word_vectors;
  j["linkage"] = linkage_name(c.linkage);
  j["normalize_embeddings"] = c.normalize_embeddings;
  j["pca_variance"] = c.pca_variance;
  j["pca_max_dims"] = c.pca_max_dims;
  j["min_df"] = c.min_df;
  j["top_n"] = c.top_n;
  return j;
}

RunConfig config_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "config must be a JSON object");
  RunConfig c;
  try {
    if (auto w = j.find("window"); w != j.end() && !w->is_null()) {
      if (w->contains("from") && !(*w)["from"].is_null()) c.window.from = timestamp_field(*w, "from");
      if (w->contains("to") && !(*w)["to"].is_null()) c.window.to = timestamp_field(*w, "to");
      if (w->contains("branches"))
        for (const auto& b : (*w)["branches"]) c.window.branches.insert(b.get<std::string>());
    }
    if (j.contains("vectorizers")) {
      c.vectorizers.clear();
      for (const auto& v : j["vectorizers"]) c.vectorizers.push_back(parse_vectorizer(v.get<std::string>()));
    }
    if (j.contains("clusterers")) {
      c.clusterers.clear();
      for (const auto& a : j["clusterers"]) c.clusterers.push_back(parse_algorithm(a.get<std::string>()));
    }
    if (j.contains("preprocessing"))
      c.preprocessing = parse_preprocess_mode(j["preprocessing"].get<std::string>());
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("k_range")) c.k_range = j["k_range"].get<std::vector<int>>();
    if (j.contains("provider") && !j["provider"].is_null())
      c.provider = j["provider"].get<std::string>();
    if (j.contains("word_vectors") && !j["word_vectors"].is_null())
      c.word_vectors = j["word_vectors"].get<std::string>();
    if (j.contains("linkage")) c.linkage = parse_linkage(j["linkage"].get<std::string>());
    c.normalize_embeddings = j.value("normalize_embeddings", c.normalize_embeddings);
    c.pca_variance = j.value("pca_variance", c.pca_variance);
    c.pca_max_dims = j.value("pca_max_dims", c.pca_max_dims);
    c.min_df = j.value("min_df", c.min_df);
    c.top_n = j.value("top_n", c.top_n);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("invalid config: ") + e.what());
  }
  c.validate();
  return c;
}

json to_json(const QualityReport& report) {
  json scores = json::array();
  for (std::size_t i = 0; i < report.scores.size(); ++i) {
    const auto& s = report.scores[i];
    json e;
    e["combo"] = combo_key(s.combo);
    e["valid"] = s.valid;
    if (!s.valid) {
      e["reason"] = s.reason;
    } else {
      e["sc"] = sig6(s.sc);
      e["ch"] = sig6(s.ch);
      e["n_clusters"] = s.n_clusters;
      e["noise_fraction"] = sig6(s.noise_fraction);
      if (i < report.normalized.size() && report.normalized[i]) {
        e["nsc"] = sig6(report.normalized[i]->nsc);
        e["nch"] = sig6(report.normalized[i]->nch);
      }
    }
    scores.push_back(std::move(e));
  }
  json groups = json::object();
  for (const auto& [alg, g] : report.group_averages)
    groups[std::string(to_string(alg))] = {
        {"ansc", sig6(g.ansc)}, {"anch", sig6(g.anch)}, {"combos", g.combos}};
  json j;
  j["scores"] = std::move(scores);
  j["group_averages"] = std::move(groups);
  j["best_combo"] = report.best_combo ? json(combo_key(*report.best_combo)) : json(nullptr);
  return j;
}

QualityReport report_from_json(const json& j) {
  QualityReport r;
  for (const auto& e : j.at("scores")) {
    QualityScore s;
    s.combo = parse_combo_key(e.at("combo").get<std::string>());
    s.valid = e.at("valid").get<bool>();
    if (!s.valid) {
      s.reason = e.value("reason", "");
      r.normalized.emplace_back();
    } else {
      s.sc = e.at("sc").get<double>();
      s.ch = e.at("ch").get<double>();
      s.n_clusters = e.at("n_clusters").get<int>();
      s.noise_fraction = e.at("noise_fraction").get<double>();
      if (e.contains("nsc"))
        r.normalized.push_back(NormalizedScore{e.at("nsc").get<double>(), e.at("nch").get<double>()});
      else
        r.normalized.emplace_back();
    }
    r.scores.push_back(std::move(s));
  }
  for (const auto& [name, g] : j.at("group_averages").items())
    r.group_averages[parse_algorithm(name)] =
        GroupAverage{g.at("ansc").get<double>(), g.at("anch").get<double>(), g.at("combos").get<int>()};
  if (!j.at("best_combo").is_null())
    r.best_combo = parse_combo_key(j.at("best_combo").get<std::string>());
  return r;
}

json to_json(const KeyphraseCloud& cloud) {
  json phrases = json::array();
  for (const auto& p : cloud.phrases)
    phrases.push_back({{"text", p.text}, {"score", sig6(p.score)}, {"weight", sig6(p.weight)}});
  return {{"cluster", cloud.cluster_label}, {"phrases", std::move(phrases)}};
}

KeyphraseCloud cloud_from_json(const json& j) {
  KeyphraseCloud c;
  c.cluster_label = j.at("cluster").get<int>();
  for (const auto& p : j.at("phrases"))
    c.phrases.push_back({p.at("text").get<std::string>(), p.at("score").get<double>(),
                         p.at("weight").get<double>()});
  return c;
}

json to_json(const LogRecord& r) {
  json j;
  j["id"] = r.id;
  j["timestamp"] = r.timestamp ? json(format_timestamp(*r.timestamp)) : json(nullptr);
  j["branch"] = r.branch;
  j["session_id"] = r.session_id;
  j["test_id"] = r.test_id;
  j["severity"] = std::string(to_string(r.severity));
  j["message"] = r.message;
  j["source"] = r.source;
  return j;
}

}  // namespace loggrouper::codec
