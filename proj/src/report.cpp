#include "loggrouper/report.hpp"

#include <cstdio>
#include <sstream>

#include "json_codec.hpp"
#include "loggrouper/error.hpp"

namespace loggrouper {
namespace {

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

// Machine-readable output keeps the six significant digits of the JSON view.
std::string sig(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

struct Row {
  std::string vectorizer, preprocessed, algorithm, k, noise, sc, ch, nsc, nch;
};

std::vector<Row> rows(const PipelineRun& run, bool precise = false) {
  auto num = [precise](double v) { return precise ? sig(v) : fixed(v, 3); };
  std::vector<Row> out;
  if (!run.report) {
    for (const auto& c : run.combos)
      out.push_back({std::string(to_string(c.combo.vectorizer)), c.combo.preprocessed ? "yes" : "no",
                     std::string(to_string(c.combo.algorithm)), "-", "-", "-", "-", "-", "-"});
    return out;
  }
  const auto& r = *run.report;
  for (std::size_t i = 0; i < r.scores.size(); ++i) {
    const auto& s = r.scores[i];
    Row row{std::string(to_string(s.combo.vectorizer)), s.combo.preprocessed ? "yes" : "no",
            std::string(to_string(s.combo.algorithm)), "-", "-", "-", "-", "-", "-"};
    if (s.valid) {
      row.k = std::to_string(s.n_clusters);
      row.noise = fixed(100.0 * s.noise_fraction, 1);
      row.sc = num(s.sc);
      row.ch = num(s.ch);
      if (r.normalized[i]) {
        row.nsc = num(r.normalized[i]->nsc);
        row.nch = num(r.normalized[i]->nch);
      }
    }
    out.push_back(std::move(row));
  }
  return out;
}

std::string render_table(const PipelineRun& run) {
  const std::vector<std::string> header{"vectorizer", "preprocessed", "algorithm", "k", "noise%",
                                        "SC", "CH", "NSC", "NCH"};
  std::vector<std::vector<std::string>> cells{header};
  for (const auto& r : rows(run))
    cells.push_back({r.vectorizer, r.preprocessed, r.algorithm, r.k, r.noise, r.sc, r.ch, r.nsc, r.nch});
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& line : cells)
    for (std::size_t c = 0; c < line.size(); ++c) width[c] = std::max(width[c], line[c].size());

  std::ostringstream out;
  out << "status: " << to_string(run.status) << "\n\n";
  for (const auto& line : cells) {
    for (std::size_t c = 0; c < line.size(); ++c) {
      if (c) out << "  ";
      if (c < 3)
        out << line[c] << std::string(width[c] - line[c].size(), ' ');
      else
        out << std::string(width[c] - line[c].size(), ' ') << line[c];
    }
    out << '\n';
  }
  if (run.report) {
    out << "\nalgorithm averages\n";
    for (const auto& [alg, g] : run.report->group_averages)
      out << "  " << to_string(alg) << ": ANSC " << fixed(g.ansc, 3) << "  ANCH " << fixed(g.anch, 3)
          << "  (" << g.combos << " combos)\n";
    if (run.report->best_combo) out << "\nbest: " << combo_key(*run.report->best_combo) << '\n';
    bool header_done = false;
    for (const auto& s : run.report->scores)
      if (!s.valid) {
        if (!header_done) out << "\nfailed combos\n";
        header_done = true;
        out << "  " << combo_key(s.combo) << ": " << s.reason << '\n';
      }
  }
  if (!run.failure_reasons.empty()) {
    out << "\nfailures\n";
    for (const auto& f : run.failure_reasons) out << "  " << f << '\n';
  }
  return out.str();
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string render_csv(const PipelineRun& run) {
  std::ostringstream out;
  out << "vectorizer,preprocessed,algorithm,k,noise_pct,sc,ch,nsc,nch,status\n";
  const auto all = rows(run, true);
  for (std::size_t i = 0; i < all.size(); ++i) {
    const auto& r = all[i];
    std::string status = "ok";
    if (run.report && !run.report->scores[i].valid) status = run.report->scores[i].reason;
    if (!run.report) status = i < run.combos.size() ? run.combos[i].reason : "";
    auto blank = [](const std::string& s) { return s == "-" ? std::string() : s; };
    out << r.vectorizer << ',' << r.preprocessed << ',' << r.algorithm << ',' << blank(r.k) << ','
        << blank(r.noise) << ',' << blank(r.sc) << ',' << blank(r.ch) << ',' << blank(r.nsc) << ','
        << blank(r.nch) << ',' << csv_field(status) << '\n';
  }
  return out.str();
}

std::string render_json(const PipelineRun& run) {
  codec::json j;
  j["status"] = std::string(to_string(run.status));
  j["report"] = run.report ? codec::to_json(*run.report) : codec::json(nullptr);
  j["failure_reasons"] = run.failure_reasons;
  return j.dump(2) + "\n";
}

}  // namespace

ReportFormat parse_report_format(std::string_view name) {
  if (name == "table") return ReportFormat::Table;
  if (name == "json") return ReportFormat::Json;
  if (name == "csv") return ReportFormat::Csv;
  throw Error(ErrorCode::InvalidArgument, "unknown report format '" + std::string(name) + "'");
}

std::string render_report(const PipelineRun& run, ReportFormat format) {
  switch (format) {
    case ReportFormat::Table: return render_table(run);
    case ReportFormat::Json: return render_json(run);
    case ReportFormat::Csv: return render_csv(run);
  }
  return render_table(run);
}

}  // namespace loggrouper
