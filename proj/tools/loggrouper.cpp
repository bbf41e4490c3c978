// Command-line front end. Everything goes through the C interface.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "loggrouper/loggrouper.h"

namespace {

using nlohmann::json;

enum Exit { kOk = 0, kInternal = 1, kUsage = 2, kEmpty = 3, kAnalysis = 4, kEnvironment = 5 };

int exit_for(lg_status s) {
  switch (s) {
    case LG_OK: return kOk;
    case LG_ERR_INVALID_ARGUMENT:
    case LG_ERR_PARSE:
    case LG_ERR_NOT_FOUND:
    case LG_ERR_CORRUPT:
      return kUsage;
    case LG_ERR_EMPTY: return kEmpty;
    case LG_ERR_DEGENERATE: return kAnalysis;
    case LG_ERR_EXISTS:
    case LG_ERR_IO:
    case LG_ERR_UNAVAILABLE:
      return kEnvironment;
    default: return kInternal;
  }
}

int fail(lg_status s) {
  std::cerr << "error: " << lg_last_error() << '\n';
  return exit_for(s);
}

bool read_input(const std::string& path, std::string& out) {
  if (path == "-") {
    out.assign(std::istreambuf_iterator<char>(std::cin), {});
    return true;
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  out.assign(std::istreambuf_iterator<char>(in), {});
  return true;
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

struct IngestArgs {
  std::string input, format = "jsonl", rules, out;
};

int cmd_ingest(const IngestArgs& a) {
  std::string data;
  if (!read_input(a.input, data)) {
    std::cerr << "error: cannot read '" << a.input << "'\n";
    return kUsage;
  }
  lg_records* records = nullptr;
  size_t dropped = 0;
  lg_status s;
  if (a.format == "jsonl") {
    s = lg_records_parse_jsonl(data.data(), data.size(), &records, &dropped);
  } else {
    std::string rules;
    if (!a.rules.empty() && !read_input(a.rules, rules)) {
      std::cerr << "error: cannot read rules '" << a.rules << "'\n";
      return kUsage;
    }
    s = lg_records_parse_plaintext(data.data(), data.size(), a.rules.empty() ? nullptr : rules.c_str(),
                                   a.input == "-" ? "stdin" : a.input.c_str(), &records, &dropped);
  }
  if (s != LG_OK) return fail(s);
  const size_t n = lg_records_size(records);
  std::cout << "records: " << n << "\ndropped: " << dropped << '\n';
  if (n == 0) {
    lg_records_free(records);
    std::cerr << "error: empty corpus\n";
    return kEmpty;
  }
  s = lg_records_save(records, a.out.c_str());
  lg_records_free(records);
  return s == LG_OK ? kOk : fail(s);
}

struct RunArgs {
  std::string corpus, config, from, to, branches, vectorizers, clusterers, preprocess, out;
  std::string k_range;
  long long seed = -1;
};

int cmd_run(const RunArgs& a) {
  json config = json::object();
  if (!a.config.empty()) {
    std::string text;
    if (!read_input(a.config, text)) {
      std::cerr << "error: cannot read config '" << a.config << "'\n";
      return kUsage;
    }
    try {
      config = json::parse(text);
    } catch (const json::exception& e) {
      std::cerr << "error: config: " << e.what() << '\n';
      return kUsage;
    }
    if (config.contains("config")) config = config["config"];
  }
  if (!config.contains("window") || !config["window"].is_object()) config["window"] = json::object();
  if (!a.from.empty()) config["window"]["from"] = a.from;
  if (!a.to.empty()) config["window"]["to"] = a.to;
  if (!a.branches.empty()) config["window"]["branches"] = split_csv(a.branches);
  if (!a.vectorizers.empty()) config["vectorizers"] = split_csv(a.vectorizers);
  if (!a.clusterers.empty()) config["clusterers"] = split_csv(a.clusterers);
  if (!a.preprocess.empty()) config["preprocessing"] = a.preprocess;
  if (a.seed >= 0) config["seed"] = a.seed;
  if (!a.k_range.empty()) {
    int lo = 0, hi = 0;
    char dash = 0;
    std::istringstream ks(a.k_range);
    if (!(ks >> lo >> dash >> hi) || dash != '-' || lo > hi) {
      std::cerr << "error: --k-range expects LOW-HIGH\n";
      return kUsage;
    }
    std::vector<int> ks_all;
    for (int k = lo; k <= hi; ++k) ks_all.push_back(k);
    config["k_range"] = ks_all;
  }

  lg_records* records = nullptr;
  lg_status s = lg_records_load(a.corpus.c_str(), &records);
  if (s != LG_OK) return fail(s);
  lg_run* run = nullptr;
  s = lg_run_execute(records, config.dump().c_str(), &run);
  lg_records_free(records);
  if (s != LG_OK) return fail(s);

  char* table = nullptr;
  if (lg_run_report(run, "table", &table) == LG_OK) {
    std::cout << table;
    lg_string_free(table);
  }
  char* combo = nullptr;
  int k = 0;
  if (lg_run_best(run, &combo, &k) == LG_OK) {
    std::cout << "best combo: " << combo << " (k=" << k << ")\n";
    lg_string_free(combo);
  }
  int rc = kOk;
  if (!a.out.empty()) {
    s = lg_run_persist(run, a.out.c_str());
    if (s != LG_OK) rc = fail(s);
    else std::cout << "artifacts: " << a.out << '\n';
  }
  if (rc == kOk && std::string(lg_run_status(run)) == "failed") {
    std::cerr << "error: every combo failed\n";
    rc = kAnalysis;
  }
  lg_run_free(run);
  return rc;
}

int cmd_report(const std::string& dir, const std::string& format) {
  lg_run* run = nullptr;
  lg_status s = lg_run_load(dir.c_str(), &run);
  if (s != LG_OK) return fail(s);
  char* text = nullptr;
  s = lg_run_report(run, format.c_str(), &text);
  lg_run_free(run);
  if (s != LG_OK) return fail(s);
  std::cout << text;
  lg_string_free(text);
  return kOk;
}

int cmd_serve(const std::string& config) {
  const lg_status s = lg_serve(config.empty() ? nullptr : config.c_str());
  return s == LG_OK ? kOk : fail(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Group nightly test-failure logs and summarize each group."};
  app.set_version_flag("--version", std::string(lg_version()));
  app.require_subcommand(1);

  IngestArgs ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "Parse raw logs into a corpus file");
  ingest_cmd->add_option("--input", ingest.input, "Input file, or - for stdin")->required();
  ingest_cmd->add_option("--format", ingest.format, "jsonl or plain")
      ->check(CLI::IsMember({"jsonl", "plain"}));
  ingest_cmd->add_option("--rules", ingest.rules, "Plaintext parsing rules");
  ingest_cmd->add_option("--out", ingest.out, "Corpus file to write")->required();

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Execute the vectorizer x clusterer matrix");
  run_cmd->add_option("--corpus", run.corpus, "Corpus JSONL file")->required();
  run_cmd->add_option("--config", run.config, "Run config JSON; flags override it");
  run_cmd->add_option("--from", run.from, "Window start (RFC 3339)");
  run_cmd->add_option("--to", run.to, "Window end (RFC 3339)");
  run_cmd->add_option("--branches", run.branches, "Comma-separated branches");
  run_cmd->add_option("--vectorizers", run.vectorizers, "tfidf,fasttext,external");
  run_cmd->add_option("--clusterers", run.clusterers, "kmeans,agglomerative,dbscan,spectral");
  run_cmd->add_option("--preprocess", run.preprocess, "raw, preprocessed or both");
  run_cmd->add_option("--seed", run.seed, "Random seed")->check(CLI::NonNegativeNumber);
  run_cmd->add_option("--k-range", run.k_range, "Candidate cluster counts, e.g. 2-10");
  run_cmd->add_option("--out", run.out, "Run directory to create");

  std::string report_dir, report_format = "table";
  auto* report_cmd = app.add_subcommand("report", "Render the quality report of a stored run");
  report_cmd->add_option("--run", report_dir, "Run directory")->required();
  report_cmd->add_option("--format", report_format, "table, json or csv")
      ->check(CLI::IsMember({"table", "json", "csv"}));

  std::string serve_config;
  auto* serve_cmd = app.add_subcommand("serve", "Serve the REST API");
  serve_cmd->add_option("--config", serve_config, "Service config JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  if (*ingest_cmd) return cmd_ingest(ingest);
  if (*run_cmd) return cmd_run(run);
  if (*report_cmd) return cmd_report(report_dir, report_format);
  if (*serve_cmd) return cmd_serve(serve_config);
  return kUsage;
}
