#include "prunerank/cli.hpp"

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "prunerank/clients.hpp"
#include "prunerank/config.hpp"
#include "prunerank/errors.hpp"
#include "prunerank/evaluator.hpp"
#include "prunerank/labeler.hpp"
#include "prunerank/pruner.hpp"
#include "prunerank/service.hpp"
#include "prunerank/synthetic.hpp"
#include "prunerank/trainer.hpp"

namespace prunerank {

namespace {

using ojson = nlohmann::ordered_json;

// Flags shared by every subcommand that needs a scorer or thresholds.
struct CommonFlags {
  std::optional<std::string> config_path;
  ConfigOverrides overrides;
  bool keep_first_flag = false;
  CLI::Option* keep_first_opt = nullptr;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path,
                  "Config file (also read from PRUNERANK_CONFIG)");
  cmd->add_option("--scorer", flags.overrides.backend, "Scorer backend")
      ->check(CLI::IsMember({"lexical", "remote", "toy-model"}));
  cmd->add_option("--endpoint", flags.overrides.endpoint,
                  "Remote scorer endpoint (also PRUNERANK_SCORER_ENDPOINT)");
  cmd->add_option("--model", flags.overrides.model_path, "Model file for the toy-model backend");
  cmd->add_option("--batch-size", flags.overrides.batch_size, "Remote scoring batch size");
  cmd->add_option("--timeout-ms", flags.overrides.timeout_ms, "Remote scorer timeout");
  cmd->add_option("--threshold", flags.overrides.threshold,
                  "Pruning threshold in [0, 1] (also PRUNERANK_THRESHOLD)");
  flags.keep_first_opt =
      cmd->add_flag("--always-keep-first", flags.keep_first_flag, "Never prune the first sentence");
  cmd->add_option("--basis", flags.overrides.basis, "Compression accounting basis")
      ->check(CLI::IsMember({"characters", "tokens"}));
}

AppConfig resolve(CommonFlags& flags) {
  if (flags.keep_first_opt != nullptr && flags.keep_first_opt->count() > 0) {
    flags.overrides.always_keep_first = flags.keep_first_flag;
  }
  return resolve_config(flags.config_path, flags.overrides);
}

std::vector<std::string> parse_prune_input_line(const std::string& line, size_t line_no,
                                                std::string& query) {
  ojson j;
  try {
    j = ojson::parse(line);
  } catch (const ojson::exception& e) {
    throw ParseError(line_no, std::string("not valid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("query") || !j["query"].is_string()) {
    throw ParseError(line_no, "input needs a string query");
  }
  query = j["query"].get<std::string>();
  std::vector<std::string> passages;
  if (j.contains("passages") && j["passages"].is_array()) {
    for (const ojson& p : j["passages"]) {
      if (!p.is_string()) throw ParseError(line_no, "passages must be strings");
      passages.push_back(p.get<std::string>());
    }
  } else if (j.contains("passage") && j["passage"].is_string()) {
    passages.push_back(j["passage"].get<std::string>());
  } else {
    throw ParseError(line_no, "input needs passages (array) or passage (string)");
  }
  return passages;
}

int run_prune(CommonFlags& flags, const std::string& in_path, const std::string& out_path,
              bool dslr) {
  const AppConfig cfg = resolve(flags);
  auto scorer = make_scorer(cfg.service.scorer);

  std::ifstream file_in;
  if (!in_path.empty()) {
    file_in.open(in_path, std::ios::binary);
    if (!file_in) throw Error("cannot open: " + in_path);
  }
  std::istream& in = in_path.empty() ? std::cin : file_in;

  std::ofstream file_out;
  if (!out_path.empty()) {
    file_out.open(out_path, std::ios::binary);
    if (!file_out) throw Error("cannot open for writing: " + out_path);
  }
  std::ostream& out = out_path.empty() ? std::cout : file_out;

  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::string query;
    const std::vector<std::string> passages = parse_prune_input_line(line, line_no, query);

    ojson results = ojson::array();
    for (const std::string& text : passages) {
      const SegmentedPassage seg = segment(text);
      const PrunedPassage pruned =
          dslr ? dslr_prune(query, seg, *scorer, cfg.pruning.threshold, cfg.pruning.basis)
               : prune(query, seg, *scorer, cfg.pruning);
      ojson r;
      r["score"] = pruned.passage_score;
      r["kept"] = pruned.kept;
      r["pruned_text"] = pruned.pruned_text;
      r["compression"] = pruned.compression;
      results.push_back(std::move(r));
    }
    ojson result_line;
    result_line["query"] = query;
    result_line["results"] = std::move(results);
    out << result_line.dump() << '\n';
  }
  return 0;
}

int run_sweep(CommonFlags& flags, const std::string& data_path, std::vector<double> thresholds,
              const std::string& out_path, std::string jsonl_path, const std::string& pruner_name,
              const std::string& metric_name, int top_k) {
  const AppConfig cfg = resolve(flags);
  auto scorer = make_scorer(cfg.service.scorer);
  const std::vector<EvalRecord> records = load_eval_dataset(data_path);

  SweepOptions options;
  options.kind = pruner_name == "dslr" ? PrunerKind::dslr : PrunerKind::engine;
  options.metric = metric_name == "choice" ? EvalMetric::choice : EvalMetric::char3gram;
  options.top_k_passages = top_k;
  options.always_keep_first = cfg.pruning.always_keep_first;
  options.basis = cfg.pruning.basis;

  const std::vector<ParetoPoint> rows = sweep(records, thresholds, *scorer, options);
  write_report_csv(rows, out_path);
  if (jsonl_path.empty()) {
    jsonl_path = out_path;
    const std::string suffix = ".csv";
    if (jsonl_path.size() > suffix.size() &&
        jsonl_path.compare(jsonl_path.size() - suffix.size(), suffix.size(), suffix) == 0) {
      jsonl_path.resize(jsonl_path.size() - suffix.size());
    }
    jsonl_path += ".jsonl";
  }
  write_report_jsonl(rows, jsonl_path);
  std::cerr << "wrote " << rows.size() << " rows to " << out_path << " and " << jsonl_path << '\n';
  return 0;
}

int run_annotate(CommonFlags& flags, const std::string& in_path, const std::string& out_path,
                 const std::string& llm_endpoint, size_t limit, uint64_t seed,
                 const std::string& language, const std::string& prompt_file,
                 const std::string& report_path, size_t max_prompt_chars, int max_tokens) {
  const AppConfig cfg = resolve(flags);
  auto teacher = make_scorer(cfg.service.scorer);
  HttpLlmClient llm(llm_endpoint, cfg.service.scorer.timeout_ms);

  std::ifstream in(in_path, std::ios::binary);
  if (!in) throw Error("cannot open: " + in_path);
  std::vector<QueryPassagePair> pairs;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    ojson j;
    try {
      j = ojson::parse(line);
    } catch (const ojson::exception& e) {
      throw ParseError(line_no, std::string("not valid JSON: ") + e.what());
    }
    try {
      QueryPassagePair pair;
      pair.query = j.at("query").get<std::string>();
      pair.passage = j.at("passage").get<std::string>();
      pair.language = j.value("language", language);
      pairs.push_back(std::move(pair));
    } catch (const ojson::exception& e) {
      throw ParseError(line_no, std::string("bad query/passage pair: ") + e.what());
    }
  }

  DatasetOptions options;
  options.sample_limit = limit;
  options.seed = seed;
  options.annotate.language = language;
  options.annotate.max_prompt_chars = max_prompt_chars;
  options.annotate.max_tokens = max_tokens;
  if (!prompt_file.empty()) {
    std::ifstream pf(prompt_file, std::ios::binary);
    if (!pf) throw Error("cannot open prompt file: " + prompt_file);
    std::ostringstream buf;
    buf << pf.rdbuf();
    options.annotate.prompt_template = buf.str();
  }

  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + out_path);
  const AnnotationReport report = build_dataset(pairs, llm, *teacher, options, out);

  ojson rj;
  rj["n_examples"] = report.n_examples;
  rj["n_zero_label"] = report.n_zero_label;
  rj["n_malformed_citations"] = report.n_malformed_citations;
  rj["n_out_of_range"] = report.n_out_of_range;
  rj["n_skipped"] = report.n_skipped;
  if (!report_path.empty()) {
    std::ofstream rf(report_path, std::ios::binary);
    if (!rf) throw Error("cannot open for writing: " + report_path);
    rf << rj.dump() << '\n';
  }
  std::cout << rj.dump() << '\n';
  return 0;
}

int run_translate(CommonFlags& flags, const std::string& in_path, const std::string& out_path,
                  const std::string& endpoint, const std::string& target_language, bool rescore) {
  const AppConfig cfg = resolve(flags);
  HttpTranslatorClient translator(endpoint, cfg.service.scorer.timeout_ms);
  std::unique_ptr<Scorer> scorer;
  if (rescore) scorer = make_scorer(cfg.service.scorer);

  const std::vector<TrainingExample> examples = read_training_jsonl(in_path);
  std::vector<TrainingExample> translated;
  translated.reserve(examples.size());
  for (const TrainingExample& ex : examples) {
    translated.push_back(translate_example(ex, translator, target_language, scorer.get()));
  }
  write_training_jsonl(out_path, translated);
  std::cerr << "translated " << translated.size() << " examples to " << target_language << '\n';
  return 0;
}

int run_train_toy(const std::string& data_path, const std::string& out_path, TrainConfig config) {
  const std::vector<TrainingExample> dataset = read_training_jsonl(data_path);
  const TrainResult result = train(dataset, config);
  for (size_t e = 0; e < result.epoch_mean_loss.size(); ++e) {
    std::cerr << "epoch " << (e + 1) << " mean loss " << result.epoch_mean_loss[e] << '\n';
  }
  save_model(result.model, out_path);

  ojson summary;
  summary["examples"] = dataset.size();
  summary["epochs"] = config.epochs;
  summary["final_loss"] = result.epoch_mean_loss.back();
  summary["token_accuracy"] = token_accuracy(result.model, dataset);
  summary["rank_mse"] = rank_mse(result.model, dataset);
  summary["model"] = out_path;
  std::cout << summary.dump() << '\n';
  return 0;
}

int run_eval(const std::string& data_path, int recall_k, int ndcg_k) {
  const std::vector<EvalRecord> records = load_eval_dataset(data_path);
  struct Acc {
    size_t n = 0;
    double recall = 0.0;
    double ndcg = 0.0;
  };
  std::map<std::string, Acc> per_language;
  for (const EvalRecord& r : records) {
    if (!r.ranking || !r.relevant_ids || r.relevant_ids->empty()) continue;
    Acc& acc = per_language[r.language.empty() ? "und" : r.language];
    ++acc.n;
    acc.recall += recall_at_k(*r.ranking, *r.relevant_ids, recall_k);
    acc.ndcg += ndcg_at_k(*r.ranking, *r.relevant_ids, ndcg_k);
  }
  if (per_language.empty()) {
    throw Error("no records carry both ranking and relevant_ids");
  }
  Acc all;
  size_t n_languages = 0;
  for (const auto& [language, acc] : per_language) {
    ojson row;
    row["language"] = language;
    row["n"] = acc.n;
    row["recall_at_k"] = acc.recall / static_cast<double>(acc.n);
    row["ndcg_at_k"] = acc.ndcg / static_cast<double>(acc.n);
    std::cout << row.dump() << '\n';
    all.n += acc.n;
    all.recall += acc.recall / static_cast<double>(acc.n);
    all.ndcg += acc.ndcg / static_cast<double>(acc.n);
    ++n_languages;
  }
  ojson row;
  row["language"] = "ALL";
  row["n"] = all.n;
  row["recall_at_k"] = all.recall / static_cast<double>(n_languages);
  row["ndcg_at_k"] = all.ndcg / static_cast<double>(n_languages);
  std::cout << row.dump() << '\n';
  return 0;
}

PruningService* g_running_service = nullptr;

void handle_shutdown_signal(int) {
  if (g_running_service != nullptr) g_running_service->stop();
}

int run_serve(CommonFlags& flags, const std::string& listen) {
  if (!listen.empty()) flags.overrides.listen_address = listen;
  const AppConfig cfg = resolve(flags);

  PruningService service(cfg.service);
  service.check_scorer();
  const int port = service.bind();
  std::cerr << "listening on " << split_listen_address(cfg.service.listen_address).first << ':'
            << port << '\n';

  g_running_service = &service;
  std::signal(SIGINT, handle_shutdown_signal);
  std::signal(SIGTERM, handle_shutdown_signal);
  service.serve();
  g_running_service = nullptr;
  return 0;
}

int run_config(CommonFlags& flags) {
  const AppConfig cfg = resolve(flags);
  ojson j;
  j["service"]["listen_address"] = cfg.service.listen_address;
  j["service"]["max_batch"] = cfg.service.max_batch;
  j["service"]["request_timeout_ms"] = cfg.service.request_timeout_ms;
  j["scorer"]["backend"] = std::string(to_string(cfg.service.scorer.backend));
  j["scorer"]["endpoint"] = cfg.service.scorer.endpoint;
  j["scorer"]["model_path"] = cfg.service.scorer.model_path;
  j["scorer"]["batch_size"] = cfg.service.scorer.batch_size;
  j["scorer"]["timeout_ms"] = cfg.service.scorer.timeout_ms;
  j["pruning"]["threshold"] = cfg.pruning.threshold;
  j["pruning"]["always_keep_first"] = cfg.pruning.always_keep_first;
  j["pruning"]["basis"] = std::string(to_string(cfg.pruning.basis));
  std::cout << j.dump(2) << '\n';
  return 0;
}

int run_demo_data(const std::string& out_dir, size_t n_eval, size_t n_train, uint64_t seed) {
  std::filesystem::create_directories(out_dir);
  const std::string eval_path = out_dir + "/bilingual_qa.jsonl";
  const std::string train_path = out_dir + "/separable_train.jsonl";
  write_eval_dataset(eval_path, make_bilingual_qa_set(n_eval, seed));
  write_training_jsonl(train_path, make_separable_training_set(n_train, seed));
  std::cerr << "wrote " << eval_path << " (" << n_eval << " records) and " << train_path << " ("
            << n_train << " examples)\n";
  return 0;
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const RemoteUnavailable& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const ClientUnavailable& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const MalformedResponse& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const TranslationShapeError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace

int cli_dispatch(int argc, char** argv) {
  CLI::App app{"Relevance-guided context pruning for retrieval pipelines"};
  app.require_subcommand(1);

  // prune
  auto* prune_cmd = app.add_subcommand("prune", "Prune passages read as JSONL");
  CommonFlags prune_flags;
  add_common_flags(prune_cmd, prune_flags);
  std::string prune_in, prune_out;
  bool prune_dslr = false;
  prune_cmd->add_option("--in", prune_in, "Input JSONL (default stdin)");
  prune_cmd->add_option("--out", prune_out, "Output JSONL (default stdout)");
  prune_cmd->add_flag("--dslr", prune_dslr, "Score sentences independently instead");

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "Threshold sweep with a compression/quality report");
  CommonFlags sweep_flags;
  add_common_flags(sweep_cmd, sweep_flags);
  std::string sweep_data, sweep_out, sweep_jsonl, sweep_pruner = "engine", sweep_metric = "char3gram";
  std::vector<double> sweep_thresholds;
  int sweep_top_k = 5;
  sweep_cmd->add_option("--data", sweep_data, "Evaluation JSONL")->required();
  sweep_cmd->add_option("--thresholds", sweep_thresholds, "Thresholds to sweep")
      ->required()
      ->delimiter(',');
  sweep_cmd->add_option("--out", sweep_out, "Report CSV path")->required();
  sweep_cmd->add_option("--jsonl-out", sweep_jsonl, "Report JSONL path (default: CSV path with .jsonl)");
  sweep_cmd->add_option("--pruner", sweep_pruner, "Pruning strategy")
      ->check(CLI::IsMember({"engine", "dslr"}));
  sweep_cmd->add_option("--metric", sweep_metric, "Quality metric")
      ->check(CLI::IsMember({"char3gram", "choice"}));
  sweep_cmd->add_option("--top-k", sweep_top_k, "Passages scored per record");

  // annotate
  auto* annotate_cmd = app.add_subcommand("annotate", "Build training data from query/passage pairs");
  CommonFlags annotate_flags;
  add_common_flags(annotate_cmd, annotate_flags);
  std::string ann_in, ann_out, ann_llm, ann_language = "en", ann_prompt, ann_report;
  size_t ann_limit = 125000, ann_max_prompt = 8000;
  int ann_max_tokens = 256;
  uint64_t ann_seed = 0;
  annotate_cmd->add_option("--in", ann_in, "Query/passage pairs JSONL")->required();
  annotate_cmd->add_option("--out", ann_out, "Training JSONL to write")->required();
  annotate_cmd->add_option("--llm-endpoint", ann_llm, "Generation endpoint")->required();
  annotate_cmd->add_option("--limit", ann_limit, "Sample at most this many pairs");
  annotate_cmd->add_option("--seed", ann_seed, "Sampling seed");
  annotate_cmd->add_option("--language", ann_language, "Default answer language");
  annotate_cmd->add_option("--prompt-file", ann_prompt, "Prompt template file");
  annotate_cmd->add_option("--report", ann_report, "Write the annotation report JSON here");
  annotate_cmd->add_option("--max-prompt-chars", ann_max_prompt, "Prompt budget in codepoints");
  annotate_cmd->add_option("--max-tokens", ann_max_tokens, "Generation budget");

  // translate
  auto* translate_cmd = app.add_subcommand("translate", "Translate a training set");
  CommonFlags translate_flags;
  add_common_flags(translate_cmd, translate_flags);
  std::string tr_in, tr_out, tr_endpoint, tr_language;
  bool tr_rescore = false;
  translate_cmd->add_option("--in", tr_in, "Training JSONL")->required();
  translate_cmd->add_option("--out", tr_out, "Translated JSONL to write")->required();
  translate_cmd->add_option("--translator-endpoint", tr_endpoint, "Translation endpoint")->required();
  translate_cmd->add_option("--target-language", tr_language, "Target language tag")->required();
  translate_cmd->add_flag("--rescore", tr_rescore, "Re-score translated passages with the scorer");

  // train-toy
  auto* train_cmd = app.add_subcommand("train-toy", "Train the toy linear model");
  std::string train_data, train_out;
  TrainConfig train_config;
  train_cmd->add_option("--data", train_data, "Training JSONL")->required();
  train_cmd->add_option("--out", train_out, "Model file to write")->required();
  train_cmd->add_option("--epochs", train_config.epochs, "Training epochs");
  train_cmd->add_option("--learning-rate", train_config.learning_rate, "SGD step size");
  train_cmd->add_option("--batch-size", train_config.batch_size, "Mini-batch size");
  train_cmd->add_option("--lambda", train_config.lambda, "Weight of the score regression term");
  train_cmd->add_option("--seed", train_config.seed, "Shuffle seed");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Ranking metrics over an evaluation set");
  std::string eval_data;
  int eval_recall_k = 20, eval_ndcg_k = 10;
  eval_cmd->add_option("--data", eval_data, "Evaluation JSONL")->required();
  eval_cmd->add_option("--recall-k", eval_recall_k, "Cutoff for recall");
  eval_cmd->add_option("--ndcg-k", eval_ndcg_k, "Cutoff for nDCG");

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "Run the pruning HTTP service");
  CommonFlags serve_flags;
  add_common_flags(serve_cmd, serve_flags);
  std::string serve_listen;
  serve_cmd->add_option("--listen", serve_listen, "host:port to bind");
  serve_cmd->add_option("--max-batch", serve_flags.overrides.max_batch,
                        "Largest accepted passage batch");

  // config
  auto* config_cmd = app.add_subcommand("config", "Print the resolved configuration");
  CommonFlags config_flags;
  add_common_flags(config_cmd, config_flags);
  config_cmd->add_option("--listen", config_flags.overrides.listen_address, "host:port to bind");
  config_cmd->add_option("--max-batch", config_flags.overrides.max_batch,
                         "Largest accepted passage batch");

  // demo-data
  auto* demo_cmd = app.add_subcommand("demo-data", "Write the bundled synthetic datasets");
  std::string demo_dir = ".";
  size_t demo_eval = 100, demo_train = 200;
  uint64_t demo_seed = 42;
  demo_cmd->add_option("--out-dir", demo_dir, "Directory to write into");
  demo_cmd->add_option("--n-eval", demo_eval, "Evaluation records");
  demo_cmd->add_option("--n-train", demo_train, "Training examples");
  demo_cmd->add_option("--seed", demo_seed, "Generation seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help() << '\n';
    return 1;
  }

  if (prune_cmd->parsed()) {
    return guarded([&] { return run_prune(prune_flags, prune_in, prune_out, prune_dslr); });
  }
  if (sweep_cmd->parsed()) {
    return guarded([&] {
      return run_sweep(sweep_flags, sweep_data, sweep_thresholds, sweep_out, sweep_jsonl,
                       sweep_pruner, sweep_metric, sweep_top_k);
    });
  }
  if (annotate_cmd->parsed()) {
    return guarded([&] {
      return run_annotate(annotate_flags, ann_in, ann_out, ann_llm, ann_limit, ann_seed,
                          ann_language, ann_prompt, ann_report, ann_max_prompt, ann_max_tokens);
    });
  }
  if (translate_cmd->parsed()) {
    return guarded([&] {
      return run_translate(translate_flags, tr_in, tr_out, tr_endpoint, tr_language, tr_rescore);
    });
  }
  if (train_cmd->parsed()) {
    return guarded([&] { return run_train_toy(train_data, train_out, train_config); });
  }
  if (eval_cmd->parsed()) {
    return guarded([&] { return run_eval(eval_data, eval_recall_k, eval_ndcg_k); });
  }
  if (serve_cmd->parsed()) {
    return guarded([&] { return run_serve(serve_flags, serve_listen); });
  }
  if (config_cmd->parsed()) {
    return guarded([&] { return run_config(config_flags); });
  }
  if (demo_cmd->parsed()) {
    return guarded([&] { return run_demo_data(demo_dir, demo_eval, demo_train, demo_seed); });
  }
  std::cerr << app.help() << '\n';
  return 1;
}

}  // namespace prunerank
