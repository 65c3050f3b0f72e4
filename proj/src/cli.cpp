#include "trialsynth/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <memory>
#include <ostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "trialsynth/analysis.hpp"
#include "trialsynth/corpus.hpp"
#include "trialsynth/datasets.hpp"
#include "trialsynth/error.hpp"
#include "trialsynth/llm.hpp"
#include "trialsynth/metrics.hpp"
#include "trialsynth/pipeline.hpp"
#include "trialsynth/retrieval.hpp"

namespace trialsynth::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr const char* kMockTimestamp = "1970-01-01T00:00:00Z";

struct IngestArgs {
  fs::path xml_dir;
  fs::path labels;
  fs::path out;
};

struct RetrieveArgs {
  fs::path corpus;
  fs::path vocab;
  fs::path out;
  std::size_t min_pos = 3;
  std::size_t min_neg = 3;
};

struct GenerateArgs {
  fs::path corpus;
  fs::path vocab;
  fs::path out_dir;
  std::size_t total = 1;
  std::size_t cap = 0;
  std::string label_policy = "alternate";
  int fixed_label = 1;
  std::uint64_t seed = 42;
  bool no_diversity = false;
  std::string base_url = "https://api.openai.com/v1";
  std::string model = "gpt-4o-mini";
  double temperature = 1.0;
  std::size_t token_budget = kDefaultTokenBudget;
  std::size_t max_output_tokens = 0;
  std::size_t retry_cap = 5;
  std::size_t max_in_flight = 4;
  std::size_t workers = 1;
  std::size_t min_pos = 3;
  std::size_t min_neg = 3;
  fs::path mock;
  std::string timestamp;
};

struct SplitArgs {
  fs::path corpus;
  fs::path synthetic;
  fs::path out_dir;
  std::vector<std::string> kinds = {"in_distribution", "ratio", "generalization"};
  std::size_t ratio_train_size = kRatioTrainSize;
  std::size_t ratio_eval_size = kRatioEvalSize;
};

struct EvaluateArgs {
  std::vector<fs::path> predictions;
  std::string name = "run";
  fs::path out;
  bool append = false;
  double threshold = kDecisionThreshold;
};

struct AnalyzeArgs {
  fs::path real;
  fs::path synthetic;
  fs::path out_dir;
  std::size_t pairs = kDefaultPairCount;
  std::size_t bins = kDefaultBins;
  std::uint64_t seed = 42;
};

/// Resolved option values of one subcommand, for manifests.
json resolved_config(const CLI::App& sub, const std::vector<std::int64_t>& seeds) {
  json config;
  for (const CLI::Option* opt : sub.get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string& name = opt->get_lnames().front();
    if (name == "help") continue;
    std::vector<std::string> values = opt->count() > 0 ? opt->results() : std::vector<std::string>{};
    if (values.empty() && !opt->get_default_str().empty()) values = {opt->get_default_str()};
    if (opt->get_expected_max() > 1) {
      config[name] = values;
    } else {
      config[name] = values.empty() ? "" : values.front();
    }
  }
  config["seeds"] = seeds;
  return config;
}

void write_json(const fs::path& path, const json& doc) { write_file(path, doc.dump(2) + "\n"); }

void run_ingest(const IngestArgs& a, std::ostream& out) {
  auto records = load_xml_directory(a.xml_dir);
  auto labels = load_labels(a.labels);
  auto corpus = build_labeled_corpus(records, labels);
  write_corpus_jsonl(corpus, a.out);
  out << "ingested " << corpus.size() << " labeled trials (" << records.size()
      << " records) -> " << a.out.string() << "\n";
}

void run_retrieve(const RetrieveArgs& a, std::ostream& out) {
  auto corpus = read_corpus_jsonl(a.corpus);
  auto vocab = load_drug_vocab(a.vocab);
  auto index = index_by_intervention(corpus, vocab);
  auto eligible = eligible_interventions(index, a.min_pos, a.min_neg);
  write_file(a.out, eligibility_report_csv(eligible));
  out << eligible.size() << " eligible interventions -> " << a.out.string() << "\n";
}

void run_generate(const GenerateArgs& a, const json& config, std::ostream& out) {
  auto corpus = read_corpus_jsonl(a.corpus);
  auto vocab = load_drug_vocab(a.vocab);

  std::shared_ptr<Transport> transport;
  if (!a.mock.empty()) {
    transport = load_mock_transport(a.mock);
  } else {
    HttpOptions http;
    http.base_url = a.base_url;
    if (const char* key = std::getenv(kApiKeyEnv)) http.api_key = key;
    if (http.api_key.empty()) {
      throw Error(Errc::kUsageError,
                  std::string(kApiKeyEnv) + " is not set (or pass --mock for offline runs)");
    }
    transport = std::make_shared<HttpTransport>(std::move(http));
  }

  ClientOptions client_options;
  client_options.token_budget = a.token_budget;
  client_options.retry.max_attempts = a.retry_cap;
  client_options.max_in_flight = a.max_in_flight;
  LlmClient client(transport, client_options);

  GenerationPlan plan;
  plan.total_trials = a.total;
  plan.per_intervention_cap = a.cap;
  plan.label_policy = label_policy_from_string(a.label_policy);
  plan.fixed_label = outcome_from_int(a.fixed_label);
  plan.seed = a.seed;
  plan.with_diversity = !a.no_diversity;

  GenerationSettings settings;
  settings.model_name = a.model;
  settings.temperature = a.temperature;
  settings.max_output_tokens = a.max_output_tokens;
  settings.token_budget = a.token_budget;
  settings.min_successes = a.min_pos;
  settings.min_failures = a.min_neg;
  settings.workers = a.workers;
  std::string stamp = !a.timestamp.empty() ? a.timestamp : (a.mock.empty() ? "" : kMockTimestamp);
  if (!stamp.empty()) settings.clock = [stamp] { return stamp; };

  auto run = run_generation(corpus, vocab, plan, client, settings);
  export_synthetic(run.corpus, a.out_dir / "synthetic.jsonl");
  write_json(a.out_dir / "manifest.json", run_manifest(run, plan, settings, config));
  out << "generated " << run.corpus.trials.size() << " of " << run.units.size()
      << " synthetic trials -> " << (a.out_dir / "synthetic.jsonl").string() << "\n";
}

void run_split(const SplitArgs& a, const std::vector<std::int64_t>& seeds, const json& config,
               std::ostream& out) {
  auto corpus = read_corpus_jsonl(a.corpus);
  auto synthetic = import_synthetic(a.synthetic);
  auto partition = partition_ab(corpus, list_synthetic_interventions(synthetic));
  auto synthetic_items = items_of(synthetic);

  ExperimentOptions options;
  options.ratio_train_size = a.ratio_train_size;
  options.ratio_eval_size = a.ratio_eval_size;

  json manifest;
  manifest["partition"] = {{"a", partition.set_a.size()}, {"b", partition.set_b.size()}};
  manifest["seeds"] = seeds;
  json written = json::array();
  for (auto seed : seeds) {
    for (const auto& kind_name : a.kinds) {
      auto kind = experiment_kind_from_string(kind_name);
      for (const auto& spec :
           build_experiment(kind, partition, synthetic_items, static_cast<std::uint64_t>(seed),
                            options)) {
        fs::path file = a.out_dir / ("seed_" + std::to_string(seed)) / (spec.name + ".json");
        write_json(file, split_manifest(spec));
        written.push_back({{"name", spec.name},
                           {"seed", seed},
                           {"file", fs::relative(file, a.out_dir).generic_string()},
                           {"train", spec.train.size()},
                           {"val", spec.val.size()},
                           {"test", spec.test.size()},
                           {"synthetic", spec.synthetic_count},
                           {"real", spec.real_count}});
      }
    }
  }
  manifest["splits"] = written;
  manifest["config"] = config;
  write_json(a.out_dir / "manifest.json", manifest);
  out << "wrote " << written.size() << " split manifests (|A|=" << partition.set_a.size()
      << ", |B|=" << partition.set_b.size() << ") -> " << a.out_dir.string() << "\n";
}

void run_evaluate(const EvaluateArgs& a, const std::vector<std::int64_t>& seeds,
                  std::ostream& out) {
  if (seeds.size() != a.predictions.size()) {
    throw Error(Errc::kUsageError, "evaluate needs one seed per prediction file (" +
                                       std::to_string(a.predictions.size()) + " files, " +
                                       std::to_string(seeds.size()) + " seeds)");
  }
  std::vector<EvalReport> reports;
  for (std::size_t i = 0; i < a.predictions.size(); ++i) {
    reports.push_back(evaluate(load_predictions(a.predictions[i]), seeds[i], a.threshold));
  }
  auto agg = aggregate(reports);
  std::string row = report_csv_row(a.name, agg) + "\n";

  if (a.append && fs::exists(a.out)) {
    write_file(a.out, read_file(a.out) + row);
  } else {
    write_file(a.out, report_csv_header() + "\n" + row);
  }
  out << row;
}

void run_analyze(const AnalyzeArgs& a, const json& config, std::ostream& out) {
  auto real = load_embeddings(a.real);
  auto syn = load_embeddings(a.synthetic);

  std::vector<SimilaritySample> samples;
  samples.push_back(
      sample_pairs_within(real, PairMode::kRealReal, a.pairs, derive_seed(a.seed, 0)));
  samples.push_back(sample_pairs_within(syn, PairMode::kSynSyn, a.pairs, derive_seed(a.seed, 1)));
  samples.push_back(
      sample_pairs_across(real, syn, PairMode::kRealSyn, a.pairs, derive_seed(a.seed, 2)));

  std::string pairs;
  json counts;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    pairs += pairs_csv(samples[i], i == 0);
    auto h = histogram(samples[i].similarities, a.bins);
    std::string mode(to_string(samples[i].mode));
    write_file(a.out_dir / ("histogram_" + mode + ".csv"), histogram_csv(h));
    counts[mode] = h.total();
  }
  write_file(a.out_dir / "pairs.csv", pairs);

  json manifest;
  manifest["seed"] = a.seed;
  manifest["pairs_per_mode"] = counts;
  manifest["real"] = {{"items", real.size()}, {"dimension", real.dimension()}};
  manifest["synthetic"] = {{"items", syn.size()}, {"dimension", syn.dimension()}};
  manifest["config"] = config;
  write_json(a.out_dir / "manifest.json", manifest);
  out << "sampled " << a.pairs << " pairs per mode -> " << a.out_dir.string() << "\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Retrieval-reasoning synthetic clinical trial generation and evaluation"};
  app.name("trialsynth");
  app.require_subcommand(1);
  app.fallthrough();
  app.option_defaults()->always_capture_default();
  app.set_config("--config", "", "INI/TOML config file; command-line flags take precedence");

  std::vector<std::int64_t> seeds = {40, 41, 42};
  std::string log_level = "info";
  app.add_option("--seeds", seeds, "Experiment seeds");
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error, off");

  IngestArgs ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "XML records + labels -> corpus JSON-lines");
  ingest_cmd->add_option("--xml", ingest.xml_dir, "Directory of registry XML files")->required();
  ingest_cmd->add_option("--labels", ingest.labels, "CSV trial_id,label")->required();
  ingest_cmd->add_option("--out", ingest.out, "Corpus JSON-lines output")->required();

  RetrieveArgs retrieve;
  auto* retrieve_cmd = app.add_subcommand("retrieve", "Eligible-intervention report");
  retrieve_cmd->add_option("--corpus", retrieve.corpus, "Corpus JSON-lines")->required();
  retrieve_cmd->add_option("--vocab", retrieve.vocab, "Drug vocabulary, one per line")->required();
  retrieve_cmd->add_option("--out", retrieve.out, "CSV output")->required();
  retrieve_cmd->add_option("--min-pos", retrieve.min_pos, "Minimum success trials");
  retrieve_cmd->add_option("--min-neg", retrieve.min_neg, "Minimum failure trials");

  GenerateArgs gen;
  auto* gen_cmd = app.add_subcommand("generate", "Generate a synthetic corpus");
  gen_cmd->add_option("--corpus", gen.corpus, "Corpus JSON-lines")->required();
  gen_cmd->add_option("--vocab", gen.vocab, "Drug vocabulary")->required();
  gen_cmd->add_option("--out-dir", gen.out_dir, "Run output directory")->required();
  gen_cmd->add_option("--total", gen.total, "Number of trials to generate")
      ->check(CLI::PositiveNumber);
  gen_cmd->add_option("--cap", gen.cap, "Per-intervention cap (0 = none)");
  gen_cmd->add_option("--label-policy", gen.label_policy, "alternate | balanced | fixed")
      ->check(CLI::IsMember({"alternate", "balanced", "fixed"}));
  gen_cmd->add_option("--fixed-label", gen.fixed_label, "Label for the fixed policy")
      ->check(CLI::Range(0, 1));
  gen_cmd->add_option("--seed", gen.seed, "Schedule and sampling seed");
  gen_cmd->add_flag("--no-diversity", gen.no_diversity, "Never append the diversity prompt");
  gen_cmd->add_option("--base-url", gen.base_url, "OpenAI-compatible API prefix");
  gen_cmd->add_option("--model", gen.model, "Model name");
  gen_cmd->add_option("--temperature", gen.temperature, "Sampling temperature")
      ->check(CLI::NonNegativeNumber);
  gen_cmd->add_option("--token-budget", gen.token_budget, "Prompt token budget");
  gen_cmd->add_option("--max-output-tokens", gen.max_output_tokens, "0 = server default");
  gen_cmd->add_option("--retry-cap", gen.retry_cap, "Attempts per completion");
  gen_cmd->add_option("--max-in-flight", gen.max_in_flight, "Concurrent requests");
  gen_cmd->add_option("--workers", gen.workers, "Pairs processed concurrently");
  gen_cmd->add_option("--min-pos", gen.min_pos, "Minimum success trials per intervention");
  gen_cmd->add_option("--min-neg", gen.min_neg, "Minimum failure trials per intervention");
  gen_cmd->add_option("--mock", gen.mock, "Mock fixture (JSON list or {sha256: response})");
  gen_cmd->add_option("--timestamp", gen.timestamp, "Provenance timestamp override");

  SplitArgs split;
  auto* split_cmd = app.add_subcommand("split", "Build experiment split manifests");
  split_cmd->add_option("--corpus", split.corpus, "Real corpus JSON-lines")->required();
  split_cmd->add_option("--synthetic", split.synthetic, "Synthetic JSON-lines")->required();
  split_cmd->add_option("--out-dir", split.out_dir, "Output directory")->required();
  split_cmd->add_option("--kind", split.kinds, "in_distribution | ratio | generalization")
      ->check(CLI::IsMember({"in_distribution", "ratio", "generalization"}));
  split_cmd->add_option("--ratio-train-size", split.ratio_train_size, "Ratio train size");
  split_cmd->add_option("--ratio-eval-size", split.ratio_eval_size, "Ratio val/test size");

  EvaluateArgs eval;
  auto* eval_cmd = app.add_subcommand("evaluate", "Aggregate metrics over seed runs");
  eval_cmd->add_option("--predictions", eval.predictions, "Prediction CSVs, one per seed")
      ->required()
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--name", eval.name, "fine_tuning column value");
  eval_cmd->add_option("--out", eval.out, "Report CSV")->required();
  eval_cmd->add_flag("--append", eval.append, "Append a row to an existing report");
  eval_cmd->add_option("--threshold", eval.threshold, "Decision threshold")
      ->check(CLI::Range(0.0, 1.0));

  AnalyzeArgs analyze;
  auto* analyze_cmd = app.add_subcommand("analyze", "Cosine-similarity pair analysis");
  analyze_cmd->add_option("--real", analyze.real, "Real embeddings JSON-lines")->required();
  analyze_cmd->add_option("--synthetic", analyze.synthetic, "Synthetic embeddings")->required();
  analyze_cmd->add_option("--out-dir", analyze.out_dir, "Output directory")->required();
  analyze_cmd->add_option("--pairs", analyze.pairs, "Pairs per mode");
  analyze_cmd->add_option("--bins", analyze.bins, "Histogram bins")->check(CLI::PositiveNumber);
  analyze_cmd->add_option("--seed", analyze.seed, "Sampling seed");

  std::vector<const char*> argv = {"trialsynth"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }
  if (seeds.empty()) {
    err << "error: --seeds must not be empty\n";
    return kExitUsage;
  }
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*ingest_cmd) {
      run_ingest(ingest, out);
    } else if (*retrieve_cmd) {
      run_retrieve(retrieve, out);
    } else if (*gen_cmd) {
      run_generate(gen, resolved_config(*gen_cmd, seeds), out);
    } else if (*split_cmd) {
      run_split(split, seeds, resolved_config(*split_cmd, seeds), out);
    } else if (*eval_cmd) {
      run_evaluate(eval, seeds, out);
    } else if (*analyze_cmd) {
      run_analyze(analyze, resolved_config(*analyze_cmd, seeds), out);
    }
  } catch (const Error& e) {
    if (e.code() == Errc::kUsageError) {
      err << "error: " << e.what() << "\n";
      return kExitUsage;
    }
    nlohmann::json report = {{"error", to_string(e.code())},
                             {"module", module_of(e.code())},
                             {"message", e.what()}};
    err << report.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << "\n";
    return kExitDomainError;
  }
  return kExitOk;
}

}  // namespace trialsynth::cli
