// promptrel: build IDF tables, train per-word weights, score sentences
// against prompts, and inspect the learned models.
//
// Exit status: 0 on success, 1 on a runtime or data error, 2 on a usage
// error. Every subcommand echoes its fully resolved configuration so a run
// can be reproduced from its artifacts alone.

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <unordered_set>

#include <CLI11.hpp>
#include <json.hpp>

#include "promptrel/promptrel.hpp"

namespace {

using nlohmann::ordered_json;
namespace pr = promptrel;

// Usage errors discovered after flag parsing (for example a method missing
// its table flag).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

pr::EmbeddingTable load_embeddings(
    const std::string& path, const std::string& format,
    const std::unordered_set<std::string>* vocabulary = nullptr) {
  if (format == "binary") return pr::load_embeddings_binary(path, vocabulary);
  return pr::load_embeddings_text(path, vocabulary);
}

struct IdfArgs {
  std::string corpus;
  std::string out;
};

int cmd_idf(const IdfArgs& args) {
  ordered_json config{{"command", "idf"},
                      {"corpus", args.corpus},
                      {"out", args.out}};
  pr::SegmentedCorpus corpus = pr::load_plain_corpus(args.corpus);
  pr::IdfTable idf = pr::build_idf(corpus);
  pr::save_idf(idf, args.out);
  // The table format is fixed, so the config echo rides in a sidecar.
  pr::detail::write_file(args.out + ".run.json", config.dump() + "\n");
  std::cout << "idf: N=" << idf.n_sentences() << " sentences, vocabulary "
            << idf.size() << " words -> " << args.out << "\n";
  return 0;
}

struct TrainArgs {
  std::string corpus;
  std::string embeddings;
  std::string format = "text";
  std::string out;
  std::string report;  // defaults to <out>.report.json
  bool checkpoint = false;
  double lr = 0.1;
  double stddev = 2.5;
  int epochs = 5;
  std::uint64_t seed = 42;
};

int cmd_train(const TrainArgs& args) {
  std::string report_path =
      args.report.empty() ? args.out + ".report.json" : args.report;
  ordered_json config{{"command", "train"},
                      {"corpus", args.corpus},
                      {"embeddings", args.embeddings},
                      {"embeddings_format", args.format},
                      {"out", args.out},
                      {"report", report_path},
                      {"checkpoint", args.checkpoint},
                      {"lr", args.lr},
                      {"std", args.stddev},
                      {"epochs", args.epochs},
                      {"seed", args.seed}};
  pr::SegmentedCorpus corpus = pr::load_plain_corpus(args.corpus);
  // Only corpus words can receive weights, so the embedding load keeps just
  // those (plus lowercased forms, which the lookup fallback can resolve).
  std::unordered_set<std::string> vocab;
  for (const auto& doc : corpus.documents) {
    for (const auto& sent : doc) {
      for (const auto& tok : sent.tokens) {
        vocab.insert(pr::detail::ascii_lower(tok));
        vocab.insert(tok);
      }
    }
  }
  pr::EmbeddingTable emb = load_embeddings(args.embeddings, args.format, &vocab);

  pr::TrainerConfig tc;
  tc.learning_rate = args.lr;
  tc.neighbor_stddev = args.stddev;
  tc.epochs = args.epochs;
  tc.seed = args.seed;

  auto on_epoch = [&](int epoch, const pr::WeightTable& weights) {
    if (args.checkpoint) {
      pr::save_weights(weights, args.out + ".epoch" +
                                    std::to_string(epoch + 1) + ".tsv");
    }
  };
  pr::TrainResult result = pr::train(corpus, emb, tc, on_epoch);
  pr::save_weights(result.weights, args.out);
  std::string record = pr::train_report_record(result.report, config.dump());
  pr::detail::write_file(report_path, record + "\n");
  std::cout << record << "\n";
  return 0;
}

struct EvaluateArgs {
  std::string method;
  std::string prompts;
  std::string sentences;
  std::string idf;
  std::string embeddings;
  std::string format = "text";
  std::string weights;
  std::string out;     // optional score matrix TSV
  std::string report;  // defaults to <out>.report.json when --out is given
  double alpha = 0.5;
  std::uint64_t seed = 42;
};

int cmd_evaluate(const EvaluateArgs& args) {
  auto require = [&](const std::string& value, const char* flag) {
    if (value.empty()) {
      throw UsageError("--method " + args.method + " requires " + flag);
    }
  };
  if (args.method == "tfidf" || args.method == "idf-emb" ||
      args.method == "combo") {
    require(args.idf, "--idf");
  }
  if (args.method == "sum" || args.method == "idf-emb" ||
      args.method == "weighted" || args.method == "combo") {
    require(args.embeddings, "--embeddings");
  }
  if (args.method == "weighted" || args.method == "combo") {
    require(args.weights, "--weights");
  }

  std::string report_path = args.report;
  if (report_path.empty() && !args.out.empty()) {
    report_path = args.out + ".report.json";
  }
  ordered_json config{{"command", "evaluate"},
                      {"method", args.method},
                      {"prompts", args.prompts},
                      {"sentences", args.sentences},
                      {"idf", args.idf},
                      {"embeddings", args.embeddings},
                      {"embeddings_format", args.format},
                      {"weights", args.weights},
                      {"alpha", args.alpha},
                      {"seed", args.seed},
                      {"out", args.out},
                      {"report", report_path}};

  pr::LabeledDataset data =
      pr::load_labeled_dataset(args.prompts, args.sentences);

  // Tables stay alive for the whole scoring pass.
  std::optional<pr::IdfTable> idf;
  std::optional<pr::WeightTable> weights;
  std::optional<pr::EmbeddingTable> emb;
  if (!args.idf.empty()) idf = pr::load_idf(args.idf);
  if (!args.weights.empty()) weights = pr::load_weights(args.weights);
  if (!args.embeddings.empty()) {
    // Weighted scoring needs a weight for every embedding, so the table is
    // restricted to the weighted vocabulary.
    std::unordered_set<std::string> keep;
    const std::unordered_set<std::string>* filter = nullptr;
    if (weights &&
        (args.method == "weighted" || args.method == "combo")) {
      keep.insert(weights->words().begin(), weights->words().end());
      filter = &keep;
    }
    emb = load_embeddings(args.embeddings, args.format, filter);
  }

  pr::ScoreMatrix matrix;
  if (args.method == "tfidf") {
    matrix = pr::score_all(data, pr::Method::tfidf(*idf));
  } else if (args.method == "sum") {
    matrix = pr::score_all(data, pr::Method::embedding_sum(*emb));
  } else if (args.method == "idf-emb") {
    matrix = pr::score_all(data, pr::Method::idf_embedding(*emb, *idf));
  } else if (args.method == "weighted") {
    matrix = pr::score_all(data, pr::Method::weighted(*emb, *weights));
  } else if (args.method == "combo") {
    pr::ScoreMatrix lexical = pr::score_all(data, pr::Method::tfidf(*idf));
    pr::ScoreMatrix learned =
        pr::score_all(data, pr::Method::weighted(*emb, *weights));
    matrix = pr::score_combination(lexical, learned, args.alpha);
  } else if (args.method == "random") {
    matrix = pr::score_random(data, args.seed);
  } else if (args.method == "majority") {
    matrix = pr::score_majority(data);
  } else {
    throw UsageError("unknown method '" + args.method + "'");
  }

  pr::EvalReport report = pr::metrics(matrix, args.method);
  std::string record = pr::eval_report_record(report, config.dump());
  if (!args.out.empty()) pr::save_score_matrix(matrix, args.out);
  if (!report_path.empty()) pr::detail::write_file(report_path, record + "\n");
  std::cout << record << "\n";
  return 0;
}

struct InspectWeightsArgs {
  std::string weights;
  std::size_t top = 10;
  std::size_t bottom = 10;
};

int cmd_inspect_weights(const InspectWeightsArgs& args) {
  ordered_json config{{"command", "inspect weights"},
                      {"weights", args.weights},
                      {"top", args.top},
                      {"bottom", args.bottom}};
  std::cerr << config.dump() << "\n";
  pr::WeightTable weights = pr::load_weights(args.weights);
  pr::WeightExtremes ex = pr::inspect_weights(
      weights, std::max(args.top, args.bottom));
  char buf[32];
  // stdout carries only the data rows, lightest words first.
  for (std::size_t i = 0; i < std::min(args.bottom, ex.bottom.size()); ++i) {
    std::snprintf(buf, sizeof buf, "%.2f", ex.bottom[i].second);
    std::cout << ex.bottom[i].first << "\t" << buf << "\n";
  }
  for (std::size_t i = 0; i < std::min(args.top, ex.top.size()); ++i) {
    std::snprintf(buf, sizeof buf, "%.2f", ex.top[i].second);
    std::cout << ex.top[i].first << "\t" << buf << "\n";
  }
  return 0;
}

struct InspectPromptWordsArgs {
  std::string prompts;
  std::string prompt_id;
  std::string embeddings;
  std::string format = "text";
  std::string weights;
  std::size_t k = 10;
};

int cmd_inspect_prompt_words(const InspectPromptWordsArgs& args) {
  ordered_json config{{"command", "inspect prompt-words"},
                      {"prompts", args.prompts},
                      {"prompt_id", args.prompt_id},
                      {"embeddings", args.embeddings},
                      {"embeddings_format", args.format},
                      {"weights", args.weights},
                      {"k", args.k}};
  std::cerr << config.dump() << "\n";
  pr::LabeledDataset data = pr::load_prompts(args.prompts);
  auto it = data.prompts.find(args.prompt_id);
  if (it == data.prompts.end()) {
    throw std::runtime_error("unknown prompt id '" + args.prompt_id + "'");
  }
  pr::EmbeddingTable emb = load_embeddings(args.embeddings, args.format);
  pr::WeightTable weights = pr::load_weights(args.weights);
  std::vector<pr::WordScore> top =
      pr::top_words_for_prompt(it->second, emb, weights, args.k);
  char score_buf[32], weight_buf[32];
  for (const pr::WordScore& ws : top) {
    std::snprintf(score_buf, sizeof score_buf, "%.2f", ws.score);
    std::snprintf(weight_buf, sizeof weight_buf, "%.2f", ws.weight);
    std::cout << ws.word << "\t" << score_buf << "\t" << weight_buf << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sentence-to-prompt topical relevance toolkit"};
  app.require_subcommand(1);

  IdfArgs idf_args;
  CLI::App* idf = app.add_subcommand(
      "idf", "Build a sentence-level IDF table from a plain corpus");
  idf->add_option("--corpus", idf_args.corpus, "Plain corpus file")
      ->required();
  idf->add_option("--out", idf_args.out, "Output IDF TSV")->required();

  TrainArgs train_args;
  CLI::App* train = app.add_subcommand(
      "train", "Learn per-word weights over frozen embeddings");
  train->add_option("--corpus", train_args.corpus, "Plain corpus file")
      ->required();
  train->add_option("--embeddings", train_args.embeddings, "Embedding table")
      ->required();
  train
      ->add_option("--embeddings-format", train_args.format,
                   "Embedding file format")
      ->check(CLI::IsMember({"text", "binary"}))
      ->capture_default_str();
  train->add_option("--out", train_args.out, "Output weight TSV")->required();
  train->add_option("--report", train_args.report,
                    "Report path (default <out>.report.json)");
  train->add_flag("--checkpoint", train_args.checkpoint,
                  "Write <out>.epoch<k>.tsv after every epoch");
  train->add_option("--lr", train_args.lr, "Learning rate")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train->add_option("--std", train_args.stddev,
                    "Stddev of the positive-sample offset")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train->add_option("--epochs", train_args.epochs, "Training epochs")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train->add_option("--seed", train_args.seed, "RNG seed")
      ->capture_default_str();

  EvaluateArgs eval_args;
  CLI::App* evaluate = app.add_subcommand(
      "evaluate", "Score labeled sentences against prompts and report "
                  "accuracy and MRR");
  evaluate
      ->add_option("--method", eval_args.method,
                   "tfidf|sum|idf-emb|weighted|combo|random|majority")
      ->check(CLI::IsMember({"tfidf", "sum", "idf-emb", "weighted", "combo",
                             "random", "majority"}))
      ->required();
  evaluate->add_option("--prompts", eval_args.prompts, "Prompt TSV")
      ->required();
  evaluate->add_option("--sentences", eval_args.sentences, "Sentence TSV")
      ->required();
  evaluate->add_option("--idf", eval_args.idf, "IDF TSV (tfidf, idf-emb, combo)");
  evaluate->add_option("--embeddings", eval_args.embeddings,
                       "Embedding table (sum, idf-emb, weighted, combo)");
  evaluate
      ->add_option("--embeddings-format", eval_args.format,
                   "Embedding file format")
      ->check(CLI::IsMember({"text", "binary"}))
      ->capture_default_str();
  evaluate->add_option("--weights", eval_args.weights,
                       "Weight TSV (weighted, combo)");
  evaluate->add_option("--alpha", eval_args.alpha,
                       "combo mix: alpha*tfidf + (1-alpha)*weighted")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  evaluate->add_option("--seed", eval_args.seed, "Seed for --method random")
      ->capture_default_str();
  evaluate->add_option("--out", eval_args.out, "Score matrix TSV (optional)");
  evaluate->add_option("--report", eval_args.report,
                       "Report path (default <out>.report.json)");

  CLI::App* inspect =
      app.add_subcommand("inspect", "Inspect learned weight tables");
  inspect->require_subcommand(1);

  InspectWeightsArgs iw_args;
  CLI::App* iw = inspect->add_subcommand(
      "weights", "List the lightest and heaviest words");
  iw->add_option("--weights", iw_args.weights, "Weight TSV")->required();
  iw->add_option("--top", iw_args.top, "Heaviest words to list")
      ->capture_default_str();
  iw->add_option("--bottom", iw_args.bottom, "Lightest words to list")
      ->capture_default_str();

  InspectPromptWordsArgs ipw_args;
  CLI::App* ipw = inspect->add_subcommand(
      "prompt-words", "Words whose weighted vectors best match a prompt");
  ipw->add_option("--prompts", ipw_args.prompts, "Prompt TSV")->required();
  ipw->add_option("--prompt-id", ipw_args.prompt_id, "Prompt to inspect")
      ->required();
  ipw->add_option("--embeddings", ipw_args.embeddings, "Embedding table")
      ->required();
  ipw->add_option("--embeddings-format", ipw_args.format,
                  "Embedding file format")
      ->check(CLI::IsMember({"text", "binary"}))
      ->capture_default_str();
  ipw->add_option("--weights", ipw_args.weights, "Weight TSV")->required();
  ipw->add_option("--k", ipw_args.k, "Words to list")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*idf) return cmd_idf(idf_args);
    if (*train) return cmd_train(train_args);
    if (*evaluate) return cmd_evaluate(eval_args);
    if (*iw) return cmd_inspect_weights(iw_args);
    if (*ipw) return cmd_inspect_prompt_words(ipw_args);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
