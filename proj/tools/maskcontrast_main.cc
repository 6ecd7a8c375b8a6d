// maskcontrast: command-line front end.
//
//   maskcontrast synth    --out DIR [--images N --classes C --size S --seed N]
//   maskcontrast train    --data DIR --out CKPT [--config FILE --seed N --epochs N --set key=value ...]
//   maskcontrast eval     {kmeans|overcluster|linear} --checkpoint CKPT --data DIR [--clusters K --runs R]
//   maskcontrast index    --checkpoint CKPT --data DIR --out INDEX
//   maskcontrast retrieve --index INDEX --query {INDEX|ID} [--topk K]
//   maskcontrast finetune --checkpoint CKPT --data DIR --out CKPT [--fraction F]

#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "maskcontrast/commands.h"

namespace {

std::vector<std::pair<std::string, std::string>> split_overrides(const std::vector<std::string>& items) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw mc::DataError("--set expects key=value, got '" + item + "'");
    out.emplace_back(item.substr(0, eq), item.substr(eq + 1));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MaskContrast: pixel embeddings from salient object masks"};
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Suppress progress and warnings");

  mc::SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic one-object-per-image dataset");
  synth_cmd->add_option("--out", synth.out, "Output directory")->required();
  synth_cmd->add_option("--images", synth.images, "Number of images");
  synth_cmd->add_option("--classes", synth.classes, "Number of object classes (>= 2)");
  synth_cmd->add_option("--size", synth.size, "Image side length");
  synth_cmd->add_option("--seed", synth.seed, "Random seed");

  mc::TrainOptions train;
  std::string train_config, train_metrics;
  std::vector<std::string> train_sets;
  std::optional<std::uint64_t> train_seed;
  std::optional<int> train_epochs;
  auto* train_cmd = app.add_subcommand("train", "Self-supervised MaskContrast training");
  train_cmd->add_option("--data", train.data, "Dataset root")->required();
  train_cmd->add_option("--out", train.out, "Checkpoint to write")->required();
  train_cmd->add_option("--config", train_config, "key=value config file");
  train_cmd->add_option("--metrics", train_metrics, "Metrics CSV (default: checkpoint path with .csv)");
  train_cmd->add_option("--seed", train_seed, "Random seed (overrides config)");
  train_cmd->add_option("--epochs", train_epochs, "Epochs (overrides config)");
  train_cmd->add_option("--set", train_sets, "Override a config key (key=value), repeatable");

  mc::EvalOptions eval;
  std::string eval_mode, eval_out;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a labelled dataset");
  eval_cmd->add_option("mode", eval_mode, "kmeans | overcluster | linear")
      ->required()
      ->check(CLI::IsMember({"kmeans", "overcluster", "linear"}));
  eval_cmd->add_option("--checkpoint", eval.checkpoint, "Model checkpoint")->required();
  eval_cmd->add_option("--data", eval.data, "Dataset root with labels/")->required();
  eval_cmd->add_option("--clusters", eval.clusters, "Number of clusters (default: object classes)");
  eval_cmd->add_option("--runs", eval.runs, "Clustering runs to average");
  eval_cmd->add_option("--seed", eval.seed, "Random seed");
  eval_cmd->add_flag("--saliency-from-file", eval.saliency_from_file, "Use saliency files instead of the saliency head");
  eval_cmd->add_flag("--foreground-only", eval.foreground_only, "Score only ground-truth object pixels");
  eval_cmd->add_option("--probe-epochs", eval.probe_epochs, "Linear probe epochs");
  eval_cmd->add_option("--out", eval_out, "Write the JSON report here (default: stdout)");

  mc::IndexOptions index;
  auto* index_cmd = app.add_subcommand("index", "Build a segment retrieval index");
  index_cmd->add_option("--checkpoint", index.checkpoint, "Model checkpoint")->required();
  index_cmd->add_option("--data", index.data, "Dataset root")->required();
  index_cmd->add_option("--out", index.out, "Index file to write")->required();
  index_cmd->add_option("--split", index.split, "Split tag stored in the index");
  index_cmd->add_flag("--predicted-masks", index.predicted_masks, "Pool over the saliency head's masks");

  mc::RetrieveOptions retrieve;
  std::string retrieve_out;
  auto* retrieve_cmd = app.add_subcommand("retrieve", "Nearest segments for query descriptors");
  retrieve_cmd->add_option("--index", retrieve.index, "Index file")->required();
  retrieve_cmd->add_option("--query", retrieve.query, "Query index file, or an image id in --index")->required();
  retrieve_cmd->add_option("--topk", retrieve.topk, "Neighbours per query");
  retrieve_cmd->add_option("--out", retrieve_out, "Write the JSON result here (default: stdout)");

  mc::FinetuneOptions finetune;
  std::string finetune_config;
  std::vector<std::string> finetune_sets;
  auto* finetune_cmd = app.add_subcommand("finetune", "Supervised fine-tuning with a class head");
  finetune_cmd->add_option("--checkpoint", finetune.checkpoint, "Pretrained checkpoint")->required();
  finetune_cmd->add_option("--data", finetune.data, "Dataset root with labels/")->required();
  finetune_cmd->add_option("--out", finetune.out, "Classifier checkpoint to write")->required();
  finetune_cmd->add_option("--fraction", finetune.fraction, "Fraction of labelled images, in (0,1]");
  finetune_cmd->add_option("--config", finetune_config, "key=value config file");
  finetune_cmd->add_option("--set", finetune_sets, "Override a config key (key=value), repeatable");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  mc::set_log_quiet(quiet);

  return mc::run_guarded(
      [&] {
        if (*synth_cmd) {
          mc::cmd_synth(synth);
        } else if (*train_cmd) {
          if (!train_config.empty()) train.config_file = train_config;
          if (!train_metrics.empty()) train.metrics = train_metrics;
          train.overrides = split_overrides(train_sets);
          if (train_seed) train.overrides.emplace_back("seed", std::to_string(*train_seed));
          if (train_epochs) train.overrides.emplace_back("epochs", std::to_string(*train_epochs));
          std::ostringstream sink;
          mc::cmd_train(train, quiet ? static_cast<std::ostream&>(sink) : std::cerr);
        } else if (*eval_cmd) {
          eval.mode = eval_mode == "kmeans"        ? mc::EvalMode::kKMeans
                      : eval_mode == "overcluster" ? mc::EvalMode::kOvercluster
                                                   : mc::EvalMode::kLinear;
          if (!eval_out.empty()) eval.out = eval_out;
          const std::string json = mc::cmd_eval(eval);
          if (!eval.out) std::cout << json;
        } else if (*index_cmd) {
          mc::cmd_index(index);
        } else if (*retrieve_cmd) {
          if (!retrieve_out.empty()) retrieve.out = retrieve_out;
          const std::string json = mc::cmd_retrieve(retrieve);
          if (!retrieve.out) std::cout << json;
        } else if (*finetune_cmd) {
          if (!finetune_config.empty()) finetune.config_file = finetune_config;
          finetune.overrides = split_overrides(finetune_sets);
          std::ostringstream sink;
          mc::cmd_finetune(finetune, quiet ? static_cast<std::ostream&>(sink) : std::cerr);
        }
      },
      std::cerr);
}
