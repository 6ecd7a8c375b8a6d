#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "maskcontrast/common.h"

MC_NAMESPACE_BEGIN

// Library side of the command-line tool. Each command throws mc::Error
// subclasses; run_guarded() maps them to exit codes.

struct SynthOptions {
  std::filesystem::path out;
  int images = 200;
  int classes = 2;
  int size = 32;
  std::uint64_t seed = 0;
};
void cmd_synth(const SynthOptions& options);

struct TrainOptions {
  std::filesystem::path data;
  std::filesystem::path out;
  std::optional<std::filesystem::path> config_file;
  /// Defaults to `out` with the extension replaced by ".csv".
  std::optional<std::filesystem::path> metrics;
  /// Applied after the config file, in order.
  std::vector<std::pair<std::string, std::string>> overrides;
};
void cmd_train(const TrainOptions& options, std::ostream& log);

enum class EvalMode { kKMeans, kOvercluster, kLinear };

struct EvalOptions {
  EvalMode mode = EvalMode::kKMeans;
  std::filesystem::path checkpoint;
  std::filesystem::path data;
  int clusters = 0;  // 0: number of object classes in the labels
  int runs = 5;
  std::uint64_t seed = 0;
  bool saliency_from_file = false;
  bool foreground_only = false;
  int probe_epochs = 60;
  std::optional<std::filesystem::path> out;  // JSON report; stdout if unset
};
/// Returns the JSON report text.
std::string cmd_eval(const EvalOptions& options);

struct IndexOptions {
  std::filesystem::path checkpoint;
  std::filesystem::path data;
  std::filesystem::path out;
  std::string split = "train";
  bool predicted_masks = false;  // default: saliency files
};
void cmd_index(const IndexOptions& options);

struct RetrieveOptions {
  std::filesystem::path index;
  /// Either an index file of query descriptors or an image id inside `index`.
  std::string query;
  std::size_t topk = 5;
  std::optional<std::filesystem::path> out;
};
std::string cmd_retrieve(const RetrieveOptions& options);

struct FinetuneOptions {
  std::filesystem::path checkpoint;
  std::filesystem::path data;
  std::filesystem::path out;
  double fraction = 1.0;
  std::optional<std::filesystem::path> config_file;
  std::vector<std::pair<std::string, std::string>> overrides;
};
void cmd_finetune(const FinetuneOptions& options, std::ostream& log);

/// Runs `body`: 0 on success, 2 for DataError (bad input or usage), 1 for any
/// other failure. The message goes to `err`.
int run_guarded(const std::function<void()>& body, std::ostream& err);

MC_NAMESPACE_END
