#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "maskcontrast/augment.h"
#include "maskcontrast/contrast.h"
#include "maskcontrast/model.h"
#include "maskcontrast/trainer.h"

MC_NAMESPACE_BEGIN

/// Everything a training run needs, settable by key.
struct RunConfig {
  ModelConfig model;
  AugmentConfig augment;
  LossConfig loss;
  TrainerConfig trainer;
  /// Set when the input size was given explicitly (else taken from the data).
  bool input_size_set = false;

  /// Sets one key. Throws DataError for unknown keys or unparsable values.
  void set(const std::string& key, const std::string& value);
  void validate() const;
  /// key=value lines for every setting, sorted by key.
  std::string dump() const;
};

/// Parses `key = value` lines. Blank lines and lines starting with '#' are
/// skipped. Errors name the file and line.
std::map<std::string, std::string> parse_config_text(const std::string& text, const std::string& source);
std::map<std::string, std::string> read_config_file(const std::filesystem::path& path);

MC_NAMESPACE_END
