#pragma once

// Plain-type view of a gradient-suite run, so the 32- and 64-bit flavours
// can report into one binary without sharing library types.

#include <string>
#include <vector>

namespace acceptance {

struct GradCaseResult {
  std::string name;
  double max_relative = 0;
  double limit = 0;
  std::string detail;
};

/// Runs every case against the 64-bit library.
std::vector<GradCaseResult> run_grad_suite_f64();

}  // namespace acceptance
