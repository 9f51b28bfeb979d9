#pragma once

#include <string>
#include <vector>

namespace cfgan {

/// One assertion of a property suite.
struct VerifyLine {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct VerifyReport {
  std::string suite;
  std::vector<VerifyLine> lines;
  double seconds = 0.0;

  bool passed() const;
  /// One "PASS|FAIL <suite>.<name> <detail>" line per assertion.
  std::string to_text() const;
};

/// gradients, theorem1, theorem2, gan_equiv, replay
const std::vector<std::string>& verify_suite_names();

/// Runs a suite with fixed seeds. Throws ConfigError for an unknown name.
VerifyReport verify_suite(const std::string& name);

}  // namespace cfgan
