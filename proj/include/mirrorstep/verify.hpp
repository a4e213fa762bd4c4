#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace mirrorstep {

enum class VerifySuite { Sequence, Geometry, Bounds, All };

VerifySuite parse_verify_suite(std::string_view name);
std::string_view suite_name(VerifySuite suite);

struct CheckResult {
  std::string suite;
  std::string name;
  bool passed = false;
  std::string detail;
};

struct VerifyOptions {
  // Test hook: evaluates the sequence closed form with a reciprocal theta so
  // the harness can be shown to fail loudly.
  bool inject_theta_fault = false;
  unsigned workers = 1;
};

struct VerifyReport {
  std::vector<CheckResult> checks;
  bool passed() const;
  std::vector<std::string> failed_names() const;
  std::string to_json() const;
};

VerifyReport run_verify(VerifySuite suite, const VerifyOptions& options = {});

}  // namespace mirrorstep
