#pragma once

#include <iosfwd>
#include <string>

namespace vision::cli {

struct SelfcheckOptions {
  // Hidden hook: "adjoint" replaces every operator's adjoint with a scaled copy.
  std::string inject_fault;
};

// Prints one row per check and returns true when all of them pass.
bool run_selfcheck(const SelfcheckOptions& opts, std::ostream& out);

}  // namespace vision::cli
