#pragma once

#include <string>
#include <vector>

namespace jscc {

// Command-line surface of the library. `args` excludes the program name.
// Returns the process exit code: 0 on success, 1 on configuration or runtime
// failure (the message names the offending input), 2 on usage errors.
int run_cli(const std::vector<std::string>& args);

// main() conventions: argv[0] is the program name.
int run_cli(int argc, const char* const* argv);

// One finite-difference audit of a composed training objective on a tiny
// model: worst relative error between reverse-mode and central-difference
// gradients over sampled coordinates of every parameter tensor.
struct ObjectiveAudit {
  std::string name;
  double max_relative_error = 0.0;
};

// The verification suite behind the gradcheck subcommand: one audit per
// objective family (source coder; joint over the fixed-ratio, slot-limited
// and relaxed binary channels, covering the learned prior, the auxiliary
// decoder and the inference network; channel coder), each at a
// well-conditioned check point. Exposed so the acceptance suite runs the
// identical audit.
std::vector<ObjectiveAudit> audit_training_objectives(std::uint64_t seed);

}  // namespace jscc
