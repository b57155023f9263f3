#pragma once

#include "pf2/solver.hpp"
#include "pf2/synthetic.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pf2::cli {

enum ExitCode : int { kOk = 0, kError = 1, kNotConverged = 2 };

struct FitCommand {
  std::filesystem::path input;
  std::optional<std::filesystem::path> timestamps;
  std::filesystem::path out_dir = "pf2_out";
  ConstraintSpec constraints;
  FitOptions options;
  bool emit_u = false;
  bool verbose = false;
};

struct SynthCommand {
  SynthConfig config;
  std::filesystem::path out_dir = "pf2_synth";
};

struct EvalCommand {
  std::filesystem::path model_dir;
  std::filesystem::path tensor;
};

/// Fits and writes H/W/V/Q (and C, U) matrices, trace.json and summary.json
/// into out_dir. Returns 0 on convergence, 2 when the outer iteration cap is
/// reached first, 1 on any error (reported on `err`).
int cmd_fit(const FitCommand& cmd, std::ostream& err);

/// Writes tensor.tns, tensor.days and the ground truth under truth/.
int cmd_synth(const SynthCommand& cmd, std::ostream& err);

/// Prints {"fit": ..., "sparsity": ...} for a model directory against a tensor.
int cmd_eval(const EvalCommand& cmd, std::ostream& out, std::ostream& err);

/// Entry point: args[0] is the subcommand (no program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Flag value syntax, e.g. "H,W,V", "V=49,H=0.5", "l=7,degree=3,gap-aware".
std::vector<Mode> parse_mode_list(std::string_view text);
std::vector<std::pair<Mode, double>> parse_mode_values(std::string_view text);
SmoothnessConfig parse_smooth(std::string_view text);

/// Flat `key = value` file turned into `--key=value` arguments. Blank lines
/// and `#` comments are skipped.
std::vector<std::string> read_config_file(const std::filesystem::path& path);

nlohmann::json trace_to_json(const FitTrace& trace, bool include_timing);

}  // namespace pf2::cli
