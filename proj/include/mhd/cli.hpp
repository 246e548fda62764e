#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>

namespace mhd::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kTolerance = 2,
  kInvariant = 3,
  kBlowUp = 4,
  kUsage = 64,
};

enum class Command { linear_decay, nonlinear_run, audit_lemma, audit_energy, audit_embedding, fit };

const char* command_name(Command c);
/// Throws ConfigError for an unknown name.
Command parse_command(const std::string& name);

struct ExperimentSpec {
  Command command = Command::nonlinear_run;
  std::filesystem::path config_path;  // empty: all defaults
  std::filesystem::path output_dir;   // empty: output.dir from the config, else "out"
  std::optional<std::uint64_t> seed;
  std::map<std::string, double> tolerances;  // override tolerance.* from the config
  bool quiet = false;
};

int cmd_linear_decay(const ExperimentSpec& spec, std::ostream& out, std::ostream& err);
int cmd_nonlinear_run(const ExperimentSpec& spec, std::ostream& out, std::ostream& err);
int cmd_audit(const ExperimentSpec& spec, std::ostream& out, std::ostream& err);
int cmd_fit(const ExperimentSpec& spec, std::ostream& out, std::ostream& err);

/// Dispatches on spec.command and maps errors onto the exit-code contract.
int run(const ExperimentSpec& spec, std::ostream& out, std::ostream& err);

/// mhd COMMAND [--config PATH] [--out DIR] [--seed N] [--tolerance KEY=VAL]... [--quiet]
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mhd::cli
