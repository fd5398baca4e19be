#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "levy_optstop/error.hpp"
#include "levy_optstop/levy.hpp"
#include "levy_optstop/mc.hpp"
#include "levy_optstop/pricing.hpp"
#include "levy_optstop/swing.hpp"

namespace levy_optstop::cli {

// Flat "section.key" -> raw value map.
using KeyValues = std::map<std::string, std::string>;

// Sectioned key = value text; '#' and ';' start comments.
KeyValues parse_config(std::string_view text);
KeyValues load_config(const std::string& path);
// Applies overrides on top of base; keys must be dotted.
void merge_overrides(KeyValues& base, const KeyValues& overrides);

enum class Format { Json, Csv, Table };

struct SpotSweep {
  double min = 0.0;
  double max = 0.0;
  int points = 0;
  std::vector<double> spots() const;
};

struct RunConfig {
  LevyModel model;
  bool explicit_mu = false;
  OptionSpec contract;
  std::optional<SpotSweep> sweep;
  std::optional<SwingSpec> swing;
  McConfig mc;
  int validate_triples = 3;
  std::optional<Format> format;
  std::optional<std::string> out_path;
};

RunConfig build_run_config(const KeyValues& kv);

// Locale-independent, at most 12 significant digits.
std::string format_number(double v);

struct CommandResult {
  int exit_code = 0;
  std::string output;  // report in the requested format
  std::string message;  // diagnostics for stderr
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitFiniteness = 3;
inline constexpr int kExitOptimizer = 4;
inline constexpr int kExitValidation = 5;

int exit_code_for(ErrorKind kind);

CommandResult cmd_price(const RunConfig& cfg);
CommandResult cmd_sweep(const RunConfig& cfg);
CommandResult cmd_swing(const RunConfig& cfg);
CommandResult cmd_classify(const RunConfig& cfg);
CommandResult cmd_validate(const RunConfig& cfg);

// Builds the config and dispatches by name, mapping library errors to exit
// codes.
CommandResult run_command(std::string_view command, const KeyValues& kv);

}  // namespace levy_optstop::cli
