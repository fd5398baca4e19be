#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "levy_optstop/cli.hpp"

namespace cli = levy_optstop::cli;

namespace {

// Turns the leftover "--section.key value" / "--section.key=value" tokens
// into overrides.
bool dotted_overrides(const std::vector<std::string>& extra, cli::KeyValues& out,
                      std::string& error) {
  for (std::size_t i = 0; i < extra.size(); ++i) {
    const std::string& a = extra[i];
    if (a.rfind("--", 0) != 0 || a.find('.') == std::string::npos) {
      error = "unexpected argument '" + a + "'";
      return false;
    }
    const std::string body = a.substr(2);
    const auto eq = body.find('=');
    if (eq != std::string::npos) {
      out[body.substr(0, eq)] = body.substr(eq + 1);
      continue;
    }
    if (i + 1 >= extra.size()) {
      error = "missing value for '" + a + "'";
      return false;
    }
    out[body] = extra[++i];
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Perpetual American and Swing options under negative rates in one-sided Levy markets"};
  app.require_subcommand(1);

  struct Common {
    std::string config, out, format;
    std::optional<std::uint64_t> seed;
  };
  Common common;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"price", "price the contract and report boundaries"},
      {"sweep", "value and stopping region over a spot grid (CSV)"},
      {"swing", "Swing put ladder of exercise intervals"},
      {"classify", "exercise regime of the contract"},
      {"validate", "analytic, Monte Carlo and symmetry checks"},
  };
  std::vector<CLI::App*> subs;
  for (const auto& [name, help] : commands) {
    CLI::App* s = app.add_subcommand(name, help);
    s->add_option("--config", common.config, "config file");
    s->add_option("--out", common.out, "output file (default stdout)");
    s->add_option("--format", common.format, "json, csv or table")
        ->check(CLI::IsMember({"json", "csv", "table"}));
    s->add_option("--seed", common.seed, "seed for the mc and swing sections");
    s->allow_extras();
    s->footer("Any config key can be overridden as --section.key VALUE.");
    subs.push_back(s);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kExitConfig;
  }

  CLI::App* sub = nullptr;
  for (CLI::App* s : subs) {
    if (s->parsed()) sub = s;
  }
  const std::string command = sub->get_name();
  cli::KeyValues kv, over;
  std::string error;
  try {
    if (!common.config.empty()) kv = cli::load_config(common.config);
    if (!dotted_overrides(sub->remaining(), over, error)) {
      std::cerr << "error: " << error << "\n";
      return cli::kExitConfig;
    }
    if (!common.format.empty()) over["output.format"] = common.format;
    if (!common.out.empty()) over["output.path"] = common.out;
    if (common.seed) {
      over["mc.seed"] = std::to_string(*common.seed);
      const bool swing = command == "swing" || kv.count("swing.n_rights") || over.count("swing.n_rights");
      if (swing) over["swing.seed"] = std::to_string(*common.seed);
    }
    cli::merge_overrides(kv, over);
  } catch (const levy_optstop::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kExitConfig;
  }

  const cli::CommandResult r = cli::run_command(command, kv);
  if (!r.message.empty()) {
    std::cerr << (r.exit_code == 0 ? "note: " : "error: ") << r.message;
    if (r.message.back() != '\n') std::cerr << "\n";
  }
  if (!r.output.empty()) {
    const auto it = kv.find("output.path");
    if (it != kv.end()) {
      std::ofstream f(it->second, std::ios::binary);
      if (!f) {
        std::cerr << "error: cannot write " << it->second << "\n";
        return cli::kExitConfig;
      }
      f << r.output;
    } else {
      std::cout << r.output;
    }
  }
  return r.exit_code;
}
