#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "oqs/oqs.hpp"

namespace {

void emit_error(const char* type, const std::string& message) {
  std::cerr << "{\"error\":{\"type\":\"" << type << "\",\"message\":\""
            << oqs::detail::json_escape(message) << "\"}}\n";
}

int run(const std::string& command, const oqs::RunConfig& rc, const oqs::json& merged) {
  oqs::Table table;
  if (command == "simulate")
    table = oqs::simulate_table(rc);
  else if (command == "kernel-scan")
    table = oqs::kernel_scan_table(rc);
  else if (command == "resonances")
    table = oqs::resonance_table(rc);
  else if (command == "wick-check")
    table = oqs::wick_table(rc);
  else
    table = oqs::qubit_demo_table(rc);

  std::ofstream file;
  const bool to_stdout = rc.output.path == "-";
  if (!to_stdout) {
    file.open(rc.output.path);
    if (!file) throw oqs::ConfigError("cannot open output file: " + rc.output.path);
  }
  std::ostream& os = to_stdout ? std::cout : file;
  if (rc.output.format == "csv")
    oqs::write_csv(os, table);
  else
    oqs::write_json(os, table, command, oqs::config_hash(merged));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"second-order open-system dynamics in the energy basis"};
  app.require_subcommand(1);
  std::string config_path, output_path, format, rwa, mode;
  std::vector<std::string> sets;
  app.add_option("--config", config_path, "json config file merged over built-in defaults");
  app.add_option("--set", sets, "dotted override, e.g. --set bath.eta=0.2")->take_all();
  app.add_option("--output", output_path, "output path, - for stdout");
  app.add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--rwa", rwa, "on or off")->check(CLI::IsMember({"on", "off"}));
  app.add_option("--mode", mode, "markov or memory")->check(CLI::IsMember({"markov", "memory"}));
  const char* names[] = {"simulate", "kernel-scan", "resonances", "wick-check", "qubit-demo"};
  const char* descs[] = {"integrate the master equation",
                         "tabulate the frequency-domain kernel on a grid",
                         "locate complex poles of the dressed propagator",
                         "compare pairing sums against an exact mode-space oracle",
                         "two-level run compared against its closed-form solution"};
  for (int i = 0; i < 5; ++i) app.add_subcommand(names[i], descs[i])->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::stringstream ss;
    ss << e.what();
    emit_error("config", ss.str());
    return 1;
  }

  try {
    oqs::json merged = oqs::default_config();
    if (!config_path.empty()) merged = oqs::deep_merge(merged, oqs::load_config_file(config_path));
    for (const auto& kv : sets) oqs::apply_set(merged, kv);
    if (!rwa.empty()) merged["simulation"]["rwa"] = (rwa == "on");
    if (!mode.empty()) merged["simulation"]["mode"] = mode;
    if (!output_path.empty()) merged["output"]["path"] = output_path;
    if (!format.empty()) merged["output"]["format"] = format;
    const oqs::RunConfig rc = oqs::parse_config(merged);
    return run(app.get_subcommands().front()->get_name(), rc, merged);
  } catch (const oqs::ConfigError& e) {
    emit_error("config", e.what());
    return 1;
  } catch (const oqs::NumericError& e) {
    emit_error("numeric", e.what());
    return 2;
  } catch (const std::exception& e) {
    emit_error("numeric", e.what());
    return 2;
  }
}
