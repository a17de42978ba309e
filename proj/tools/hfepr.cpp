// Command-line front end: config-driven simulation and fitting runs,
// SVG rendering of result tables, preset listing.
//
// Exit codes: 0 success, 2 validation error, 1 runtime error.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "hfepr/config.hpp"
#include "hfepr/runner.hpp"
#include "hfepr/svg.hpp"

namespace fs = std::filesystem;

namespace {

#ifndef HFEPR_DEFAULT_PRESET_DIR
#define HFEPR_DEFAULT_PRESET_DIR "presets"
#endif

std::string preset_dir(const std::string& override_dir) {
  if (!override_dir.empty()) return override_dir;
  if (const char* env = std::getenv("HFEPR_PRESETS")) return env;
  return HFEPR_DEFAULT_PRESET_DIR;
}

std::string default_out_dir(const std::string& override_dir) {
  if (!override_dir.empty()) return override_dir;
  if (const char* env = std::getenv("HFEPR_OUT_DIR")) return env;
  return ".";
}

// A config argument is either a file path or a preset name resolved in
// the preset directory.
std::string resolve_config_path(const std::string& arg,
                                const std::string& presets) {
  if (fs::exists(arg)) return arg;
  const fs::path candidate = fs::path(presets) / (arg + ".ini");
  if (fs::exists(candidate)) return candidate.string();
  return arg;  // let the open fail with a clear message
}

int run_config(const std::string& config_arg, const std::string& presets,
               const std::string& out_dir, bool lax,
               std::optional<std::uint64_t> seed, bool want_fit) {
  const std::string path = resolve_config_path(config_arg, presets);
  std::ifstream file(path);
  if (!file) {
    std::cerr << "error: cannot open config or preset '" << config_arg << "'\n";
    return 1;
  }
  std::stringstream buffer;
  buffer << file.rdbuf();

  hfepr::ParseOptions options;
  options.strict = !lax;
  const hfepr::ParseResult parsed = hfepr::parse_config(buffer.str(), options);
  for (const auto& w : parsed.warnings) std::cerr << "warning: " << w << "\n";
  if (!parsed.ok()) {
    for (const auto& e : parsed.errors) std::cerr << "error: " << e << "\n";
    return 2;
  }
  if (hfepr::is_fit_kind(parsed.config->kind) != want_fit) {
    std::cerr << "error: experiment.kind: '"
              << hfepr::kind_name(parsed.config->kind) << "' must be run with '"
              << (hfepr::is_fit_kind(parsed.config->kind) ? "fit" : "simulate")
              << "'\n";
    return 2;
  }

  hfepr::RunContext context;
  context.output_dir = default_out_dir(out_dir);
  context.seed_override = seed;
  context.input_dir = fs::path(path).parent_path().string();
  if (context.input_dir.empty()) context.input_dir = ".";

  try {
    const hfepr::RunOutcome outcome = hfepr::run(*parsed.config, context);
    if (!outcome.report.empty()) std::cout << outcome.report;
    std::cout << "wrote " << outcome.csv_path << " (" << outcome.table.rows.size()
              << " rows)\n";
    for (const auto& w : outcome.table.warnings)
      std::cerr << "warning: " << w << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int render(const std::string& csv_path, const std::string& plotspec,
           const std::string& out_dir) {
  hfepr::PlotSpec spec;
  std::string out_name;
  std::istringstream stream(plotspec);
  std::string item;
  while (std::getline(stream, item, ',')) {
    const auto eq = item.find('=');
    const std::string key = item.substr(0, eq);
    const std::string value = eq == std::string::npos ? "" : item.substr(eq + 1);
    if (key == "x")
      spec.x_column = value;
    else if (key == "y")
      spec.y_column = value;
    else if (key == "logy")
      spec.log_y = value.empty() || value == "1" || value == "true";
    else if (key == "title")
      spec.title = value;
    else if (key == "out")
      out_name = value;
    else {
      std::cerr << "error: unknown plotspec key '" << key << "'\n";
      return 2;
    }
  }
  if (spec.x_column.empty() || spec.y_column.empty()) {
    std::cerr << "error: plotspec needs x=COL,y=COL\n";
    return 2;
  }
  if (out_name.empty())
    out_name = fs::path(csv_path).stem().string() + ".svg";

  try {
    const hfepr::CsvData csv = hfepr::read_csv_file(csv_path);
    hfepr::ResultTable table;
    table.columns = csv.columns;
    table.rows = csv.rows;
    const std::string out_path =
        (fs::path(default_out_dir(out_dir)) / out_name).string();
    hfepr::write_svg_file(table, spec, out_path);
    std::cout << "wrote " << out_path << "\n";
    return 0;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int list_presets(const std::string& presets) {
  std::cout << "experiment presets (" << presets << "):\n";
  std::vector<std::string> names;
  if (fs::is_directory(presets))
    for (const auto& entry : fs::directory_iterator(presets))
      if (entry.path().extension() == ".ini")
        names.push_back(entry.path().stem().string());
  std::sort(names.begin(), names.end());
  for (const auto& name : names) std::cout << "  " << name << "\n";
  std::cout << "system presets:\n";
  for (const auto& name : hfepr::system_preset_names())
    std::cout << "  " << name << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hfepr: high-field pulsed EPR/ENDOR simulation toolkit"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  std::string out_dir;
  std::string presets_override;
  bool lax = false;
  bool strict = false;
  std::optional<std::uint64_t> seed;
  std::uint64_t seed_value = 0;
  app.add_option("--out", out_dir, "output directory (default: $HFEPR_OUT_DIR or .)");
  app.add_option("--presets-dir", presets_override,
                 "preset directory (default: $HFEPR_PRESETS or built-in)");
  app.add_flag("--strict", strict,
               "unknown config keys are errors (the default)");
  app.add_flag("--lax", lax, "downgrade unknown config keys to warnings")
      ->excludes("--strict");
  auto* seed_opt = app.add_option("--seed", seed_value, "override the config seed");

  std::string config_arg;
  auto* simulate = app.add_subcommand("simulate", "run a simulation config");
  simulate->add_option("config", config_arg, "config file or preset name")
      ->required();
  auto* fit = app.add_subcommand("fit", "run a fitting config");
  fit->add_option("config", config_arg, "config file or preset name")->required();

  std::string csv_arg, plotspec_arg;
  auto* render_cmd = app.add_subcommand("render", "render a result CSV to SVG");
  render_cmd->add_option("csv", csv_arg, "input CSV file")->required();
  render_cmd
      ->add_option("plotspec", plotspec_arg,
                   "x=COL,y=COL[,logy][,title=...][,out=FILE.svg]")
      ->required();

  auto* presets_cmd = app.add_subcommand("presets", "preset utilities");
  auto* presets_list = presets_cmd->add_subcommand("list", "list presets");

  CLI11_PARSE(app, argc, argv);
  if (seed_opt->count() > 0) seed = seed_value;
  const std::string presets = preset_dir(presets_override);

  if (simulate->parsed())
    return run_config(config_arg, presets, out_dir, lax, seed, false);
  if (fit->parsed()) return run_config(config_arg, presets, out_dir, lax, seed, true);
  if (render_cmd->parsed()) return render(csv_arg, plotspec_arg, out_dir);
  if (presets_cmd->parsed() && presets_list->parsed()) return list_presets(presets);
  std::cerr << "error: no subcommand\n";
  return 2;
}
