// Command-line driver for scenario configs and bundled presets.

#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "aptfloquet/scenario.hpp"

namespace sc = apt::scenario;
using nlohmann::json;

#ifndef APTSIM_PRESETS_DIR
#define APTSIM_PRESETS_DIR "presets"
#endif

namespace {

enum Exit { ok = 0, internal = 1, schema = 2, domain = 3, io = 4 };

int report(const char* kind, const std::string& field, const std::string& message, int code) {
  json err = {{"kind", kind}, {"message", message}};
  if (!field.empty()) err["field"] = field;
  std::cerr << json{{"error", err}}.dump() << '\n';
  return code;
}

template <class F>
int guarded(F&& body) {
  try {
    return body();
  } catch (const sc::SchemaError& e) {
    return report("schema", e.field(), e.what(), schema);
  } catch (const sc::IoError& e) {
    return report("io", "", e.what(), io);
  } catch (const apt::InternalError& e) {
    return report("internal", "", e.what(), internal);
  } catch (const apt::DomainError& e) {
    return report("domain", "", e.what(), domain);
  } catch (const apt::ContractError& e) {
    return report("contract", "", e.what(), domain);
  } catch (const std::filesystem::filesystem_error& e) {
    return report("io", "", e.what(), io);
  } catch (const std::exception& e) {
    return report("internal", "", e.what(), internal);
  }
}

int run_config(const sc::ScenarioConfig& config, const std::string& out) {
  const sc::RunResult r = sc::run(config, out);
  std::cout << r.summary << '\n';
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulate driven dissipative qubit scenarios"};
  app.require_subcommand(1);
  std::string presets_dir = APTSIM_PRESETS_DIR;
  app.add_option("--presets-dir", presets_dir, "Directory holding preset configs");

  std::string config_path;
  std::string out_dir = ".";
  auto* run = app.add_subcommand("run", "Run a scenario config");
  run->add_option("config", config_path, "Config file")->required();
  run->add_option("--out", out_dir, "Output directory");

  std::string preset_name;
  std::optional<std::uint32_t> shots;
  std::optional<std::uint64_t> seed;
  auto* preset = app.add_subcommand("preset", "Run a bundled preset");
  preset->add_option("name", preset_name, "Preset name")->required();
  preset->add_option("--out", out_dir, "Output directory");
  preset->add_option("--shots", shots, "Override the shot count");
  preset->add_option("--seed", seed, "Override the RNG seed");

  std::string filter;
  auto* list = app.add_subcommand("list-presets", "List bundled presets");
  list->add_option("filter", filter, "Substring filter on preset names");

  auto* validate = app.add_subcommand("validate", "Check a config and print its resolved form");
  validate->add_option("config", config_path, "Config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : schema;
  }

  if (*run) return guarded([&] { return run_config(sc::load_config(config_path), out_dir); });

  if (*preset) {
    return guarded([&] {
      const std::filesystem::path path = std::filesystem::path(presets_dir) / (preset_name + ".json");
      if (!std::filesystem::exists(path)) throw sc::IoError("no preset named '" + preset_name + "' in " + presets_dir);
      std::ifstream in(path);
      json doc;
      try {
        doc = json::parse(in);
      } catch (const json::parse_error& e) {
        throw sc::SchemaError("", std::string("not valid JSON: ") + e.what());
      }
      if (shots) doc["shots"] = *shots;
      if (seed) doc["seed"] = *seed;
      return run_config(sc::parse_config(doc), out_dir);
    });
  }

  if (*list) {
    return guarded([&] {
      for (const auto& p : sc::list_presets(presets_dir, filter)) {
        std::cout << p.name << '\t' << p.figure << '\t' << p.description << '\n';
      }
      return static_cast<int>(ok);
    });
  }

  if (*validate) {
    return guarded([&] {
      std::cout << sc::to_json(sc::load_config(config_path)).dump(2) << '\n';
      return static_cast<int>(ok);
    });
  }
  return internal;
}
