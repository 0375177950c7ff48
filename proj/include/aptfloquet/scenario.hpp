#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "aptfloquet/dynamics.hpp"
#include "aptfloquet/floquet.hpp"
#include "aptfloquet/measurement.hpp"

namespace apt::scenario {

/// Config does not match the schema. `field` is the dotted path of the
/// offending entry.
class SchemaError : public std::runtime_error {
 public:
  SchemaError(std::string field, const std::string& message);
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// Reading or writing a file failed.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Mode { evolve, entropy, eigenstates, spectrum, sheet, wind, fit, tomography };

struct CanonicalGenerator {
  APTParams params;
  bool reversed = false;
};

struct SegmentsGenerator {
  std::vector<SegmentParams> segments;
  std::size_t middle = 0;
};

/// Static generator H; the trajectory is exp(-iHt) sampled every `period`.
struct StaticGenerator {
  Matrix2 matrix;
  double alpha = 1.0;
};

using Generator = std::variant<CanonicalGenerator, SegmentsGenerator, StaticGenerator>;

/// A named state, explicit amplitudes, or a two-state mixture. Named states:
/// down = (0, 1), up = (1, 0), plus_x = (1, 1)/sqrt2, minus_x = (1, -1)/sqrt2.
struct StateSpec {
  enum class Kind { named, amplitudes, mixture } kind = Kind::named;
  std::string name = "down";
  Vector2 amplitudes{0.0, 1.0};
  Vector2 psi1{0.0, 1.0};
  Vector2 psi2{0.0, 1.0};
  double beta = 1.0;

  Matrix2 rho0() const;
};

struct TimeSpec {
  std::optional<std::size_t> horizon_periods;
  std::optional<double> horizon_alpha_t;
  std::size_t record_every = 1;
  std::string time_unit = "1/J";
};

struct Range {
  double from = 0.0;
  double to = 0.0;
  std::size_t points = 2;
  std::vector<double> values() const;
};

struct SweepSpec {
  std::vector<double> gamma_over_J;
};

struct SpectrumSpec {
  std::vector<double> gamma_over_J;
  Range delta_over_J{-2.0, 2.0, 401};
};

struct SheetSpec {
  Range delta_over_J{-2.0, 2.0, 200};
  Range gamma_over_J{0.2, 2.5, 200};
};

struct LoopSpec {
  double center_delta = 0.0;
  double center_gamma = 1.0;
  double radius = 0.5;
  std::size_t steps = 256;
  int turns = 1;
};

struct FitSpec {
  std::vector<double> gamma_over_J;
  std::vector<double> delta_over_J;
  FitDesign design;
  std::string phase_hint = "auto";
};

struct Outputs {
  std::string csv;
  std::string json;
  std::string sampled_csv;
};

/// Fully resolved scenario; every default is explicit after parsing.
struct ScenarioConfig {
  std::string name = "scenario";
  std::string figure;
  std::string description;
  Mode mode = Mode::evolve;
  Generator generator = CanonicalGenerator{};
  std::optional<double> period;
  StateSpec initial_state;
  TimeSpec time;
  std::uint32_t shots = 0;
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
  SweepSpec sweep;
  SpectrumSpec spectrum;
  SheetSpec sheet;
  LoopSpec loop;
  FitSpec fit;
  Outputs outputs;
};

const char* to_string(Mode m);

/// Validates and resolves a config document. Throws SchemaError.
ScenarioConfig parse_config(const nlohmann::json& doc);

/// Canonical JSON form of a resolved config; parse_config(to_json(c)) == c.
nlohmann::json to_json(const ScenarioConfig& config);

/// Reads and parses a config file (IoError, SchemaError).
ScenarioConfig load_config(const std::filesystem::path& path);

/// Matrix as four [re, im] pairs, row-major.
nlohmann::json matrix_to_json(const Matrix2& m);
Matrix2 matrix_from_json(const nlohmann::json& j, const std::string& field);

struct RunResult {
  std::string summary;
  std::vector<std::filesystem::path> artifacts;
};

/// Runs the scenario and writes its artifacts below `out_dir`.
RunResult run(const ScenarioConfig& config, const std::filesystem::path& out_dir);

/// Preset files (<name>.json) in a directory, sorted by name.
struct PresetInfo {
  std::string name;
  std::string figure;
  std::string description;
  std::filesystem::path path;
};
std::vector<PresetInfo> list_presets(const std::filesystem::path& dir, const std::string& filter = "");

/// CSV number formatting: shortest round-trip representation, with signed
/// zero printed as 0.
std::string format_number(double x);

}  // namespace apt::scenario
