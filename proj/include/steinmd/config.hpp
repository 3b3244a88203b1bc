#pragma once

// JSON experiment configuration shared by the command-line runner: model,
// estimation, bound and output sections with an explicit schema_version.
// Errors carry the 1-based line of the offending key.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "json.hpp"
#include "steinmd/combperm.hpp"
#include "steinmd/laws.hpp"
#include "steinmd/localdep.hpp"

namespace steinmd {

inline constexpr int config_schema_version = 1;

class config_error : public std::runtime_error {
 public:
  config_error(int line, const std::string& what)
      : std::runtime_error(line > 0 ? "config:" + std::to_string(line) + ": " + what : "config: " + what),
        line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

struct ModelConfig {
  std::string type = "localdep";
  std::string id = "model";
  FieldSpec field;
  // comb
  int n = 0;
  std::string means_kind = "gaussian_projected";
  std::vector<double> means;
  std::uint64_t means_seed = 1;
  std::optional<InnovationLaw> noise;
  std::vector<double> noise_sd;
};

struct EstimationConfig {
  std::string method = "auto";  // auto | plain | tilt | exact
  std::string mode = "auto";    // auto | enumerate | mc
  std::size_t samples = 100000;
  std::size_t verify_samples = 20000;
  std::vector<double> z_grid{0.0, 1.0, 2.0};
  std::uint64_t seed = 1;
  unsigned workers = 1;
  double ci_z = 1.96;
};

struct BoundConfig {
  std::string theorem = "auto";  // auto | local | comb | general | heinrich
  std::string preset;            // general theorem: "" (explicit r/tau) | localdep | comb
  double C = 1.0;
  double c = 1.0;
  std::optional<double> n, a_n, alpha_n, b, kappa;
  std::optional<std::array<double, 5>> r, tau;
  double m0 = 1.0;
  double rho = 0.0;
};

struct OutputConfig {
  std::string directory = "out";
  std::vector<std::string> formats{"csv"};
};

struct ExperimentConfig {
  int schema_version = config_schema_version;
  ModelConfig model;
  EstimationConfig estimation;
  BoundConfig bound;
  OutputConfig output;
  /// Sizes swept by the experiment command; empty means the model as given.
  std::vector<int> n_list;
  std::string source;
  std::filesystem::path base_dir;
};

namespace detail {

inline int line_of_offset(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

// Line of the first occurrence of "key" after the line of "section"; 0 when absent.
inline int line_of_key(const std::string& text, const std::string& key, const std::string& section = "") {
  std::size_t from = 0;
  if (!section.empty()) {
    const auto s = text.find('"' + section + '"');
    if (s != std::string::npos) from = s;
  }
  auto pos = text.find('"' + key + '"', from);
  if (pos == std::string::npos) pos = text.find('"' + key + '"');
  return pos == std::string::npos ? 0 : line_of_offset(text, pos);
}

class Reader {
 public:
  Reader(const std::string& text, std::string section) : text_(text), section_(std::move(section)) {}

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    const std::string where = section_.empty() ? key : section_ + "." + key;
    throw config_error(line_of_key(text_, key.empty() ? section_ : key, section_), where + ": " + msg);
  }

  template <class T>
  T get(const nlohmann::json& obj, const std::string& key, T fallback) const {
    if (!obj.contains(key)) return fallback;
    // nlohmann converts -3 to a huge unsigned and 2.5 to 2 without complaint
    if constexpr (std::is_unsigned_v<T>) {
      if (!obj.at(key).is_number_unsigned()) fail(key, "must be a non-negative integer");
    } else if constexpr (std::is_integral_v<T>) {
      if (!obj.at(key).is_number_integer()) fail(key, "must be an integer");
    }
    try {
      return obj.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      fail(key, "has the wrong type");
    }
  }

  double number(const nlohmann::json& obj, const std::string& key, double fallback) const {
    if (!obj.contains(key)) return fallback;
    if (!obj.at(key).is_number()) fail(key, "must be a number");
    const double v = obj.at(key).get<double>();
    if (!std::isfinite(v)) fail(key, "must be finite");
    return v;
  }

  std::optional<double> maybe_number(const nlohmann::json& obj, const std::string& key) const {
    if (!obj.contains(key)) return std::nullopt;
    return number(obj, key, 0.0);
  }

  std::vector<double> numbers(const nlohmann::json& obj, const std::string& key) const {
    const auto& v = obj.at(key);
    if (v.is_number()) return {v.get<double>()};
    if (!v.is_array()) fail(key, "must be a number or an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (e.is_array()) {
        for (const auto& x : e) {
          if (!x.is_number()) fail(key, "must contain only numbers");
          out.push_back(x.get<double>());
        }
      } else if (e.is_number()) {
        out.push_back(e.get<double>());
      } else {
        fail(key, "must contain only numbers");
      }
    }
    return out;
  }

  const std::string& text() const noexcept { return text_; }

 private:
  const std::string& text_;
  std::string section_;
};

inline InnovationLaw parse_law(const Reader& rd, const nlohmann::json& j, const std::string& key) {
  if (!j.is_object()) rd.fail(key, "must be an object");
  if (j.contains("atoms")) {
    if (!j.at("atoms").is_array()) rd.fail("atoms", "must be an array of [value, prob] pairs");
    std::vector<DiscreteDistribution::Atom> atoms;
    for (const auto& a : j.at("atoms")) {
      if (!a.is_array() || a.size() != 2 || !a[0].is_number() || !a[1].is_number())
        rd.fail("atoms", "entries must be [value, prob] pairs");
      atoms.push_back({a[0].get<double>(), a[1].get<double>()});
    }
    try {
      return InnovationLaw::discrete(DiscreteDistribution(std::move(atoms)));
    } catch (const std::exception& e) {
      rd.fail("atoms", e.what());
    }
  }
  const std::string law = rd.get<std::string>(j, "law", "");
  try {
    if (law == "rademacher") return InnovationLaw::discrete(DiscreteDistribution::rademacher());
    if (law == "bernoulli") return InnovationLaw::discrete(DiscreteDistribution::bernoulli(rd.number(j, "p", 0.5)));
    if (law == "uniform") return InnovationLaw::uniform(rd.number(j, "half_width", std::sqrt(3.0)));
    if (law == "gaussian") return InnovationLaw::gaussian(rd.number(j, "sd", 1.0));
    if (law == "laplace") return InnovationLaw::laplace(rd.number(j, "scale", 1.0 / std::sqrt(2.0)));
  } catch (const config_error&) {
    throw;
  } catch (const std::exception& e) {
    rd.fail("law", e.what());
  }
  rd.fail(law.empty() ? key : "law", "unknown law '" + law + "' (rademacher, bernoulli, uniform, gaussian, laplace, or atoms)");
}

inline std::vector<double> read_means_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<double> out;
  std::string line;
  while (std::getline(in, line)) {
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    double v;
    while (ls >> v) out.push_back(v);
  }
  return out;
}

}  // namespace detail

inline ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = ".") {
  using nlohmann::json;
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw config_error(detail::line_of_offset(text, e.byte == 0 ? 0 : e.byte - 1), std::string("malformed JSON: ") + e.what());
  }
  ExperimentConfig cfg;
  cfg.source = text;
  cfg.base_dir = base_dir;
  detail::Reader top(text, "");
  if (!root.is_object()) throw config_error(1, "top level must be an object");
  if (!root.contains("schema_version")) throw config_error(1, "schema_version is required");
  cfg.schema_version = top.get<int>(root, "schema_version", 0);
  if (cfg.schema_version != config_schema_version)
    top.fail("schema_version", "unsupported value " + std::to_string(cfg.schema_version) + " (expected " +
                                   std::to_string(config_schema_version) + ")");
  for (const auto& [k, v] : root.items())
    if (k != "schema_version" && k != "model" && k != "estimation" && k != "bound" && k != "output" && k != "experiment")
      top.fail(k, "unknown section");

  // model
  if (!root.contains("model")) throw config_error(1, "model section is required");
  {
    const auto& m = root.at("model");
    detail::Reader rd(text, "model");
    if (!m.is_object()) rd.fail("", "must be an object");
    auto& mc = cfg.model;
    mc.type = rd.get<std::string>(m, "type", "localdep");
    mc.id = rd.get<std::string>(m, "id", mc.type);
    if (mc.id.empty() || mc.id.find_first_of(",\n\"") != std::string::npos) rd.fail("id", "must be non-empty without commas or quotes");
    if (mc.type == "localdep") {
      const int d = rd.get<int>(m, "d", 1);
      if (d < 1) rd.fail("d", "must be >= 1");
      if (!m.contains("shape")) rd.fail("shape", "is required");
      mc.field.shape = rd.get<std::vector<int>>(m, "shape", {});
      if (static_cast<int>(mc.field.shape.size()) != d) rd.fail("shape", "must have d entries");
      for (int s : mc.field.shape)
        if (s < 1) rd.fail("shape", "entries must be >= 1");
      mc.field.m = rd.get<int>(m, "m", 0);
      if (mc.field.m < 0) rd.fail("m", "must be >= 0");
      if (m.contains("innovation")) mc.field.innovation = detail::parse_law(rd, m.at("innovation"), "innovation");
      if (m.contains("weights")) mc.field.weights = rd.numbers(m, "weights");
      const std::string boundary = rd.get<std::string>(m, "boundary", "open");
      if (boundary == "open") mc.field.boundary = Boundary::open;
      else if (boundary == "periodic") mc.field.boundary = Boundary::periodic;
      else rd.fail("boundary", "must be 'open' or 'periodic'");
      for (const auto& [k, v] : m.items())
        if (k != "type" && k != "id" && k != "d" && k != "shape" && k != "m" && k != "innovation" && k != "weights" &&
            k != "boundary")
          rd.fail(k, "unknown key for a localdep model");
    } else if (mc.type == "comb") {
      mc.n = rd.get<int>(m, "n", 0);
      if (mc.n < 2) rd.fail("n", "must be >= 2");
      mc.means_seed = rd.get<std::uint64_t>(m, "means_seed", 1);
      if (m.contains("means_file")) {
        const auto path = base_dir / rd.get<std::string>(m, "means_file", "");
        if (!std::filesystem::exists(path)) rd.fail("means_file", "file not found: " + path.string());
        mc.means_kind = "explicit";
        mc.means = detail::read_means_file(path);
      } else if (m.contains("means") && m.at("means").is_string()) {
        mc.means_kind = m.at("means").get<std::string>();
        if (mc.means_kind != "gaussian_projected" && mc.means_kind != "latin_square")
          rd.fail("means", "must be 'gaussian_projected', 'latin_square' or an n x n array");
      } else if (m.contains("means")) {
        mc.means_kind = "explicit";
        mc.means = rd.numbers(m, "means");
      }
      if (mc.means_kind == "explicit" && mc.means.size() != static_cast<std::size_t>(mc.n) * static_cast<std::size_t>(mc.n))
        rd.fail(m.contains("means_file") ? "means_file" : "means", "must hold n*n values");
      if (m.contains("noise")) {
        mc.noise = detail::parse_law(rd, m.at("noise"), "noise");
        if (!m.contains("noise_sd")) rd.fail("noise", "needs noise_sd");
        mc.noise_sd = rd.numbers(m, "noise_sd");
      }
      for (const auto& [k, v] : m.items())
        if (k != "type" && k != "id" && k != "n" && k != "means" && k != "means_file" && k != "means_seed" &&
            k != "noise" && k != "noise_sd")
          rd.fail(k, "unknown key for a comb model");
    } else {
      rd.fail("type", "must be 'localdep' or 'comb'");
    }
  }

  if (root.contains("estimation")) {
    const auto& e = root.at("estimation");
    detail::Reader rd(text, "estimation");
    if (!e.is_object()) rd.fail("", "must be an object");
    auto& ec = cfg.estimation;
    ec.method = rd.get<std::string>(e, "method", ec.method);
    if (ec.method != "auto" && ec.method != "plain" && ec.method != "tilt" && ec.method != "exact")
      rd.fail("method", "must be auto, plain, tilt or exact");
    ec.mode = rd.get<std::string>(e, "mode", ec.mode);
    if (ec.mode != "auto" && ec.mode != "enumerate" && ec.mode != "mc") rd.fail("mode", "must be auto, enumerate or mc");
    const double samples = rd.number(e, "samples", static_cast<double>(ec.samples));
    if (samples < 1e4 || samples != std::floor(samples)) rd.fail("samples", "must be an integer >= 10000");
    ec.samples = static_cast<std::size_t>(samples);
    const double vs = rd.number(e, "verify_samples", static_cast<double>(ec.verify_samples));
    if (vs < 1e3 || vs != std::floor(vs)) rd.fail("verify_samples", "must be an integer >= 1000");
    ec.verify_samples = static_cast<std::size_t>(vs);
    if (e.contains("z_grid")) ec.z_grid = rd.numbers(e, "z_grid");
    if (ec.z_grid.empty()) rd.fail("z_grid", "must not be empty");
    if (!std::is_sorted(ec.z_grid.begin(), ec.z_grid.end())) rd.fail("z_grid", "must be sorted ascending");
    ec.seed = rd.get<std::uint64_t>(e, "seed", ec.seed);
    const int workers = rd.get<int>(e, "workers", static_cast<int>(ec.workers));
    if (workers < 1) rd.fail("workers", "must be >= 1");
    ec.workers = static_cast<unsigned>(workers);
    ec.ci_z = rd.number(e, "ci_z", ec.ci_z);
    if (!(ec.ci_z > 0.0)) rd.fail("ci_z", "must be > 0");
    for (const auto& [k, v] : e.items())
      if (k != "method" && k != "mode" && k != "samples" && k != "verify_samples" && k != "z_grid" && k != "seed" &&
          k != "workers" && k != "ci_z")
        rd.fail(k, "unknown key");
  }

  if (root.contains("bound")) {
    const auto& b = root.at("bound");
    detail::Reader rd(text, "bound");
    if (!b.is_object()) rd.fail("", "must be an object");
    auto& bc = cfg.bound;
    bc.theorem = rd.get<std::string>(b, "theorem", bc.theorem);
    if (bc.theorem != "auto" && bc.theorem != "local" && bc.theorem != "comb" && bc.theorem != "general" &&
        bc.theorem != "heinrich")
      rd.fail("theorem", "must be auto, local, comb, general or heinrich");
    bc.preset = rd.get<std::string>(b, "preset", "");
    if (!bc.preset.empty() && bc.preset != "localdep" && bc.preset != "comb") rd.fail("preset", "must be localdep or comb");
    bc.C = rd.number(b, "C", 1.0);
    bc.c = rd.number(b, "c", 1.0);
    if (!(bc.C > 0.0)) rd.fail("C", "must be > 0");
    if (!(bc.c > 0.0)) rd.fail("c", "must be > 0");
    bc.n = rd.maybe_number(b, "n");
    bc.a_n = rd.maybe_number(b, "a_n");
    bc.alpha_n = rd.maybe_number(b, "alpha_n");
    bc.b = rd.maybe_number(b, "b");
    bc.kappa = rd.maybe_number(b, "kappa");
    for (const char* key : {"r", "tau"}) {
      if (!b.contains(key)) continue;
      const auto v = rd.numbers(b, key);
      if (v.size() != 5) rd.fail(key, "must have 5 entries");
      std::array<double, 5> a{};
      std::copy(v.begin(), v.end(), a.begin());
      (std::string(key) == "r" ? bc.r : bc.tau) = a;
    }
    bc.m0 = rd.number(b, "m0", 1.0);
    bc.rho = rd.number(b, "rho", 0.0);
    if (bc.theorem == "general" && bc.preset.empty() && (!bc.r || !bc.tau))
      rd.fail("theorem", "general needs r and tau, or a preset");
    for (const auto& [k, v] : b.items())
      if (k != "theorem" && k != "preset" && k != "C" && k != "c" && k != "n" && k != "a_n" && k != "alpha_n" &&
          k != "b" && k != "kappa" && k != "r" && k != "tau" && k != "m0" && k != "rho")
        rd.fail(k, "unknown key");
  }

  if (root.contains("output")) {
    const auto& o = root.at("output");
    detail::Reader rd(text, "output");
    if (!o.is_object()) rd.fail("", "must be an object");
    cfg.output.directory = rd.get<std::string>(o, "directory", cfg.output.directory);
    if (o.contains("formats")) cfg.output.formats = rd.get<std::vector<std::string>>(o, "formats", {});
    for (const auto& f : cfg.output.formats)
      if (f != "csv" && f != "json") rd.fail("formats", "entries must be csv or json");
  }

  if (root.contains("experiment")) {
    const auto& x = root.at("experiment");
    detail::Reader rd(text, "experiment");
    if (!x.is_object()) rd.fail("", "must be an object");
    cfg.n_list = rd.get<std::vector<int>>(x, "n_list", {});
    for (int n : cfg.n_list)
      if (n < 2) rd.fail("n_list", "entries must be >= 2");
    if (!cfg.n_list.empty() && cfg.model.type == "localdep" && cfg.model.field.shape.size() != 1)
      rd.fail("n_list", "sweeps need a one-dimensional field");
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw config_error(0, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.has_parent_path() ? path.parent_path() : std::filesystem::path("."));
}

/// The configured model at size n (0 keeps the configured size).
inline LocalFieldModel make_local_model(const ModelConfig& mc, int n = 0) {
  FieldSpec spec = mc.field;
  if (n > 0) spec.shape = {n};
  return build_mdep_field(spec);
}

inline PermArrayModel make_comb_model(const ModelConfig& mc, int n = 0) {
  const int size = n > 0 ? n : mc.n;
  if (mc.means_kind == "explicit" && size != mc.n) throw model_error("explicit means cannot be resized");
  PermArrayModel base = mc.means_kind == "latin_square" ? latin_square_model(size)
                        : mc.means_kind == "explicit"
                            ? center_normalize(size, mc.means, std::nullopt, {}, "explicit")
                            : gaussian_projected_model(size, mc.means_seed);
  if (!mc.noise) return base;
  // Noise is attached before normalization, on the raw centered means.
  std::vector<double> raw(base.means().begin(), base.means().end());
  return center_normalize(size, std::move(raw), mc.noise, mc.noise_sd, base.label());
}

}  // namespace steinmd
