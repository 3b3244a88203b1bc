// steinmd: config-driven runner for identity checks, tail tables, bound
// evaluation and full experiments.
//
// Exit codes: 0 pass, 1 usage or config error, 2 verification failure.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "steinmd/bounds.hpp"
#include "steinmd/combperm.hpp"
#include "steinmd/config.hpp"
#include "steinmd/localdep.hpp"
#include "steinmd/steinverify.hpp"
#include "steinmd/tailmc.hpp"
#include "steinmd/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace steinmd;

namespace {

constexpr int exit_pass = 0;
constexpr int exit_config = 1;
constexpr int exit_failure = 2;

struct verification_failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using AnyModel = std::variant<LocalFieldModel, PermArrayModel>;

AnyModel make_model(const ExperimentConfig& cfg, int n = 0) {
  if (cfg.model.type == "comb") return make_comb_model(cfg.model, n);
  return make_local_model(cfg.model, n);
}

double model_size(const AnyModel& m) {
  return std::visit([](const auto& x) -> double {
    if constexpr (std::is_same_v<std::decay_t<decltype(x)>, LocalFieldModel>) return static_cast<double>(x.size());
    else return x.n();
  }, m);
}

McOptions mc_options(const EstimationConfig& e, std::size_t samples) {
  McOptions o;
  o.samples = samples;
  o.seed = e.seed;
  o.workers = e.workers;
  o.ci_z = e.ci_z;
  return o;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Writes through a temporary file and a rename, so readers never see a torn file.
void write_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

// ---------------------------------------------------------------- verify

struct Check {
  std::string name;
  std::string mode;
  double value;
  double bound;
  double std_err;
  bool pass;
};

json checks_json(const std::vector<Check>& checks) {
  json arr = json::array();
  for (const auto& c : checks)
    arr.push_back({{"name", c.name}, {"mode", c.mode}, {"value", c.value}, {"bound", c.bound}, {"stderr", c.std_err},
                   {"pass", c.pass}});
  return arr;
}

json verify_identity(const ExperimentConfig& cfg, const AnyModel& model) {
  const auto& e = cfg.estimation;
  std::vector<Check> checks;
  Mode mode = Mode::mc;
  std::visit([&](const auto& m) {
    if (e.mode == "enumerate") {
      if (!stein_enumerable(m)) throw capability_error("mode enumerate requested but the model is not enumerable");
      mode = Mode::enumerate;
    } else if (e.mode == "auto") {
      mode = stein_enumerable(m) ? Mode::enumerate : Mode::mc;
    }
    const auto results = identity_residuals(m, stock_test_functions(), mode, mc_options(e, e.verify_samples));
    for (const auto& r : results) {
      Check c;
      c.name = "stein_identity[" + r.name + "]";
      c.mode = to_string(mode);
      c.value = std::abs(r.residual);
      c.std_err = r.std_err;
      c.bound = mode == Mode::enumerate ? 1e-10 : 4.0 * r.std_err + 1e-12;
      c.pass = c.value <= c.bound;
      checks.push_back(c);
    }
    // f(w) = w gives E W^2 on the left; the field is normalized to Var(W) = 1.
    const auto& lin = results[1];
    Check v;
    v.name = "variance_of_w";
    v.mode = to_string(mode);
    v.value = std::abs(lin.lhs - 1.0);
    v.std_err = mode == Mode::enumerate ? 0.0 : lin.std_err;
    v.bound = mode == Mode::enumerate ? 1e-10 : 1e-12;
    v.pass = true;
    if (mode == Mode::enumerate) v.pass = v.value <= v.bound;
    checks.push_back(v);
  }, model);
  bool all = true;
  for (const auto& c : checks) all = all && c.pass;
  return {{"schema_version", output_schema_version},
          {"kind", "verify-identity"},
          {"model_id", cfg.model.id},
          {"n", model_size(model)},
          {"mode", to_string(mode)},
          {"samples", mode == Mode::enumerate ? 0 : e.verify_samples},
          {"seed", e.seed},
          {"workers", e.workers},
          {"checks", checks_json(checks)},
          {"pass", all}};
}

// ---------------------------------------------------------------- bound

struct BoundRow {
  std::string theorem;
  double n = 0.0;
  BoundEnvelope env;
  double C = 1.0, c = 1.0;
  double a = 0.0;  // a_n or alpha_n
  double b = 0.0;
  double kappa = 0.0;
  double tau = 0.0;
  double z0 = 0.0;
  double alt_range = 0.0;  // the other theorem's range (Heinrich vs local)
  bool z0_flag = false;
};

struct BoundContext {
  std::string theorem;
  double n = 0.0;
  double a = 0.0;
  double b = 1.0;
  double kappa = 1.0;
  std::string certificate;
};

BoundContext bound_context(const ExperimentConfig& cfg, const AnyModel& model) {
  const auto& bc = cfg.bound;
  BoundContext ctx;
  ctx.theorem = bc.theorem == "auto" ? (cfg.model.type == "comb" ? "comb" : "local") : bc.theorem;
  ctx.n = bc.n.value_or(model_size(model));
  const bool comb_side = ctx.theorem == "comb" || (ctx.theorem == "general" && bc.preset == "comb");
  if (comb_side) {
    const auto* pm = std::get_if<PermArrayModel>(&model);
    if (bc.alpha_n) {
      ctx.a = *bc.alpha_n;
      if (!bc.b) {
        if (!pm) throw model_error("bound: b is required for the comb theorem with a localdep model");
        ctx.b = certify_array(*pm, ctx.a).b;
        ctx.certificate = "certify_array";
      }
    } else if (pm) {
      const auto [alpha, cert] = best_alpha(*pm);
      ctx.a = alpha;
      ctx.b = cert.b;
      ctx.certificate = "certify_array(best alpha)";
    } else {
      ctx.a = std::sqrt(ctx.n);
    }
    if (bc.b) {
      ctx.b = *bc.b;
      ctx.certificate = "config";
    }
  } else {
    ctx.a = bc.a_n.value_or(std::sqrt(ctx.n));
    const auto* lm = std::get_if<LocalFieldModel>(&model);
    ctx.kappa = bc.kappa.value_or(lm ? static_cast<double>(lm->kappa()) : 1.0);
    if (bc.b) {
      ctx.b = *bc.b;
      ctx.certificate = "config";
    } else if (lm && ctx.theorem != "heinrich") {
      const auto cert = certify_moments(*lm, ctx.a);
      ctx.b = cert.b;
      ctx.certificate = std::string("certify_moments(") + to_string(cert.method) + ")";
    }
  }
  return ctx;
}

std::vector<BoundRow> bound_rows(const ExperimentConfig& cfg, const AnyModel& model) {
  const auto& bc = cfg.bound;
  const auto ctx = bound_context(cfg, model);
  std::vector<BoundRow> rows;
  for (double z : cfg.estimation.z_grid) {
    if (z < 0.0) continue;
    BoundRow r;
    r.theorem = ctx.theorem;
    r.n = ctx.n;
    r.C = bc.C;
    r.c = bc.c;
    r.a = ctx.a;
    r.b = ctx.b;
    r.kappa = ctx.kappa;
    if (ctx.theorem == "local") {
      r.env = theorem21_bound(ctx.kappa, ctx.a, ctx.b, ctx.n, z, bc.C, bc.c);
      r.alt_range = heinrich_bound(ctx.n, ctx.a, z, bc.C, bc.c).range_limit;
    } else if (ctx.theorem == "comb") {
      r.env = theorem41_bound(ctx.a, ctx.b, ctx.n, z, bc.C, bc.c);
    } else if (ctx.theorem == "heinrich") {
      r.env = heinrich_bound(ctx.n, ctx.a, z, bc.C, bc.c);
      r.alt_range = theorem21_bound(ctx.kappa, ctx.a, std::max(1.0, ctx.b), ctx.n, z, bc.C, bc.c).range_limit;
    } else {
      GeneralParams p;
      if (bc.preset == "localdep") p = localdep_preset(ctx.kappa, ctx.a, ctx.b, ctx.n);
      else if (bc.preset == "comb") p = comb_preset(ctx.a, ctx.b, ctx.n);
      else {
        p.r = *bc.r;
        p.tau = *bc.tau;
        p.m0 = bc.m0;
        p.rho = bc.rho;
        p.label = "config";
      }
      p.c_abs = bc.C;
      r.env = general_bound(p, z);
      r.tau = tau_of(p);
      r.z0 = z0_of(p);
      r.z0_flag = z0_consistency_violated(p);
    }
    rows.push_back(r);
  }
  return rows;
}

std::string bound_csv(const std::string& model_id, const std::vector<BoundRow>& rows) {
  std::ostringstream os;
  os << "theorem,model_id,n,z,delta,envelope,in_range,range_limit,C,c,a_n,b,kappa,tau,z0,alt_range_limit,z0_flag\n";
  for (const auto& r : rows)
    os << r.theorem << ',' << model_id << ',' << format_double(r.n) << ',' << format_double(r.env.z) << ','
       << format_double(r.env.delta) << ',' << format_double(r.env.envelope) << ',' << (r.env.in_range ? "true" : "false")
       << ',' << format_double(r.env.range_limit) << ',' << format_double(r.C) << ',' << format_double(r.c) << ','
       << format_double(r.a) << ',' << format_double(r.b) << ',' << format_double(r.kappa) << ','
       << format_double(r.tau) << ',' << format_double(r.z0) << ',' << format_double(r.alt_range) << ','
       << (r.z0_flag ? "true" : "false") << '\n';
  return os.str();
}

json bound_json(const std::string& model_id, const std::vector<BoundRow>& rows) {
  json arr = json::array();
  for (const auto& r : rows)
    arr.push_back({{"theorem", r.theorem}, {"n", r.n}, {"z", r.env.z}, {"delta", r.env.delta},
                   {"envelope", r.env.envelope}, {"in_range", r.env.in_range}, {"range_limit", r.env.range_limit},
                   {"C", r.C}, {"c", r.c}, {"a_n", r.a}, {"b", r.b}, {"kappa", r.kappa}, {"tau", r.tau},
                   {"z0", r.z0}, {"alt_range_limit", r.alt_range}, {"z0_flag", r.z0_flag}});
  return {{"schema_version", output_schema_version}, {"kind", "bound"}, {"model_id", model_id}, {"rows", arr}};
}

// ---------------------------------------------------------------- tail

std::vector<TailRow> tail_rows(const ExperimentConfig& cfg, const AnyModel& model, std::string* note = nullptr) {
  const auto& e = cfg.estimation;
  const auto opt = mc_options(e, e.samples);
  std::vector<TailEstimate> est;
  std::visit([&](const auto& m) {
    using M = std::decay_t<decltype(m)>;
    std::string method = e.method;
    if (method == "auto") method = std::is_same_v<M, LocalFieldModel> ? "tilt" : "plain";
    if (method == "tilt" && std::is_same_v<M, PermArrayModel>) {
      if (note) *note = "tilting is unavailable for permutation statistics; used plain Monte Carlo";
      method = "plain";
    }
    if (method == "exact") est = exact_tail(m, e.z_grid);
    else if (method == "plain") est = estimate_tail_plain(m, e.z_grid, opt);
    else if constexpr (std::is_same_v<M, LocalFieldModel>) {
      // Non-positive z and unreachable z fall back to the plain estimator.
      const auto plain = estimate_tail_plain(m, e.z_grid, opt);
      for (std::size_t k = 0; k < e.z_grid.size(); ++k) {
        const double z = e.z_grid[k];
        if (z > 0.0 && make_tilt_plan(m, z).applicable) est.push_back(estimate_tail_tilt(m, z, opt));
        else est.push_back(plain[k]);
      }
    }
  }, model);
  std::vector<BoundRow> bounds;
  try {
    bounds = bound_rows(cfg, model);
  } catch (const certificate_error&) {
    bounds.clear();
  }
  std::vector<TailRow> rows;
  for (const auto& t : est) {
    TailRow r;
    r.model_id = cfg.model.id;
    r.n = model_size(model);
    r.estimate = t;
    r.seed = e.seed;
    r.in_range = false;
    r.envelope = std::nan("");
    for (const auto& b : bounds)
      if (b.env.z == t.z) {
        r.envelope = b.env.envelope;
        r.in_range = b.env.in_range;
      }
    rows.push_back(r);
  }
  return rows;
}

std::string tail_csv(const std::vector<TailRow>& rows) {
  std::ostringstream os;
  write_tail_csv(os, rows);
  return os.str();
}

json tail_json(const std::vector<TailRow>& rows) {
  json arr = json::array();
  for (const auto& r : rows)
    arr.push_back({{"model_id", r.model_id}, {"n", r.n}, {"z", r.estimate.z}, {"method", to_string(r.estimate.method)},
                   {"p_hat", r.estimate.p_hat}, {"stderr", r.estimate.std_err}, {"ratio", r.estimate.ratio},
                   {"ratio_lo", r.estimate.ratio_lo}, {"ratio_hi", r.estimate.ratio_hi},
                   {"envelope", std::isfinite(r.envelope) ? json(r.envelope) : json(nullptr)},
                   {"in_range", r.in_range}, {"samples", r.estimate.n_samples}, {"seed", r.seed},
                   {"low_info", r.estimate.low_info}, {"theta", r.estimate.theta}});
  return {{"schema_version", output_schema_version}, {"kind", "tail"}, {"rows", arr}};
}

// ---------------------------------------------------------------- experiment

class Manifest {
 public:
  Manifest(fs::path dir, const ExperimentConfig& cfg, std::string config_path) : path_(dir / "manifest.json") {
    doc_ = {{"schema_version", output_schema_version},
            {"kind", "experiment-manifest"},
            {"tool", "steinmd"},
            {"tool_version", steinmd::version},
            {"config_path", config_path},
            {"config_fnv1a64", hex64(fnv1a(cfg.source))},
            {"config", json::parse(cfg.source)},
            {"seed", cfg.estimation.seed},
            {"workers", cfg.estimation.workers},
            {"started_utc", utc_now()},
            {"status", "running"},
            {"steps", json::array()}};
    flush();
  }

  std::size_t begin(const std::string& name, double n) {
    doc_["steps"].push_back({{"name", name}, {"n", n}, {"status", "running"}, {"started_utc", utc_now()}});
    flush();
    start_ = std::chrono::steady_clock::now();
    return doc_["steps"].size() - 1;
  }

  void finish(std::size_t k, bool ok, const std::vector<std::pair<std::string, std::string>>& outputs,
              const std::string& error = "") {
    auto& s = doc_["steps"][k];
    s["status"] = ok ? "ok" : "failed";
    s["runtime_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    json outs = json::array();
    for (const auto& [file, content] : outputs) outs.push_back({{"path", file}, {"fnv1a64", hex64(fnv1a(content))}});
    s["outputs"] = outs;
    if (!error.empty()) s["error"] = error;
    if (!ok) failed_ = true;
    flush();
  }

  void close() {
    doc_["status"] = failed_ ? "failed" : "complete";
    doc_["finished_utc"] = utc_now();
    flush();
  }

  bool failed() const noexcept { return failed_; }

 private:
  void flush() { write_atomic(path_, doc_.dump(2) + "\n"); }

  fs::path path_;
  json doc_;
  bool failed_ = false;
  std::chrono::steady_clock::time_point start_;
};

int run_experiment(const ExperimentConfig& cfg, const fs::path& dir, const std::string& config_path) {
  Manifest manifest(dir, cfg, config_path);
  const bool want_json = std::find(cfg.output.formats.begin(), cfg.output.formats.end(), "json") != cfg.output.formats.end();
  std::vector<int> sizes = cfg.n_list.empty() ? std::vector<int>{0} : cfg.n_list;
  std::vector<EnvelopeInput> fit_inputs;

  auto step = [&](const std::string& name, double n, auto&& body) {
    const auto k = manifest.begin(name, n);
    std::vector<std::pair<std::string, std::string>> outputs;
    try {
      const bool ok = body(outputs);
      for (const auto& [file, content] : outputs) write_atomic(dir / file, content);
      manifest.finish(k, ok, outputs, ok ? "" : "verification failed");
    } catch (const std::exception& ex) {
      manifest.finish(k, false, outputs, ex.what());
    }
  };

  for (int size : sizes) {
    std::optional<AnyModel> model;
    const auto k = manifest.begin("build_model", size);
    try {
      model = make_model(cfg, size);
      manifest.finish(k, true, {});
    } catch (const std::exception& ex) {
      manifest.finish(k, false, {}, ex.what());
      continue;
    }
    const double n = model_size(*model);
    const std::string tag = "n" + std::to_string(static_cast<long long>(n));

    step("verify", n, [&](auto& outputs) {
      const auto report = verify_identity(cfg, *model);
      outputs.emplace_back("verify_identity_" + tag + ".json", report.dump(2) + "\n");
      return report["pass"].template get<bool>();
    });
    step("certify", n, [&](auto& outputs) {
      const auto ctx = bound_context(cfg, *model);
      json doc = {{"schema_version", output_schema_version}, {"kind", "certificate"}, {"model_id", cfg.model.id},
                  {"n", n}, {"theorem", ctx.theorem}, {"a", ctx.a}, {"b", ctx.b}, {"kappa", ctx.kappa},
                  {"method", ctx.certificate}};
      outputs.emplace_back("certificate_" + tag + ".json", doc.dump(2) + "\n");
      return true;
    });
    std::vector<TailRow> rows;
    step("tail", n, [&](auto& outputs) {
      rows = tail_rows(cfg, *model);
      outputs.emplace_back("tail_" + tag + ".csv", tail_csv(rows));
      if (want_json) outputs.emplace_back("tail_" + tag + ".json", tail_json(rows).dump(2) + "\n");
      return true;
    });
    step("bound", n, [&](auto& outputs) {
      const auto b = bound_rows(cfg, *model);
      outputs.emplace_back("bound_" + tag + ".csv", bound_csv(cfg.model.id, b));
      if (want_json) outputs.emplace_back("bound_" + tag + ".json", bound_json(cfg.model.id, b).dump(2) + "\n");
      if (!rows.empty() && !b.empty()) {
        EnvelopeInput in;
        in.n = n;
        in.delta_n = b.front().env.delta;
        in.range_limit = b.front().env.range_limit;
        for (const auto& r : rows) in.estimates.push_back(r.estimate);
        fit_inputs.push_back(std::move(in));
      }
      return true;
    });
  }

  step("envelope_fit", 0.0, [&](auto& outputs) {
    const auto fit = ratio_envelope_fit(fit_inputs);
    json rows = json::array();
    for (const auto& r : fit.rows)
      rows.push_back({{"n", r.n}, {"c_hat", r.c_hat}, {"z_at_max", r.z_at_max}, {"points_used", r.used},
                      {"excluded_z", r.excluded_z}});
    json doc = {{"schema_version", output_schema_version}, {"kind", "envelope-fit"}, {"model_id", cfg.model.id},
                {"rows", rows}, {"spread", fit.rows.size() > 1 ? json(fit.spread) : json(nullptr)},
                {"spearman_c_hat_vs_n", fit.rows.size() > 1 ? json(fit.trend) : json(nullptr)},
                {"note", "delta_n from the configured theorem with caller constants; z outside the theorem range excluded"}};
    outputs.emplace_back("envelope_fit.json", doc.dump(2) + "\n");
    return true;
  });
  manifest.close();
  return manifest.failed() ? exit_failure : exit_pass;
}

// ---------------------------------------------------------------- main

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::string out;
  std::string format;
};

void add_common(CLI::App* sub, CommonFlags& f) {
  sub->add_option("--config", f.config, "JSON config file")->envname("STEINMD_CONFIG")->required();
  sub->add_option("--seed", f.seed, "RNG seed (overrides estimation.seed)")->envname("STEINMD_SEED");
  sub->add_option("--workers", f.workers, "worker threads (overrides estimation.workers)")
      ->envname("STEINMD_WORKERS")
      ->check(CLI::PositiveNumber);
  sub->add_option("--out", f.out, "output directory")->envname("STEINMD_OUT");
  sub->add_option("--format", f.format, "csv or json")->envname("STEINMD_FORMAT")->check(CLI::IsMember({"csv", "json"}));
}

void emit(const CommonFlags& f, const std::string& file, const std::string& content) {
  if (f.out.empty()) {
    std::cout << content;
    return;
  }
  write_atomic(fs::path(f.out) / file, content);
  std::cerr << "wrote " << (fs::path(f.out) / file).string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"steinmd: Stein-kernel verification, tail estimation and moderate-deviation bounds"};
  app.set_version_flag("--version", std::string(steinmd::version));
  app.require_subcommand(1);
  CommonFlags flags;
  auto* verify = app.add_subcommand("verify-identity", "check the Stein identity on the stock test functions");
  auto* tail = app.add_subcommand("tail", "estimate P(W > z) and the ratio to the normal tail");
  auto* bound = app.add_subcommand("bound", "evaluate the bound formulas on the z grid");
  auto* experiment = app.add_subcommand("experiment", "verify, certify, estimate, bound and fit; writes a manifest");
  for (auto* s : {verify, tail, bound, experiment}) add_common(s, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_config;
  }

  ExperimentConfig cfg;
  try {
    cfg = load_config(flags.config);
    if (flags.seed) cfg.estimation.seed = *flags.seed;
    if (flags.workers) cfg.estimation.workers = *flags.workers;
    if (!flags.format.empty()) cfg.output.formats = {flags.format};
  } catch (const config_error& e) {
    std::cerr << flags.config << ": " << e.what() << '\n';
    return exit_config;
  }
  const bool json_out = !cfg.output.formats.empty() && cfg.output.formats.front() == "json";

  try {
    if (experiment->parsed()) {
      const fs::path dir = flags.out.empty() ? cfg.base_dir / cfg.output.directory : fs::path(flags.out);
      const int code = run_experiment(cfg, dir, flags.config);
      std::cerr << "experiment " << (code == exit_pass ? "complete" : "finished with failures") << ": "
                << (dir / "manifest.json").string() << '\n';
      return code;
    }
    const AnyModel model = make_model(cfg);
    if (verify->parsed()) {
      const auto report = verify_identity(cfg, model);
      emit(flags, "verify_identity.json", report.dump(2) + "\n");
      return report["pass"].get<bool>() ? exit_pass : exit_failure;
    }
    if (tail->parsed()) {
      std::string note;
      const auto rows = tail_rows(cfg, model, &note);
      if (!note.empty()) std::cerr << "note: " << note << '\n';
      if (json_out) emit(flags, "tail.json", tail_json(rows).dump(2) + "\n");
      else emit(flags, "tail.csv", tail_csv(rows));
      return exit_pass;
    }
    if (bound->parsed()) {
      const auto rows = bound_rows(cfg, model);
      if (json_out) emit(flags, "bound.json", bound_json(cfg.model.id, rows).dump(2) + "\n");
      else emit(flags, "bound.csv", bound_csv(cfg.model.id, rows));
      return exit_pass;
    }
  } catch (const certificate_error& e) {
    std::cerr << "certificate failure: " << e.what() << '\n';
    return exit_failure;
  } catch (const model_error& e) {
    std::cerr << flags.config << ": model: " << e.what() << '\n';
    return exit_config;
  } catch (const capability_error& e) {
    std::cerr << flags.config << ": " << e.what() << '\n';
    return exit_config;
  } catch (const std::domain_error& e) {
    std::cerr << flags.config << ": " << e.what() << '\n';
    return exit_config;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_config;
  }
  return exit_config;
}
