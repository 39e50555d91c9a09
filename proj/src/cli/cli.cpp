#include "trajforge/cli/cli.hpp"

#include <CLI11.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "trajforge/cli/config.hpp"
#include "trajforge/cli/pipeline.hpp"
#include "trajforge/core/container.hpp"
#include "trajforge/core/error.hpp"
#include "trajforge/oracle/checks.hpp"
#include "trajforge/oracle/tabular.hpp"

namespace trajforge::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError(LoadErrorKind::io, "cannot read " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return hex.str();
}

namespace {

class ArtifactError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> output;
  std::optional<double> lambda;
  std::optional<std::string> lambdas;
  std::optional<std::string> source;
  std::optional<std::string> regime;
  std::string dataset, denoiser, ensemble, policy;
};

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
    if (item.empty() || used != item.size()) throw ConfigError("--lambdas: '" + item + "' is not a number");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("--lambdas: empty list");
  return out;
}

RunConfig resolve(const Options& o) {
  json j = json::object();
  if (!o.config.empty()) {
    std::ifstream in(o.config);
    if (!in) throw ArtifactError("missing config file: " + o.config);
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError(o.config + ": " + e.what());
    }
  }
  if (j.is_object()) {
    auto section = [&](const char* name) -> json& {
      json& s = j[name];
      if (s.is_null()) s = json::object();
      return s;
    };
    auto set = [&](const char* sec, const char* key, json v) {
      json& s = section(sec);
      if (s.is_object()) s[key] = std::move(v);
    };
    if (o.seed) set("seeds", "root", *o.seed);
    if (o.workers) j["workers"] = *o.workers;
    if (o.output) j["output_dir"] = *o.output;
    if (o.lambda) set("guidance", "lambda", *o.lambda);
    if (o.lambdas) set("analysis", "lambdas", parse_list(*o.lambdas));
    if (o.source) set("loop", "source", *o.source);
    if (o.regime) set("loop", "regime", *o.regime);
  }
  return config_from_json(j);
}

/// Output directory bookkeeping for one command.
class Run {
 public:
  Run(std::string command, RunConfig cfg, std::ostream& log)
      : command_(std::move(command)), cfg_(std::move(cfg)), log_(log) {
    out_ = cfg_.output_dir.empty() ? default_output_root() : fs::path(cfg_.output_dir);
    fs::create_directories(out_);
  }

  const RunConfig& cfg() const { return cfg_; }
  std::ostream& log() { return log_; }
  const fs::path& dir() const { return out_; }

  fs::path input(const std::string& flag, const std::string& name, const std::string& what,
                 const std::string& producer) const {
    const fs::path p = flag.empty() ? out_ / name : fs::path(flag);
    if (!fs::exists(p))
      throw ArtifactError("missing " + what + ": " + p.string() + " (produce it with `" + producer + "` or pass a path)");
    return p;
  }

  fs::path output(const std::string& name) {
    const fs::path p = out_ / name;
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    produced_.push_back(name);
    return p;
  }

  /// Resolved-config snapshot and a manifest of produced files with hashes.
  void finish() {
    json snap = to_json(cfg_);
    // The location is implied by where the snapshot lives; leaving it out
    // keeps runs into different directories byte-identical.
    snap.erase("output_dir");
    const std::string snap_name = command_ + ".config.json";
    std::ofstream(output(snap_name)) << snap.dump(2) << '\n';

    std::vector<std::string> files = produced_;
    std::sort(files.begin(), files.end());
    files.erase(std::unique(files.begin(), files.end()), files.end());
    json list = json::array();
    for (const auto& f : files) {
      const fs::path p = out_ / f;
      list.push_back({{"path", f}, {"bytes", fs::file_size(p)}, {"sha256", sha256_file(p)}});
    }
    json manifest{{"command", command_}, {"files", list}};
    std::ofstream(out_ / (command_ + ".manifest.json")) << manifest.dump(2) << '\n';
    log_ << command_ << ": wrote " << files.size() << " files to " << out_.string() << '\n';
  }

 private:
  std::string command_;
  RunConfig cfg_;
  std::ostream& log_;
  fs::path out_;
  std::vector<std::string> produced_;
};

Dataset load_dataset(Run& r, const Options& o) {
  return load(r.input(o.dataset, "dataset.tfd", "dataset", "trajforge collect"));
}

DiffusionModel load_diffusion(Run& r, const Options& o) {
  return DiffusionModel::load(r.input(o.denoiser, "denoiser.tfc", "diffusion checkpoint", "trajforge train-diffusion"));
}

worldmodel::EnsembleDynamics load_ensemble(Run& r, const Options& o) {
  return worldmodel::EnsembleDynamics::load(
      r.input(o.ensemble, "ensemble.tfc", "ensemble checkpoint", "trajforge train-ensemble"));
}

std::shared_ptr<const agent::Actor> load_policy(Run& r, const Options& o) {
  return std::make_shared<agent::Actor>(
      agent::Actor::load(r.input(o.policy, "policy.tfc", "policy checkpoint", "trajforge train-agent")));
}

void describe(std::ostream& log, const std::string& what, const Dataset& d) {
  std::size_t steps = 0;
  for (const auto& t : d.trajectories) steps += static_cast<std::size_t>(t.valid_length());
  log << what << ": " << d.size() << " windows of " << d.window << ", " << steps << " transitions\n";
}

int cmd_collect(Run& r, const Options&) {
  const Dataset d = collect(r.cfg());
  save(d, r.output("dataset.tfd"));
  describe(r.log(), "collected", d);
  return 0;
}

int cmd_train_diffusion(Run& r, const Options& o) {
  const Dataset raw = load_dataset(r, o);
  diffusion::DenoiserTrainResult res;
  DiffusionModel m = train_diffusion(r.cfg(), raw, &res);
  m.save(r.output("denoiser.tfc"));
  std::ofstream csv(r.output("diffusion_losses.csv"));
  csv << "step,loss\n" << std::setprecision(10);
  for (std::size_t i = 0; i < res.losses.size(); ++i) csv << i + 1 << ',' << res.losses[i] << '\n';
  r.log() << "trained denoiser: " << res.steps << " steps, " << res.anomalies << " skipped\n";
  return 0;
}

int cmd_train_ensemble(Run& r, const Options& o) {
  const Dataset raw = load_dataset(r, o);
  auto ens = train_worldmodel(r.cfg(), raw);
  ens.save(r.output("ensemble.tfc"));
  r.log() << "trained ensemble: " << r.cfg().worldmodel.ensemble.members << " members\n";
  return 0;
}

int cmd_sample(Run& r, const Options& o) {
  const RunConfig& cfg = r.cfg();
  const std::uint64_t seed = subsystem_seed(cfg, "sampler");
  switch (cfg.loop.source) {
    case agent::Source::real:
      throw ConfigError("sample: --source must be unguided, guided or worldmodel");
    case agent::Source::unguided:
    case agent::Source::guided: {
      const DiffusionModel m = load_diffusion(r, o);
      std::shared_ptr<const Policy> density;
      if (cfg.loop.source == agent::Source::guided) density = target_density(load_policy(r, o), m.stats);
      const Dataset d = sample(cfg, m, density, cfg.guidance.lambda, cfg.diffusion.trajectories, seed);
      save(d, r.output("samples.tfd"));
      describe(r.log(), "sampled", d);
      return 0;
    }
    case agent::Source::worldmodel: {
      const Dataset raw = load_dataset(r, o);
      const auto ens = load_ensemble(r, o);
      const DeterministicAsGaussian pol(load_policy(r, o), cfg.worldmodel.policy_std);
      const auto res = rollouts(cfg, ens, pol, raw, cfg.worldmodel.k, cfg.worldmodel.count, seed);
      save(res.data, r.output("rollouts.tfd"));
      json side{{"k", cfg.worldmodel.k},
                {"start_mode", worldmodel::to_string(cfg.worldmodel.start)},
                {"seed", seed},
                {"truncated", res.truncated}};
      std::ofstream(r.output("rollouts.json")) << side.dump(2) << '\n';
      describe(r.log(), "rolled out", res.data);
      return 0;
    }
  }
  return 1;
}

int cmd_train_agent(Run& r, const Options& o) {
  const RunConfig& cfg = r.cfg();
  const Dataset raw = load_dataset(r, o);
  const PointMass2D env = make_env(cfg);
  std::optional<DiffusionModel> diff;
  std::optional<worldmodel::EnsembleDynamics> ens;
  agent::LoopInputs in;
  in.real = &raw;
  in.eval_env = &env;
  if (cfg.loop.source == agent::Source::guided || cfg.loop.source == agent::Source::unguided) {
    diff.emplace(load_diffusion(r, o));
    in.denoiser = &diff->denoiser;
    in.diffusion_stats = &diff->stats;
  }
  if (cfg.loop.source == agent::Source::worldmodel) {
    ens.emplace(load_ensemble(r, o));
    in.ensemble = &*ens;
  }
  const auto res = agent::train_loop(loop_config(cfg, raw.window), cfg.loop.source, cfg.agent.td3, in);
  agent::Actor(res.policy).save(r.output("policy.tfc"));
  agent::write_metrics_csv(r.output("metrics.csv"), res.metrics);
  r.log() << "trained agent on '" << agent::to_string(cfg.loop.source) << "': final return "
          << (res.metrics.empty() ? 0.0 : res.metrics.back().eval_return) << ", " << res.stats.anomalies
          << " skipped updates\n";
  return 0;
}

int cmd_oracle_check(Run& r, const Options&, std::ostream& out) {
  const RunConfig& cfg = r.cfg();
  const auto rep = oracle::run_oracle_checks(50, 10, 100, cfg.analysis.lambdas, subsystem_seed(cfg, "oracle"));
  out << std::scientific << std::setprecision(3);
  out << "importance_identity_max_error " << rep.importance << '\n';
  out << "symmetry_max_error " << rep.symmetry << '\n';
  out << "score_identity_max_error " << rep.score_identity << '\n';
  out << "score_lambda_max_error " << rep.score_lambda << '\n';
  out << "endpoint_lambda0_max_error " << rep.endpoint0 << '\n';
  out << "endpoint_lambda1_max_error " << rep.endpoint1 << '\n';
  out << std::defaultfloat;
  const auto mdp = TabularMDP::default_instance();
  const auto tab = oracle::build_table(mdp, oracle::default_behavior_policy(), oracle::default_target_policy(),
                                       mdp.horizon, cfg.analysis.lambdas);
  oracle::write_table_csv(r.output("oracle_table.csv"), tab);
  const bool ok = rep.worst() < 1e-10;
  out << (ok ? "all identities hold within 1e-10\n" : "identity check FAILED\n");
  return ok ? 0 : 1;
}

std::vector<NamedActor> targets(Run& r, const Dataset& raw) {
  auto t = train_targets(r.cfg(), raw);
  for (const auto& a : t) agent::Actor(*a.actor).save(r.output("targets/" + a.name + ".tfc"));
  return t;
}

void write_rows(Run& r, const std::vector<analysis::ComparisonRow>& rows, const std::vector<std::string>& notices,
                Index window) {
  for (const auto& n : notices) r.log() << "notice: " << n << '\n';
  analysis::write_comparison_csv(r.output("comparison.csv"), rows, window);
}

int cmd_analyze(Run& r, const Options& o) {
  RunConfig cfg = r.cfg();
  cfg.analysis.lambdas = {cfg.guidance.lambda};
  const Dataset raw = load_dataset(r, o);
  const DiffusionModel diff = load_diffusion(r, o);
  const auto ens = load_ensemble(r, o);
  SweepInputs in{&raw, &diff, &ens, targets(r, raw)};
  std::vector<std::string> notices;
  write_rows(r, sweep(cfg, in, &notices), notices, raw.window);
  return 0;
}

int cmd_sweep(Run& r, const Options&) {
  const RunConfig& cfg = r.cfg();
  const Dataset raw = collect(cfg);
  save(raw, r.output("dataset.tfd"));
  describe(r.log(), "collected", raw);
  DiffusionModel diff = train_diffusion(cfg, raw);
  diff.save(r.output("denoiser.tfc"));
  r.log() << "trained denoiser\n";
  auto ens = train_worldmodel(cfg, raw);
  ens.save(r.output("ensemble.tfc"));
  r.log() << "trained ensemble\n";
  SweepInputs in{&raw, &diff, &ens, targets(r, raw)};
  r.log() << "trained target policies\n";
  std::vector<std::string> notices;
  write_rows(r, sweep(cfg, in, &notices), notices, raw.window);
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Trajectory generation with policy-guided diffusion", "trajforge"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--config", o.config, "JSON run configuration");
  app.add_option("--seed", o.seed, "root seed");
  app.add_option("--workers", o.workers, "worker threads for trajectory generation");
  app.add_option("--output", o.output, "output directory");
  app.add_option("--lambda", o.lambda, "guidance coefficient");
  app.add_option("--lambdas", o.lambdas, "comma-separated guidance coefficients for sweeps");
  app.add_option("--source", o.source, "real, unguided, guided or worldmodel");
  app.add_option("--regime", o.regime, "periodic or continuous");
  app.add_option("--dataset", o.dataset, "dataset file (default: <output>/dataset.tfd)");
  app.add_option("--denoiser", o.denoiser, "diffusion checkpoint (default: <output>/denoiser.tfc)");
  app.add_option("--ensemble", o.ensemble, "ensemble checkpoint (default: <output>/ensemble.tfc)");
  app.add_option("--policy", o.policy, "actor checkpoint (default: <output>/policy.tfc)");

  const std::vector<std::pair<std::string, std::string>> commands{
      {"collect", "collect behavior data"},
      {"train-diffusion", "train the trajectory denoiser"},
      {"sample", "generate synthetic trajectories"},
      {"train-ensemble", "train the probabilistic ensemble"},
      {"train-agent", "train TD3+BC on a data source"},
      {"oracle-check", "verify the exact identities on tabular and Gaussian oracles"},
      {"analyze", "compare data sources at the configured lambda"},
      {"sweep", "full pipeline and comparison over a lambda grid"}};
  for (const auto& [name, help] : commands) app.add_subcommand(name, help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    Run r(command, resolve(o), err);
    int code = 0;
    if (command == "collect") code = cmd_collect(r, o);
    else if (command == "train-diffusion") code = cmd_train_diffusion(r, o);
    else if (command == "sample") code = cmd_sample(r, o);
    else if (command == "train-ensemble") code = cmd_train_ensemble(r, o);
    else if (command == "train-agent") code = cmd_train_agent(r, o);
    else if (command == "oracle-check") code = cmd_oracle_check(r, o, out);
    else if (command == "analyze") code = cmd_analyze(r, o);
    else code = cmd_sweep(r, o);
    r.finish();
    return code;
  } catch (const ConfigError& e) {
    err << "trajforge " << command << ": error[config]: " << e.what() << '\n';
    return 2;
  } catch (const ArtifactError& e) {
    err << "trajforge " << command << ": error[artifact]: " << e.what() << '\n';
    return 3;
  } catch (const LoadError& e) {
    err << "trajforge " << command << ": error[artifact]: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    err << "trajforge " << command << ": error[runtime]: " << e.what() << '\n';
    return 1;
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"trajforge"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace trajforge::cli
