// Desk-scale acceptance run. Prints one PASS/FAIL line per criterion and
// leaves the raw numbers as CSV next to the binary (or under --output).
//
//   acceptance [--output DIR] [--expect-red NAME]... [criterion ...]
//
// The exit code is nonzero when any criterion fails, except those named with
// --expect-red. Their FAIL line is printed all the same.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "trajforge/agent/train_loop.hpp"
#include "trajforge/analysis/metrics.hpp"
#include "trajforge/cli/cli.hpp"
#include "trajforge/cli/pipeline.hpp"
#include "trajforge/diffusion/sampler.hpp"
#include "trajforge/nn/layers.hpp"
#include "trajforge/nn/mlp.hpp"
#include "trajforge/nn/unet1d.hpp"
#include "trajforge/oracle/checks.hpp"
#include "trajforge/policies/behavior.hpp"
#include "trajforge/policies/gaussian.hpp"

using namespace trajforge;
namespace fs = std::filesystem;
using nlohmann::json;
using clk = std::chrono::steady_clock;

namespace {

fs::path g_out = "acceptance_out";

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int prec = 4) {
  std::ostringstream s;
  s << std::setprecision(prec) << v;
  return s.str();
}

struct MeanSe {
  double mean = 0, se = 0;
};

MeanSe mean_se(const std::vector<double>& v) {
  const auto a = analysis::aggregate(v);
  return {a.mean, a.se};
}

// ---------------------------------------------------------------- gradients

using nn::Matrix;

Matrix randn(Index r, Index c, Rng& rng) {
  Matrix m(r, c);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6}); }

// Worst relative error of dL/dparam and dL/dx, L = sum(cot .* f(x)).
double fd_worst(const std::function<Matrix(const Matrix&)>& eval, const std::function<Matrix(const Matrix&)>& grad,
                const nn::ParamList& params, Matrix x, const Matrix& cot) {
  const double h = 1e-5;
  nn::zero_grads(params);
  const Matrix dx = grad(x);
  auto loss = [&](const Matrix& in) { return (eval(in).array() * cot.array()).sum(); };
  auto probe = [&](double& slot, double analytic) {
    const double keep = slot;
    slot = keep + h;
    const double lp = loss(x);
    slot = keep - h;
    const double lm = loss(x);
    slot = keep;
    return rel_err((lp - lm) / (2 * h), analytic);
  };
  double worst = 0.0;
  for (nn::Param* p : params)
    for (Index i = 0; i < p->value.size(); ++i) worst = std::max(worst, probe(p->value.data()[i], p->grad.data()[i]));
  for (Index i = 0; i < x.size(); ++i) worst = std::max(worst, probe(x.data()[i], dx.data()[i]));
  return worst;
}

void perturb(const nn::ParamList& ps, Rng& rng) {
  for (nn::Param* p : ps) p->value += 0.1 * randn(p->value.rows(), p->value.cols(), rng);
}

Verdict gradients() {
  constexpr int kTrials = 100;
  std::map<std::string, double> worst;
  Rng rng(20240611);
  for (int t = 0; t < kTrials; ++t) {
    {
      nn::Linear l(3, 4, rng);
      const Matrix x = randn(3, 5, rng), cot = randn(4, 5, rng);
      nn::ParamList ps;
      l.collect(ps);
      perturb(ps, rng);
      worst["linear"] = std::max(worst["linear"], fd_worst([&](const Matrix& in) { return l.forward(in); },
                                                           [&](const Matrix& in) { return l.backward(in, cot); }, ps,
                                                           x, cot));
    }
    {
      const Index k = 1 + 2 * (t % 3), len = 6;
      nn::Conv1d c(2, 3, k, rng);
      const Matrix x = randn(2, 2 * len, rng), cot = randn(3, 2 * len, rng);
      nn::ParamList ps;
      c.collect(ps);
      worst["conv1d"] = std::max(worst["conv1d"], fd_worst([&](const Matrix& in) { return c.forward(in, len); },
                                                           [&](const Matrix& in) { return c.backward(in, cot, len); },
                                                           ps, x, cot));
    }
    {
      const Matrix x = randn(3, 7, rng), cot = randn(3, 7, rng);
      worst["silu"] = std::max(worst["silu"], fd_worst([](const Matrix& in) { return nn::silu(in); },
                                                       [&](const Matrix& in) { return nn::silu_backward(in, cot); },
                                                       {}, x, cot));
    }
    {
      const Matrix x = randn(2, 8, rng), cot = randn(2, 4, rng);
      worst["avg_pool2"] = std::max(
          worst["avg_pool2"], fd_worst([](const Matrix& in) { return nn::avg_pool2(in); },
                                       [&](const Matrix&) { return nn::avg_pool2_backward(cot); }, {}, x, cot));
    }
    {
      const Matrix x = randn(2, 4, rng), cot = randn(2, 8, rng);
      worst["upsample2"] = std::max(
          worst["upsample2"], fd_worst([](const Matrix& in) { return nn::upsample2(in); },
                                       [&](const Matrix&) { return nn::upsample2_backward(cot); }, {}, x, cot));
    }
    {
      const Index in = t % 2 ? 3 : 2, len = 4;
      nn::ResBlock b(in, 3, 3, rng, "block");
      nn::ParamList ps;
      b.collect(ps);
      perturb(ps, rng);
      const Matrix x = randn(in, 2 * len, rng), cot = randn(3, 2 * len, rng);
      Eigen::VectorXd c(2);
      c << rng.normal(), rng.normal();
      const Matrix cond = nn::expand_per_position(c, len);
      worst["resblock"] = std::max(worst["resblock"],
                                   fd_worst([&](const Matrix& x_) { return b.forward(x_, cond, len, nullptr); },
                                            [&](const Matrix& x_) {
                                              nn::ResBlock::Tape tape;
                                              b.forward(x_, cond, len, &tape);
                                              return b.backward(tape, cot, len);
                                            },
                                            ps, x, cot));
    }
    {
      nn::Mlp m({3, 6, 5, 2}, rng, t % 2 ? nn::OutputActivation::tanh : nn::OutputActivation::none);
      const Matrix x = randn(3, 4, rng), cot = randn(2, 4, rng);
      worst["mlp"] = std::max(worst["mlp"], fd_worst([&](const Matrix& in) { return m.infer(in); },
                                                     [&](const Matrix& in) {
                                                       m.forward(in);
                                                       return m.backward(cot);
                                                     },
                                                     m.params(), x, cot));
    }
    {
      nn::UNet1d net({3, 4, 2, 3}, rng);
      perturb(net.params(), rng);
      const Index len = 4;
      const Matrix x = randn(3, 2 * len, rng), cot = randn(3, 2 * len, rng);
      Eigen::VectorXd cond(2);
      cond << rng.normal(), rng.normal();
      worst["unet1d"] = std::max(worst["unet1d"], fd_worst([&](const Matrix& in) { return net.infer(in, cond, len); },
                                                           [&](const Matrix& in) {
                                                             net.forward(in, cond, len);
                                                             return net.backward(cot);
                                                           },
                                                           net.params(), x, cot));
    }
    {
      GaussianPolicy p(4, 2, {8, 8}, rng, rng.uniform(-1.0, 0.5));
      perturb(p.params(), rng);
      const Eigen::VectorXd s = rng.normal_vector(4), a = rng.normal_vector(2);
      const Eigen::VectorXd g = action_grad_log_prob(p, s, a);
      const double h = 1e-4;
      for (Index i = 0; i < 2; ++i) {
        Eigen::VectorXd ap = a, am = a;
        ap[i] += h;
        am[i] -= h;
        const double fd = (log_prob(p, s, ap) - log_prob(p, s, am)) / (2 * h);
        worst["gaussian_policy_action"] = std::max(worst["gaussian_policy_action"], rel_err(fd, g[i]));
      }
    }
  }
  Verdict v{true, ""};
  for (const auto& [name, w] : worst) {
    v.pass = v.pass && w < 1e-4;
    v.detail += name + "=" + fmt(w, 2) + " ";
  }
  return v;
}

// ---------------------------------------------------------------- sampler

Verdict edm_sampler() {
  const double mu = 1.5, sd = 0.5;
  const diffusion::GaussianDenoiser g(Eigen::VectorXd::Constant(1, mu), Eigen::VectorXd::Constant(1, sd));
  diffusion::SamplerConfig cfg;
  cfg.seed = 11;
  const auto xs = diffusion::sample_tensors(g, 1, 4096, cfg);
  std::vector<double> v;
  for (const auto& x : xs) v.push_back(x(0, 0));
  const double m = analysis::aggregate(v).mean;
  double ss = 0;
  for (double x : v) ss += (x - m) * (x - m);
  const double s = std::sqrt(ss / static_cast<double>(v.size()));
  const double em = std::abs(m - mu) / mu, es = std::abs(s - sd) / sd;
  return {em < 0.02 && es < 0.02, "mean " + fmt(m) + " (rel " + fmt(em, 2) + "), std " + fmt(s) + " (rel " +
                                      fmt(es, 2) + "), 4096 samples"};
}

// ---------------------------------------------------------------- oracle

Verdict oracle_identities() {
  const auto r = oracle::run_oracle_checks(50, 10, 100, {0.0, 0.25, 0.5, 1.0, 2.0}, 7);
  const bool ok = r.importance < 1e-12 && r.symmetry < 1e-12 && r.score_identity < 1e-10 && r.score_lambda < 1e-10 &&
                  r.endpoint0 == 0.0 && r.endpoint1 == 0.0;
  return {ok, "importance " + fmt(r.importance, 2) + ", symmetry " + fmt(r.symmetry, 2) + " (" +
                  std::to_string(r.mdps) + " MDPs); score " + fmt(r.score_identity, 2) + ", score-lambda " +
                  fmt(r.score_lambda, 2) + " (" + std::to_string(r.points) + " points); endpoints " +
                  fmt(r.endpoint0, 2) + ", " + fmt(r.endpoint1, 2)};
}

// ---------------------------------------------------------------- lambda = 0

Verdict lambda0_equivalence() {
  cli::RunConfig cfg;
  cfg.dataset.episodes = 32;
  cfg.diffusion.net.width = 8;
  cfg.diffusion.train.max_steps = 200;
  cfg.diffusion.schedule.steps = 32;
  const Dataset raw = cli::collect(cfg);
  const cli::DiffusionModel model = cli::train_diffusion(cfg, raw);
  const auto actor = std::make_shared<agent::Actor>(cli::train_offline_actor(cfg, raw, 50, 3));
  const auto density = cli::target_density(actor, model.stats);
  int seeds = 0, mismatched = 0;
  for (std::uint64_t seed = 1; seed <= 8; ++seed, ++seeds) {
    const Dataset plain = cli::sample(cfg, model, nullptr, 0.0, 64, seed);
    const Dataset guided = cli::sample(cfg, model, density, 0.0, 64, seed);
    bool same = plain.trajectories.size() == guided.trajectories.size();
    for (std::size_t i = 0; same && i < plain.trajectories.size(); ++i) {
      const auto &p = plain.trajectories[i], &g = guided.trajectories[i];
      same = p.states == g.states && p.actions == g.actions && p.rewards == g.rewards && p.dones == g.dones &&
             p.padding == g.padding;
    }
    if (!same) ++mismatched;
  }
  // Also through the bare tensor sampler on the analytic denoiser.
  Eigen::VectorXd mu(5), sd(5);
  mu << 0.1, 0.2, -0.3, 0.0, 0.1;
  sd << 1.0, 0.5, 0.7, 1.2, 1.0;
  const diffusion::GaussianDenoiser g(mu, sd);
  const diffusion::ChannelLayout tiny{1, 1};
  const FunctionPolicy pol(
      1, 1, [](const Eigen::VectorXd& s) -> Eigen::VectorXd { return -0.8 * s; }, Eigen::VectorXd::Constant(1, -0.5));
  for (std::uint64_t seed = 1; seed <= 8; ++seed, ++seeds) {
    diffusion::SamplerConfig sc;
    sc.schedule.steps = 32;
    sc.guidance.lambda = 0.0;
    sc.seed = seed;
    const auto plain = diffusion::sample_tensors(g, 8, 64, sc);
    const auto guided = diffusion::sample_tensors(g, 8, 64, sc, &pol, &tiny);
    if (plain != guided) ++mismatched;
  }
  return {mismatched == 0, std::to_string(seeds) + " seeds, " + std::to_string(mismatched) + " not bit-identical"};
}

// ---------------------------------------------------------------- shared desk-scale models

cli::RunConfig desk_config(std::uint64_t seed) {
  cli::RunConfig cfg;
  cfg.seed = seed;
  cfg.diffusion.net.width = 32;
  cfg.diffusion.train.max_steps = 16000;
  cfg.diffusion.schedule.steps = 64;
  cfg.analysis.trajectories = 2048;
  cfg.analysis.target_steps = 3000;
  cfg.agent.online.steps = 6000;
  return cfg;
}

struct SeedModels {
  cli::RunConfig cfg;
  Dataset raw;
  std::optional<cli::DiffusionModel> diffusion;
  std::optional<worldmodel::EnsembleDynamics> ensemble;
};

constexpr int kModelSeeds = 4;

SeedModels& models(int s) {
  static std::vector<std::unique_ptr<SeedModels>> cache(kModelSeeds);
  auto& slot = cache.at(static_cast<std::size_t>(s));
  if (!slot) {
    const auto t = clk::now();
    slot = std::make_unique<SeedModels>();
    slot->cfg = desk_config(static_cast<std::uint64_t>(s));
    slot->raw = cli::collect(slot->cfg);
    slot->diffusion.emplace(cli::train_diffusion(slot->cfg, slot->raw));
    slot->ensemble.emplace(cli::train_worldmodel(slot->cfg, slot->raw));
    std::cerr << "  [models] seed " << s << " trained in "
              << std::chrono::duration<double>(clk::now() - t).count() << " s\n";
  }
  return *slot;
}

std::vector<analysis::ComparisonRow>& sweep_rows() {
  static std::optional<std::vector<analysis::ComparisonRow>> rows;
  if (!rows) {
    rows.emplace();
    for (int s = 0; s < kModelSeeds; ++s) {
      SeedModels& m = models(s);
      const auto t = clk::now();
      cli::SweepInputs in;
      in.real = &m.raw;
      in.diffusion = &*m.diffusion;
      in.ensemble = &*m.ensemble;
      in.targets = cli::train_targets(m.cfg, m.raw);
      auto r = cli::sweep(m.cfg, in, nullptr);
      rows->insert(rows->end(), r.begin(), r.end());
      std::cerr << "  [sweep] seed " << s << " in " << std::chrono::duration<double>(clk::now() - t).count()
                << " s\n";
    }
    analysis::write_comparison_csv(g_out / "comparison.csv", *rows, 16);
  }
  return *rows;
}

const std::vector<std::string> kTargets{"random-trained", "medium-trained", "expert-proxy"};

Verdict likelihood_monotone() {
  const auto& rows = sweep_rows();
  const std::vector<double> lambdas = desk_config(0).analysis.lambdas;
  Verdict v{true, ""};
  for (const auto& p : kTargets) {
    std::vector<double> means;
    for (double lam : lambdas) {
      std::vector<double> per_seed;
      for (const auto& r : rows)
        if (r.source == "guided" && r.policy == p && r.lambda == lam) per_seed.push_back(r.likelihood_mean);
      means.push_back(analysis::aggregate(per_seed).mean);
    }
    v.detail += p + " [";
    for (std::size_t i = 0; i < means.size(); ++i) {
      v.detail += (i ? " " : "") + fmt(means[i]);
      if (i > 0 && means[i] < means[i - 1]) v.pass = false;
    }
    v.detail += "] ";
  }
  return v;
}

Verdict dynamics_ordering() {
  const auto& rows = sweep_rows();
  Verdict v{true, ""};
  for (const auto& p : kTargets) {
    std::vector<double> g, w;
    for (const auto& r : rows) {
      if (r.policy != p) continue;
      if (r.source == "guided" && r.lambda == 1.0) g.push_back(r.dyn_mse[15]);
      if (r.source == "episodic_wm") w.push_back(r.dyn_mse[15]);
    }
    const MeanSe mg = mean_se(g), mw = mean_se(w);
    const bool ok = mg.mean + mg.se < mw.mean - mw.se;
    v.pass = v.pass && ok;
    v.detail += p + " guided " + fmt(mg.mean) + "+-" + fmt(mg.se, 2) + " vs ensemble " + fmt(mw.mean) + "+-" +
                fmt(mw.se, 2) + (ok ? "; " : " (overlap or reversed); ");
  }
  return v;
}

// ---------------------------------------------------------------- compounding error

Verdict compounding() {
  std::ofstream csv(g_out / "compounding.csv");
  csv << "seed,step,mse,se\n" << std::setprecision(10);
  Verdict v{true, ""};
  for (int s = 0; s < 3; ++s) {
    SeedModels& m = models(s);
    const PointMass2D oracle = cli::make_oracle(m.cfg);
    const BehaviorPolicy beh(BehaviorLevel::medium, m.cfg.dataset.policy);
    cli::RunConfig rc = m.cfg;
    rc.worldmodel.start = worldmodel::StartMode::any_timestep;
    const auto res = cli::rollouts(rc, *m.ensemble, beh.medium(), m.raw, 16, 2048, derive_seed(17, "compounding", static_cast<std::uint64_t>(s)));
    const auto err = analysis::dynamics_error(oracle, res.data);
    int drops = 0;
    for (Index j = 0; j < err.mse.size(); ++j) {
      csv << s << ',' << j + 1 << ',' << err.mse[j] << ',' << err.se[j] << '\n';
      if (j > 0 && err.mse[j] < err.mse[j - 1]) ++drops;
    }
    v.pass = v.pass && drops == 0;
    v.detail += "seed " + std::to_string(s) + ": " + fmt(err.mse[0], 3) + " -> " +
                fmt(err.mse[err.mse.size() - 1], 3) + ", " + std::to_string(drops) + " decreases; ";
  }
  return v;
}

// ---------------------------------------------------------------- end to end

constexpr int kAgentSeeds = 4;
constexpr std::int64_t kE2eStepsPerEpoch = 5000;
constexpr std::size_t kE2eTrajectories = 1024;

Verdict end_to_end() {
  std::vector<agent::MetricsRow> all;
  std::map<agent::Source, std::vector<double>> finals;
  const std::vector<agent::Source> sources{agent::Source::real, agent::Source::unguided, agent::Source::guided};
  for (int s = 0; s < kModelSeeds; ++s) {
    SeedModels& m = models(s);
    const PointMass2D env = cli::make_env(m.cfg);
    cli::RunConfig cfg = m.cfg;
    cfg.loop.loop.steps_per_epoch = kE2eStepsPerEpoch;
    cfg.loop.loop.trajectories = kE2eTrajectories;
    agent::LoopInputs in;
    in.real = &m.raw;
    in.denoiser = &m.diffusion->denoiser;
    in.diffusion_stats = &m.diffusion->stats;
    in.eval_env = &env;
    for (int a = 0; a < kAgentSeeds; ++a) {
      for (auto src : sources) {
        const auto t = clk::now();
        agent::TrainLoopConfig lc = cli::loop_config(cfg, m.raw.window);
        lc.seed = derive_seed(lc.seed, "agent", static_cast<std::uint64_t>(a));
        lc.generation_seed = derive_seed(lc.generation_seed, "agent", static_cast<std::uint64_t>(a));
        const auto res = agent::train_loop(lc, src, cfg.agent.td3, in);
        finals[src].push_back(res.metrics.back().eval_return);
        all.insert(all.end(), res.metrics.begin(), res.metrics.end());
        std::cerr << "  [e2e] seed " << s << "/" << a << " " << agent::to_string(src) << " "
                  << res.metrics.back().eval_return << " ("
                  << std::chrono::duration<double>(clk::now() - t).count() << " s)\n";
      }
    }
  }
  agent::write_metrics_csv(g_out / "metrics.csv", all);
  const MeanSe r = mean_se(finals[agent::Source::real]), u = mean_se(finals[agent::Source::unguided]),
               g = mean_se(finals[agent::Source::guided]);
  const double margin = 2.0 * std::sqrt(g.se * g.se + u.se * u.se);
  const bool ok = g.mean - u.mean > margin && g.mean >= r.mean;
  return {ok, "guided " + fmt(g.mean) + "+-" + fmt(g.se, 2) + ", unguided " + fmt(u.mean) + "+-" + fmt(u.se, 2) +
                  ", real " + fmt(r.mean) + "+-" + fmt(r.se, 2) + " (" +
                  std::to_string(kModelSeeds * kAgentSeeds) + " runs each, required gap " + fmt(margin, 3) + ")"};
}

// ---------------------------------------------------------------- determinism

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Verdict determinism() {
  const fs::path root = g_out / "determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  const json tiny = {
      {"dataset", {{"episodes", 16}}},
      {"diffusion", {{"width", 8}, {"max_steps", 60}, {"steps", 8}, {"trajectories", 32}}},
      {"worldmodel", {{"steps", 60}, {"count", 32}}},
      {"agent", {{"online_steps", 300}, {"online_random_steps", 100}, {"hidden", {32, 32}}, {"batch", 64}}},
      {"loop", {{"epochs", 2}, {"steps_per_epoch", 40}, {"trajectories", 16}, {"eval_episodes", 2}}},
      {"analysis", {{"trajectories", 32}, {"target_steps", 40}}},
      {"seeds", {{"root", 5}}}};
  std::ofstream(root / "config.json") << tiny.dump(2);

  const std::vector<std::vector<std::string>> commands{
      {"collect"},
      {"train-diffusion"},
      {"train-ensemble"},
      {"sample", "--source", "unguided"},
      {"train-agent", "--source", "real"},
      {"train-agent", "--source", "unguided"},
      {"train-agent", "--source", "worldmodel"},
      {"train-agent", "--source", "guided"},
      {"sample", "--source", "guided"},
      {"sample", "--source", "worldmodel"},
      {"analyze"},
      {"oracle-check"},
      {"sweep", "--lambdas", "0,1"}};
  // Manifest contents after every command, per run.
  std::vector<std::string> manifests[2];
  for (int run = 0; run < 2; ++run) {
    const fs::path out = root / (run ? "b" : "a");
    for (const auto& c : commands) {
      std::vector<std::string> args = c;
      args.insert(args.end(), {"--config", (root / "config.json").string(), "--output",
                               (out / (c[0] == "sweep" ? "sweep" : "")).string()});
      std::ostringstream so, se;
      const int code = cli::run(args, so, se);
      if (code != 0) return {false, "'" + c[0] + "' exited " + std::to_string(code) + ": " + se.str()};
      const fs::path mf = out / (c[0] == "sweep" ? "sweep" : "") / (c[0] + ".manifest.json");
      manifests[run].push_back(slurp(mf));
    }
  }
  int differing = 0;
  std::string first;
  for (std::size_t i = 0; i < commands.size(); ++i) {
    if (manifests[0][i] == manifests[1][i]) continue;
    ++differing;
    if (first.empty()) first = commands[i][0];
  }
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(root / "a")) {
    if (!e.is_regular_file()) continue;
    ++files;
    const fs::path rel = fs::relative(e.path(), root / "a");
    if (slurp(e.path()) != slurp(root / "b" / rel)) {
      ++differing;
      if (first.empty()) first = rel.string();
    }
  }
  return {differing == 0, std::to_string(commands.size()) + " commands, " + std::to_string(files) +
                              " files compared" + (first.empty() ? "" : ", first difference: " + first)};
}

struct Criterion {
  std::string name;
  std::function<Verdict()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {"gradients", gradients},
      {"edm_sampler", edm_sampler},
      {"oracle_identities", oracle_identities},
      {"lambda0_equivalence", lambda0_equivalence},
      {"likelihood_monotone", likelihood_monotone},
      {"dynamics_ordering", dynamics_ordering},
      {"compounding_error", compounding},
      {"end_to_end", end_to_end},
      {"determinism", determinism}};
  std::vector<std::string> only, expect_red;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--output" && i + 1 < argc) {
      g_out = argv[++i];
    } else if (a == "--expect-red" && i + 1 < argc) {
      expect_red.push_back(argv[++i]);
    } else if (a == "--list") {
      for (const auto& c : criteria) std::cout << c.name << '\n';
      return 0;
    } else {
      only.push_back(a);
    }
  }
  fs::create_directories(g_out);
  std::ofstream summary(g_out / "summary.txt");
  int failed = 0;
  std::vector<std::string> known_red;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.name) == only.end()) continue;
    const auto t = clk::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(clk::now() - t).count();
    const bool expected = std::find(expect_red.begin(), expect_red.end(), c.name) != expect_red.end();
    if (!v.pass) (expected ? known_red.push_back(c.name) : void(++failed));
    std::ostringstream line;
    line << (v.pass ? "PASS " : "FAIL ") << c.name << " (" << fmt(secs, 3) << " s): " << v.detail << '\n';
    std::cout << line.str() << std::flush;
    summary << line.str() << std::flush;
  }
  for (const auto& n : known_red) {
    std::cout << "note: " << n << " is red and listed with --expect-red\n";
    summary << "note: " << n << " is red and listed with --expect-red\n";
  }
  return failed == 0 ? 0 : 1;
}
