#include "trajforge/diffusion/sampler.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "trajforge/core/error.hpp"

namespace trajforge::diffusion {

Eigen::MatrixXd action_guidance_gradient(const Policy& policy, const Eigen::MatrixXd& x, const ChannelLayout& layout) {
  return action_grad_log_prob_batch(policy, x.middleRows(layout.state_offset(), layout.state_dim),
                                    x.middleRows(layout.action_offset(), layout.action_dim));
}

Eigen::MatrixXd guided_score(const Denoiser& d, const Eigen::MatrixXd& x, double sigma, const Policy* policy,
                             const ChannelLayout& layout) {
  Eigen::MatrixXd s = score(d, x, sigma);
  if (policy) s.middleRows(layout.action_offset(), layout.action_dim) += action_guidance_gradient(*policy, x, layout);
  return s;
}

namespace {

struct ChunkJob {
  const Denoiser& denoiser;
  const SamplerConfig& cfg;
  const Policy* policy;
  const ChannelLayout* layout;
  Index length;
  std::vector<double> sigmas;
  std::vector<double> gammas;
  std::vector<double> weights;
};

[[noreturn]] void fail(const char* what, int step, double sigma, std::size_t first, std::size_t count) {
  std::ostringstream os;
  os << "sampling produced non-finite " << what << " at step " << step << " (sigma=" << sigma << ") in trajectories ["
     << first << ", " << first + count << ")";
  throw SamplingError(os.str());
}

void check_finite(const Eigen::MatrixXd& m, const char* what, int step, double sigma, std::size_t first,
                  std::size_t count) {
  if (!m.allFinite()) fail(what, step, sigma, first, count);
}

struct ChunkStats {
  std::int64_t guidance_steps = 0, skips = 0, calls = 0;
};

std::vector<Eigen::MatrixXd> run_chunk(const ChunkJob& job, std::size_t first, std::size_t count, ChunkStats& st) {
  const Index c = job.denoiser.channels();
  const Index len = job.length;
  const auto b_count = static_cast<Index>(count);
  const int steps = job.cfg.schedule.steps;
  const double s_noise = job.cfg.schedule.s_noise;

  std::vector<Rng> rngs;
  rngs.reserve(count);
  for (std::size_t i = 0; i < count; ++i) rngs.emplace_back(derive_seed(job.cfg.seed, "sample", first + i));

  auto fill_normal = [&](Eigen::MatrixXd& m, double scale) {
    for (Index b = 0; b < b_count; ++b) {
      Rng& r = rngs[static_cast<std::size_t>(b)];
      for (Index j = 0; j < len; ++j)
        for (Index ch = 0; ch < c; ++ch) m(ch, b * len + j) = scale * r.normal();
    }
  };

  Eigen::MatrixXd x(c, b_count * len);
  fill_normal(x, job.sigmas[0]);
  Eigen::MatrixXd eps(c, b_count * len);

  for (int n = 0; n < steps; ++n) {
    const auto nu = static_cast<std::size_t>(n);
    const double sigma = job.sigmas[nu];
    const double sigma_next = job.sigmas[nu + 1];
    const double sigma_hat = sigma + job.gammas[nu] * sigma;

    Eigen::MatrixXd x_hat = x;
    if (sigma_hat > sigma) {
      fill_normal(eps, s_noise);
      x_hat += std::sqrt(sigma_hat * sigma_hat - sigma * sigma) * eps;
    }
    const Eigen::MatrixXd denoised = job.denoiser.denoise(x_hat, Eigen::VectorXd::Constant(b_count, sigma_hat), len);
    ++st.calls;
    check_finite(denoised, "denoiser output", n, sigma_hat, first, count);
    const Eigen::MatrixXd d = (x_hat - denoised) / sigma_hat;

    const double weight = job.weights[nu];
    if (job.policy && weight != 0.0) {
      const ChannelLayout& lay = *job.layout;
      for (Index b = 0; b < b_count; ++b) {
        const Eigen::MatrixXd g = action_guidance_gradient(*job.policy, denoised.middleCols(b * len, len), lay);
        check_finite(g, "guidance gradient", n, sigma_hat, first + static_cast<std::size_t>(b), 1);
        const double norm = g.norm();
        GuidanceEvent ev;
        const bool skip = norm < 1e-12;
        if (skip) {
          ++st.skips;
        } else {
          ++st.guidance_steps;
          const Eigen::MatrixXd inc = (weight / norm) * g;
          x_hat.block(lay.action_offset(), b * len, lay.action_dim, len) += inc;
          if (job.cfg.on_guidance) ev.applied = inc;
        }
        if (job.cfg.on_guidance) {
          ev.trajectory = first + static_cast<std::size_t>(b);
          ev.step = n;
          ev.weight = weight;
          ev.gradient = g;
          ev.skipped = skip;
          job.cfg.on_guidance(ev);
        }
      }
    }

    Eigen::MatrixXd x_next = x_hat + (sigma_next - sigma_hat) * d;
    if (sigma_next != 0.0) {
      const Eigen::MatrixXd den2 =
          job.denoiser.denoise(x_next, Eigen::VectorXd::Constant(b_count, sigma_next), len);
      ++st.calls;
      check_finite(den2, "denoiser output", n, sigma_next, first, count);
      const Eigen::MatrixXd d2 = (x_next - den2) / sigma_next;
      x_next = x_hat + (sigma_next - sigma_hat) * (0.5 * d + 0.5 * d2);
    }
    check_finite(x_next, "trajectory", n, sigma_next, first, count);
    x = std::move(x_next);
  }

  std::vector<Eigen::MatrixXd> out;
  out.reserve(count);
  for (Index b = 0; b < b_count; ++b) out.emplace_back(x.middleCols(b * len, len));
  return out;
}

}  // namespace

std::vector<Eigen::MatrixXd> sample_tensors(const Denoiser& denoiser, Index length, std::size_t count,
                                            const SamplerConfig& cfg, const Policy* policy,
                                            const ChannelLayout* layout, SamplerStats* stats) {
  cfg.schedule.validate();
  if (length <= 0) throw InvalidArgument("sample_tensors: length must be positive");
  if (cfg.chunk < 1 || cfg.workers < 1) throw InvalidArgument("sample_tensors: chunk and workers must be positive");
  if (policy) {
    if (!layout) throw InvalidArgument("sample_tensors: guidance needs a channel layout");
    if (layout->channels() != denoiser.channels() || policy->state_dim() != layout->state_dim ||
        policy->action_dim() != layout->action_dim)
      throw InvalidArgument("sample_tensors: policy dimensions do not match the denoiser's channel layout");
  }

  ChunkJob job{denoiser, cfg, policy, layout, length, cfg.schedule.sigmas(), {}, {}};
  for (int n = 0; n < cfg.schedule.steps; ++n) {
    job.gammas.push_back(cfg.schedule.gamma(n));
    job.weights.push_back(policy ? guidance_schedule(cfg.guidance, cfg.schedule, n) : 0.0);
  }

  const auto chunk = static_cast<std::size_t>(cfg.chunk);
  const std::size_t n_chunks = (count + chunk - 1) / chunk;
  std::vector<Eigen::MatrixXd> out(count);
  std::vector<ChunkStats> chunk_stats(n_chunks);
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;

  auto worker = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= n_chunks) return;
      try {
        const std::size_t first = k * chunk;
        const std::size_t n = std::min(chunk, count - first);
        auto res = run_chunk(job, first, n, chunk_stats[k]);
        for (std::size_t i = 0; i < n; ++i) out[first + i] = std::move(res[i]);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
        next.store(n_chunks);
        return;
      }
    }
  };

  const auto n_threads = std::min<std::size_t>(static_cast<std::size_t>(cfg.workers), std::max<std::size_t>(n_chunks, 1));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  if (error) std::rethrow_exception(error);

  if (stats) {
    *stats = {};
    for (const auto& s : chunk_stats) {
      stats->guidance_steps += s.guidance_steps;
      stats->zero_gradient_skips += s.skips;
      stats->denoiser_calls += s.calls;
    }
  }
  return out;
}

Dataset sample_guided(const Denoiser& denoiser, const Policy* policy, const ChannelLayout& layout,
                      const NormStats& stats, Index length, std::size_t count, const SamplerConfig& cfg,
                      SamplerStats* sampler_stats) {
  const auto tensors = sample_tensors(denoiser, length, count, cfg, policy, &layout, sampler_stats);
  Dataset d;
  d.window = length;
  d.state_dim = layout.state_dim;
  d.action_dim = layout.action_dim;
  d.norm_stats = stats;
  // lambda = 0 never touches the policy, so the output is the unguided dataset.
  d.source_tag = policy && cfg.guidance.lambda != 0.0 ? "guided" : "unguided";
  for (const auto& x : tensors) d.add(decode(x, layout, stats));
  return d;
}

}  // namespace trajforge::diffusion
