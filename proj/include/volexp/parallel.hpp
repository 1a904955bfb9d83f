#pragma once

#include "volexp/rng.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace volexp {

struct MCEstimate {
  double mean = 0.0;
  double stderror = 0.0;
  uint64_t n_paths = 0;
  uint64_t seed = 0;
  bool antithetic = true;
};

struct MCRunConfig {
  uint64_t n_paths = 1u << 16;
  uint64_t seed = 42;
  bool antithetic = true;
  uint64_t chunk_size = 4096;  // paths per chunk; one RNG stream per chunk
  int threads = 0;             // 0: VOLVOL_THREADS env, then hardware
};

inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("VOLVOL_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

// Chunked Monte Carlo driver. Samples are antithetic pairs when enabled,
// single paths otherwise. Each chunk owns the Philox stream (seed, chunk id)
// and accumulates locally; chunk partials are combined in fixed chunk order,
// so the result is bit-identical for any worker count.
//
// worker_factory() is invoked once per thread and must return a callable
// void(Philox&, std::span<double> out) writing K statistics per sample.
template <class WorkerFactory>
std::vector<MCEstimate> run_chunked(const MCRunConfig& cfg, size_t K,
                                    WorkerFactory&& worker_factory) {
  if (cfg.n_paths == 0) throw std::invalid_argument("run_chunked: n_paths must be > 0");
  if (cfg.chunk_size == 0)
    throw std::invalid_argument("run_chunked: chunk_size must be > 0");
  if (cfg.antithetic && (cfg.n_paths % 2 != 0 || cfg.chunk_size % 2 != 0))
    throw std::invalid_argument(
        "run_chunked: antithetic runs need even n_paths and chunk_size");

  const uint64_t per_sample = cfg.antithetic ? 2 : 1;
  const uint64_t n_samples = cfg.n_paths / per_sample;
  const uint64_t samples_per_chunk = cfg.chunk_size / per_sample;
  const uint64_t n_chunks = (n_samples + samples_per_chunk - 1) / samples_per_chunk;

  struct Partial {
    std::vector<double> sum, sumsq;
  };
  std::vector<Partial> partials(n_chunks);

  std::atomic<uint64_t> next_chunk{0};
  const int n_threads =
      static_cast<int>(std::min<uint64_t>(resolve_threads(cfg.threads), n_chunks));

  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto thread_main = [&]() {
    try {
      auto worker = worker_factory();
      std::vector<double> out(K);
      for (;;) {
        const uint64_t c = next_chunk.fetch_add(1);
        if (c >= n_chunks) break;
        Partial p;
        p.sum.assign(K, 0.0);
        p.sumsq.assign(K, 0.0);
        Philox rng(cfg.seed, c);
        const uint64_t lo = c * samples_per_chunk;
        const uint64_t hi = std::min(n_samples, lo + samples_per_chunk);
        for (uint64_t s = lo; s < hi; ++s) {
          worker(rng, std::span<double>(out));
          for (size_t k = 0; k < K; ++k) {
            p.sum[k] += out[k];
            p.sumsq[k] += out[k] * out[k];
          }
        }
        partials[c] = std::move(p);
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next_chunk.store(n_chunks);  // drain remaining work
    }
  };

  if (n_threads <= 1) {
    thread_main();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(n_threads));
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(thread_main);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<double> sum(K, 0.0), sumsq(K, 0.0);
  for (uint64_t c = 0; c < n_chunks; ++c) {  // fixed reduction order
    for (size_t k = 0; k < K; ++k) {
      sum[k] += partials[c].sum[k];
      sumsq[k] += partials[c].sumsq[k];
    }
  }

  std::vector<MCEstimate> est(K);
  const double n = static_cast<double>(n_samples);
  for (size_t k = 0; k < K; ++k) {
    est[k].mean = sum[k] / n;
    const double var = std::max(0.0, (sumsq[k] - sum[k] * sum[k] / n) / (n - 1.0));
    est[k].stderror = n > 1 ? std::sqrt(var / n) : 0.0;
    est[k].n_paths = cfg.n_paths;
    est[k].seed = cfg.seed;
    est[k].antithetic = cfg.antithetic;
  }
  return est;
}

}  // namespace volexp
