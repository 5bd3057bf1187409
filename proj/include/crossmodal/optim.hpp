#ifndef CROSSMODAL_OPTIM_HPP
#define CROSSMODAL_OPTIM_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "crossmodal/errors.hpp"
#include "crossmodal/tensor.hpp"

namespace crossmodal {

// Deterministic 64-bit generator (xorshift-free splitmix64 + mt-like stream).
// Hand-rolled so streams are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9E3779B97F4A7C15ull) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller; draws two uniforms per call.
  double normal(double mean = 0.0, double sigma = 1.0) {
    double u1 = uniform(), u2 = uniform();
    while (u1 <= 1e-300) u1 = uniform();
    return mean + sigma * std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  std::size_t uniform_index(std::size_t n) { return static_cast<std::size_t>(next_u64() % n); }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform_index(i)]);
  }

 private:
  std::uint64_t state_;
};

inline std::uint64_t fnv1a(const std::string& s, std::uint64_t seed = 0xcbf29ce484222325ull) {
  std::uint64_t h = seed;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

// Per-parameter seeding: the draw for a given (seed, name) pair is the same
// regardless of what other parameters a model has. Model variants sharing a
// submodule therefore share its exact initialization.
inline Parameter init_uniform_fanin(const Shape& shape, std::size_t fan_in,
                                    std::uint64_t seed, const std::string& name) {
  Rng rng(fnv1a(name) ^ (seed * 0x9E3779B97F4A7C15ull + 0xD1B54A32D192ED03ull));
  const double bound = fan_in > 0 ? 1.0 / std::sqrt(static_cast<double>(fan_in)) : 1.0;
  Parameter p;
  p.shape = shape;
  p.value.resize(numel(shape));
  for (auto& v : p.value) v = rng.uniform(-bound, bound);
  return p;
}

struct AdamConfig {
  double lr = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::map<std::string, std::vector<double>> m, v;
  long step = 0;
};

// Standard Adam with bias correction. Aborts on non-finite gradients so a
// diverging run fails loudly instead of poisoning the parameters.
inline void adam_step(ParamMap& params, const GradMap& grads, AdamState& state,
                      const AdamConfig& cfg) {
  ++state.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (auto& [name, p] : params) {
    auto git = grads.find(name);
    if (git == grads.end()) continue;
    const auto& g = git->second;
    if (g.size() != p.value.size())
      throw DimensionError("adam_step: gradient size mismatch for " + name);
    auto& m = state.m[name];
    auto& v = state.v[name];
    if (m.empty()) m.assign(p.value.size(), 0.0);
    if (v.empty()) v.assign(p.value.size(), 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!std::isfinite(g[i]))
        throw NumericError("adam_step: non-finite gradient in parameter '" + name + "'");
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p.value[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

// Reduce-on-plateau: after `patience` consecutive epochs without improvement
// the rate is multiplied by `factor` and the counter resets.
struct LrScheduler {
  double lr;
  double factor;
  int patience;
  double best = std::numeric_limits<double>::infinity();
  int bad_epochs = 0;

  LrScheduler(double initial_lr, double decay_factor, int patience_epochs)
      : lr(initial_lr), factor(decay_factor), patience(patience_epochs) {
    if (!(factor > 0.0 && factor < 1.0)) throw ConfigError("scheduler factor must be in (0,1)");
    if (patience < 1) throw ConfigError("scheduler patience must be >= 1");
  }

  double step(double validation_loss) {
    if (validation_loss < best) {
      best = validation_loss;
      bad_epochs = 0;
    } else if (++bad_epochs >= patience) {
      lr *= factor;
      bad_epochs = 0;
    }
    return lr;
  }
};

}  // namespace crossmodal

#endif
