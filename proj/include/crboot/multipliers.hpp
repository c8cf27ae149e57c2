#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "crboot/event_data.hpp"

namespace crboot {

enum class MultiplierLaw { StandardNormal, CenteredPoisson, Weird };

inline std::string_view to_string(MultiplierLaw law) {
  switch (law) {
    case MultiplierLaw::StandardNormal: return "normal";
    case MultiplierLaw::CenteredPoisson: return "poisson";
    case MultiplierLaw::Weird: return "weird";
  }
  return "?";
}

inline MultiplierLaw parse_multiplier_law(std::string_view s) {
  if (s == "normal") return MultiplierLaw::StandardNormal;
  if (s == "poisson") return MultiplierLaw::CenteredPoisson;
  if (s == "weird") return MultiplierLaw::Weird;
  throw std::invalid_argument("unknown multiplier law '" + std::string(s) + "' (normal|poisson|weird)");
}

// SplitMix64 finalizer; used to derive independent engine seeds from
// (root seed, stream, counter) without shared state.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream, std::uint64_t counter) {
  return mix64(mix64(mix64(root) ^ stream) ^ counter);
}

/// Stream ids; kept distinct so data, bootstrap and auxiliary draws never
/// share an engine.
namespace stream {
inline constexpr std::uint64_t kMultipliers = 0x6d756c7469ULL;
inline constexpr std::uint64_t kDataset = 0x6461746173ULL;
inline constexpr std::uint64_t kBand = 0x62616e64ULL;
}  // namespace stream

/// One replicate's k x k x n multiplier array xi_{j l i}.
class MultiplierDraw {
 public:
  MultiplierDraw() = default;
  MultiplierDraw(int k, std::size_t n, MultiplierLaw law, std::uint64_t root_seed, std::uint64_t replicate)
      : k_(k), n_(n), law_(law), root_seed_(root_seed), replicate_(replicate),
        values_(static_cast<std::size_t>(k) * static_cast<std::size_t>(k) * n, 0.0) {}

  /// Wraps explicit values (layout [(j-1)*k + (l-1)]*n + i).
  static MultiplierDraw from_values(int k, std::size_t n, std::vector<double> values,
                                    MultiplierLaw law = MultiplierLaw::StandardNormal) {
    if (values.size() != static_cast<std::size_t>(k) * static_cast<std::size_t>(k) * n)
      throw std::invalid_argument("MultiplierDraw: expected k*k*n values");
    MultiplierDraw d(k, n, law, 0, 0);
    d.values_ = std::move(values);
    return d;
  }

  /// Every entry equal to `c`.
  static MultiplierDraw constant(int k, std::size_t n, double c) {
    return from_values(k, n, std::vector<double>(static_cast<std::size_t>(k * k) * n, c));
  }

  double operator()(int j, int l, std::size_t i) const { return values_[index(j, l, i)]; }
  double& at(int j, int l, std::size_t i) { return values_[index(j, l, i)]; }

  int k() const { return k_; }
  std::size_t n() const { return n_; }
  MultiplierLaw law() const { return law_; }
  std::uint64_t root_seed() const { return root_seed_; }
  std::uint64_t replicate() const { return replicate_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  void relabel(MultiplierLaw law, std::uint64_t root_seed, std::uint64_t replicate) {
    law_ = law;
    root_seed_ = root_seed;
    replicate_ = replicate;
  }

 private:
  std::size_t index(int j, int l, std::size_t i) const {
    return (static_cast<std::size_t>(j - 1) * static_cast<std::size_t>(k_) + static_cast<std::size_t>(l - 1)) * n_ + i;
  }

  int k_ = 0;
  std::size_t n_ = 0;
  MultiplierLaw law_ = MultiplierLaw::StandardNormal;
  std::uint64_t root_seed_ = 0;
  std::uint64_t replicate_ = 0;
  std::vector<double> values_;
};

/// Refills `draw` in place for (root_seed, replicate). The engine is a pure
/// function of those two numbers, so replicates can run in any order.
inline void fill_multipliers(MultiplierDraw& draw, const RiskTable& rt, MultiplierLaw law,
                             std::uint64_t root_seed, std::uint64_t replicate) {
  const int k = draw.k();
  const std::size_t n = draw.n();
  if (law == MultiplierLaw::Weird && n != rt.n())
    throw std::invalid_argument("fill_multipliers: weird multipliers need one entry per subject of the risk table");
  draw.relabel(law, root_seed, replicate);
  std::mt19937_64 eng(derive_seed(root_seed, stream::kMultipliers, replicate));
  auto& v = draw.values();
  switch (law) {
    case MultiplierLaw::StandardNormal: {
      std::normal_distribution<double> z(0.0, 1.0);
      for (double& x : v) x = z(eng);
      break;
    }
    case MultiplierLaw::CenteredPoisson: {
      std::poisson_distribution<int> pois(1.0);
      for (double& x : v) x = static_cast<double>(pois(eng) - 1);
      break;
    }
    case MultiplierLaw::Weird: {
      std::size_t idx = 0;
      for (int j = 0; j < k; ++j) {
        for (int l = 0; l < k; ++l) {
          for (std::size_t i = 0; i < n; ++i, ++idx) {
            const int y = rt.exit_at_risk(i);
            if (y <= 1) {
              v[idx] = 0.0;  // Bin(1, 1) - 1
              continue;
            }
            std::binomial_distribution<int> bin(y, 1.0 / static_cast<double>(y));
            v[idx] = static_cast<double>(bin(eng) - 1);
          }
        }
      }
      break;
    }
  }
}

inline MultiplierDraw draw_multipliers(const RiskTable& rt, MultiplierLaw law, std::uint64_t root_seed,
                                       std::uint64_t replicate, int k, std::size_t n) {
  if (k < 1) throw std::invalid_argument("draw_multipliers: k must be >= 1");
  MultiplierDraw d(k, n, law, root_seed, replicate);
  fill_multipliers(d, rt, law, root_seed, replicate);
  return d;
}

inline MultiplierDraw draw_multipliers(const RiskTable& rt, MultiplierLaw law, std::uint64_t root_seed,
                                       std::uint64_t replicate) {
  return draw_multipliers(rt, law, root_seed, replicate, rt.k(), rt.n());
}

}  // namespace crboot
