#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "samba/maps.hpp"
#include "samba/random.hpp"
#include "samba/scan_order.hpp"
#include "samba/tensor.hpp"

namespace samba::test {

template <typename T, typename U>
double max_abs_diff(const Tensor<T>& a, const Tensor<U>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
  }
  return m;
}

inline SaliencyMap random_map(std::size_t h, std::size_t w, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(h * w);
  for (double& e : v) e = u(rng);
  return SaliencyMap(h, w, std::move(v));
}

inline SaliencyMap random_binary_map(std::size_t h, std::size_t w, Rng& rng, double p = 0.5) {
  std::bernoulli_distribution b(p);
  std::vector<double> v(h * w);
  for (double& e : v) e = b(rng) ? 1.0 : 0.0;
  return SaliencyMap(h, w, std::move(v));
}

inline BinaryMask random_mask(std::size_t h, std::size_t w, Rng& rng, double p = 0.5) {
  std::bernoulli_distribution b(p);
  std::vector<bool> bits(h * w);
  for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = b(rng);
  return BinaryMask(h, w, std::move(bits));
}

}  // namespace samba::test
