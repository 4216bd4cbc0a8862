#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "samba/ssm.hpp"

namespace samba {

struct GradcheckRow {
  std::string parameter;
  double relative_error = 0.0;
  bool passed = false;
};

struct GradcheckConfig {
  std::size_t length = 32;
  std::size_t channels = 4;
  std::size_t state_size = 8;
  double step = 1e-6;
  double tolerance = 1e-4;
  bool zero_cotangent = false;
  /// Test hook: perturbs the analytic gradient of this parameter before comparing.
  std::string corrupt;
};

/// ||analytic - numeric|| / max(||analytic||, ||numeric||), with 0/0 taken as 0.
double relative_error(std::span<const double> analytic, std::span<const double> numeric);

/// Central-difference check of ssm_backward on a random 64-bit instance drawn from `seed`.
/// Reports one row per gradient: dx, dAbar, dBbar, dC, dDskip, dh0.
std::vector<GradcheckRow> gradcheck_ssm(std::uint64_t seed, const GradcheckConfig& config = {});

/// Random discretized instance with Abar in (0,1), used by the gradient check and benchmarks.
template <typename T>
DiscreteSsm<T> random_discrete_ssm(std::size_t length, std::size_t channels,
                                   std::size_t state_size, Rng& rng);

}  // namespace samba
