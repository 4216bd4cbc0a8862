#include "samba/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace samba {

namespace {

double objective(const DiscreteSsm<double>& ssm, const TensorD& x, const TensorD& h0,
                 const TensorD& dy) {
  const auto out = ssm_recurrence_seq(ssm, x, h0);
  double total = 0.0;
  for (std::size_t i = 0; i < dy.size(); ++i) total += dy[i] * out.y[i];
  return total;
}

// Central differences of the objective with respect to every entry of `target`.
TensorD numeric_gradient(TensorD& target, double step, const std::function<double()>& f) {
  TensorD grad(target.shape());
  for (std::size_t i = 0; i < target.size(); ++i) {
    const double saved = target[i];
    target[i] = saved + step;
    const double up = f();
    target[i] = saved - step;
    const double down = f();
    target[i] = saved;
    grad[i] = (up - down) / (2.0 * step);
  }
  return grad;
}

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double e : v) s += e * e;
  return std::sqrt(s);
}

}  // namespace

double relative_error(std::span<const double> analytic, std::span<const double> numeric) {
  double diff = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double d = analytic[i] - numeric[i];
    diff += d * d;
  }
  const double scale = std::max(norm(analytic), norm(numeric));
  if (scale == 0.0) return 0.0;
  return std::sqrt(diff) / scale;
}

template <typename T>
DiscreteSsm<T> random_discrete_ssm(std::size_t length, std::size_t channels,
                                   std::size_t state_size, Rng& rng) {
  SsmParams<T> p;
  p.a = random_uniform<T>({channels, state_size}, -2.0, -0.5, rng);
  p.b = random_normal<T>({length, state_size}, 1.0, rng);
  p.c = random_normal<T>({length, state_size}, 1.0, rng);
  p.d_skip = random_uniform<T>({channels}, -1.0, 1.0, rng);
  p.delta = random_uniform<T>({length, channels}, 0.01, 0.5, rng);
  return discretize(p);
}

template DiscreteSsm<float> random_discrete_ssm(std::size_t, std::size_t, std::size_t, Rng&);
template DiscreteSsm<double> random_discrete_ssm(std::size_t, std::size_t, std::size_t, Rng&);

std::vector<GradcheckRow> gradcheck_ssm(std::uint64_t seed, const GradcheckConfig& config) {
  Rng rng(seed);
  auto ssm = random_discrete_ssm<double>(config.length, config.channels, config.state_size, rng);
  auto x = random_normal<double>({config.length, config.channels}, 1.0, rng);
  auto h0 = random_normal<double>({config.channels, config.state_size}, 0.5, rng);
  auto dy = random_normal<double>({config.length, config.channels}, 1.0, rng);
  if (config.zero_cotangent) dy = TensorD(dy.shape());

  auto analytic = ssm_backward(ssm, x, h0, dy);
  const auto f = [&] { return objective(ssm, x, h0, dy); };

  struct Entry {
    const char* name;
    TensorD* target;
    TensorD* grad;
  };
  const Entry entries[] = {
      {"dx", &x, &analytic.dx},          {"dAbar", &ssm.a_bar, &analytic.d_a_bar},
      {"dBbar", &ssm.b_bar, &analytic.d_b_bar}, {"dC", &ssm.c, &analytic.d_c},
      {"dDskip", &ssm.d_skip, &analytic.d_d_skip}, {"dh0", &h0, &analytic.d_h0},
  };

  std::vector<GradcheckRow> rows;
  for (const auto& e : entries) {
    if (config.corrupt == e.name) {
      for (double& v : e.grad->data()) v = v * 1.01 + 1e-3;
    }
    const auto numeric = numeric_gradient(*e.target, config.step, f);
    const double err = relative_error(e.grad->data(), numeric.data());
    rows.push_back({e.name, err, err < config.tolerance});
  }
  return rows;
}

}  // namespace samba
