#include "samba/ssm.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "samba/ops.hpp"

namespace samba {

namespace {

// (e^z - 1) / z, switching to its Taylor series near the removable singularity.
double zoh_input_factor(double z) {
  if (std::abs(z) < kZohSeriesThreshold) return 1.0 + z / 2.0 + z * z / 6.0;
  return std::expm1(z) / z;
}

template <typename T>
void check_recurrence_shapes(const DiscreteSsm<T>& ssm, const Tensor<T>& x, const Tensor<T>& h0) {
  expect_rank(ssm.a_bar, 3, "Abar");
  const std::size_t len = ssm.length();
  const std::size_t ch = ssm.channels();
  const std::size_t ns = ssm.state_size();
  expect_shape(ssm.b_bar, {len, ch, ns}, "Bbar");
  expect_shape(ssm.c, {len, ns}, "C");
  expect_shape(ssm.d_skip, {ch}, "Dskip");
  expect_shape(x, {len, ch}, "ssm input");
  if (!h0.empty()) expect_shape(h0, {ch, ns}, "h0");
}

template <typename T>
T initial_state(const Tensor<T>& h0, std::size_t d, std::size_t n) {
  return h0.empty() ? T{0} : h0(d, n);
}

// Runs `fn(begin, end)` over [0, count) split into at most `threads` chunks.
template <typename Fn>
void parallel_chunks(std::size_t count, unsigned threads, Fn&& fn) {
  const std::size_t workers = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(count, 1));
  if (workers == 1) {
    fn(std::size_t{0}, count);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (count + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
}

// In-place exclusive Blelloch scan over a power-of-two buffer.
template <typename T>
void blelloch_exclusive(std::vector<ScanElement<T>>& buf) {
  const std::size_t n = buf.size();
  for (std::size_t stride = 1; stride < n; stride *= 2) {
    for (std::size_t i = 2 * stride - 1; i < n; i += 2 * stride) {
      buf[i] = combine(buf[i - stride], buf[i]);
    }
  }
  buf[n - 1] = ScanElement<T>{};
  for (std::size_t stride = n / 2; stride >= 1; stride /= 2) {
    for (std::size_t i = 2 * stride - 1; i < n; i += 2 * stride) {
      const ScanElement<T> left = buf[i - stride];
      buf[i - stride] = buf[i];
      buf[i] = combine(buf[i], left);
    }
  }
}

}  // namespace

template <typename T>
std::pair<Tensor<T>, Tensor<T>> zoh_discretize(const Tensor<T>& a, const Tensor<T>& b,
                                               const Tensor<T>& delta) {
  expect_rank(a, 2, "A");
  expect_rank(delta, 2, "delta");
  const std::size_t ch = a.extent(0);
  const std::size_t ns = a.extent(1);
  const std::size_t len = delta.extent(0);
  if (delta.extent(1) != ch) {
    throw DimensionError("delta has " + std::to_string(delta.extent(1)) + " channels, A has " +
                         std::to_string(ch));
  }
  const bool per_step = b.rank() == 2;
  if (per_step) {
    expect_shape(b, {len, ns}, "per-step B");
  } else {
    expect_shape(b, {ns}, "static B");
  }
  for (T v : delta.data()) {
    if (!(v > T{0})) throw ParameterError("delta must be strictly positive, got " + std::to_string(v));
  }

  Tensor<T> a_bar({len, ch, ns});
  Tensor<T> b_bar({len, ch, ns});
  for (std::size_t k = 0; k < len; ++k) {
    for (std::size_t d = 0; d < ch; ++d) {
      const double dt = delta(k, d);
      for (std::size_t n = 0; n < ns; ++n) {
        const double z = dt * static_cast<double>(a(d, n));
        const double bn = per_step ? b(k, n) : b(n);
        a_bar(k, d, n) = static_cast<T>(std::exp(z));
        b_bar(k, d, n) = static_cast<T>(zoh_input_factor(z) * dt * bn);
      }
    }
  }
  return {std::move(a_bar), std::move(b_bar)};
}

template <typename T>
DiscreteSsm<T> discretize(const SsmParams<T>& params) {
  auto [a_bar, b_bar] = zoh_discretize(params.a, params.b, params.delta);
  const std::size_t len = params.delta.extent(0);
  const std::size_t ns = params.a.extent(1);
  Tensor<T> c({len, ns});
  if (params.c.rank() == 2) {
    expect_shape(params.c, {len, ns}, "per-step C");
    c = params.c;
  } else {
    expect_shape(params.c, {ns}, "static C");
    for (std::size_t k = 0; k < len; ++k) std::copy(params.c.data().begin(), params.c.data().end(), c.row(k).begin());
  }
  return {std::move(a_bar), std::move(b_bar), std::move(c), params.d_skip};
}

template <typename T>
SsmOutput<T> ssm_recurrence_seq(const DiscreteSsm<T>& ssm, const Tensor<T>& x, const Tensor<T>& h0) {
  check_recurrence_shapes(ssm, x, h0);
  const std::size_t len = ssm.length();
  const std::size_t ch = ssm.channels();
  const std::size_t ns = ssm.state_size();

  Tensor<T> h = h0.empty() ? Tensor<T>({ch, ns}) : h0;
  Tensor<T> y({len, ch});
  for (std::size_t k = 0; k < len; ++k) {
    for (std::size_t d = 0; d < ch; ++d) {
      const T xk = x(k, d);
      T acc{0};
      for (std::size_t n = 0; n < ns; ++n) {
        T& state = h(d, n);
        state = ssm.a_bar(k, d, n) * state + ssm.b_bar(k, d, n) * xk;
        acc += ssm.c(k, n) * state;
      }
      y(k, d) = acc + ssm.d_skip(d) * xk;
    }
  }
  return {std::move(y), std::move(h)};
}

template <typename T>
SsmOutput<T> ssm_parallel_scan(const DiscreteSsm<T>& ssm, const Tensor<T>& x, const Tensor<T>& h0,
                               unsigned threads) {
  check_recurrence_shapes(ssm, x, h0);
  const std::size_t len = ssm.length();
  const std::size_t ch = ssm.channels();
  const std::size_t ns = ssm.state_size();
  const std::size_t padded = std::bit_ceil(len);

  Tensor<T> y({len, ch});
  Tensor<T> h_final({ch, ns});

  // Each worker owns a block of channels, so writes to y never overlap.
  parallel_chunks(ch, threads, [&](std::size_t d_begin, std::size_t d_end) {
    std::vector<ScanElement<T>> elems(len);
    std::vector<ScanElement<T>> buf(padded);
    std::vector<T> acc(len);
    for (std::size_t d = d_begin; d < d_end; ++d) {
      std::fill(acc.begin(), acc.end(), T{0});
      for (std::size_t n = 0; n < ns; ++n) {
        for (std::size_t k = 0; k < len; ++k) {
          elems[k] = {ssm.a_bar(k, d, n), ssm.b_bar(k, d, n) * x(k, d)};
        }
        // Fold the initial state into the first element: h_0 = a_0 * h0 + b_0.
        elems[0].b += elems[0].a * initial_state(h0, d, n);
        elems[0].a = T{0};

        std::copy(elems.begin(), elems.end(), buf.begin());
        std::fill(buf.begin() + static_cast<std::ptrdiff_t>(len), buf.end(), ScanElement<T>{});
        blelloch_exclusive(buf);

        for (std::size_t k = 0; k < len; ++k) {
          const T state = combine(buf[k], elems[k]).b;
          acc[k] += ssm.c(k, n) * state;
          if (k + 1 == len) h_final(d, n) = state;
        }
      }
      // Same summation order as the recurrence: states first, then the skip term.
      for (std::size_t k = 0; k < len; ++k) y(k, d) = acc[k] + ssm.d_skip(d) * x(k, d);
    }
  });
  return {std::move(y), std::move(h_final)};
}

template <typename T>
SsmGradients<T> ssm_backward(const DiscreteSsm<T>& ssm, const Tensor<T>& x, const Tensor<T>& h0,
                             const Tensor<T>& dy) {
  check_recurrence_shapes(ssm, x, h0);
  const std::size_t len = ssm.length();
  const std::size_t ch = ssm.channels();
  const std::size_t ns = ssm.state_size();
  expect_shape(dy, {len, ch}, "dy");

  // Forward pass keeping every state: states[k] = h_k, states[-1] = h0.
  Tensor<T> states({len + 1, ch, ns});
  for (std::size_t d = 0; d < ch; ++d) {
    for (std::size_t n = 0; n < ns; ++n) states(0, d, n) = initial_state(h0, d, n);
  }
  for (std::size_t k = 0; k < len; ++k) {
    for (std::size_t d = 0; d < ch; ++d) {
      for (std::size_t n = 0; n < ns; ++n) {
        states(k + 1, d, n) = ssm.a_bar(k, d, n) * states(k, d, n) + ssm.b_bar(k, d, n) * x(k, d);
      }
    }
  }

  SsmGradients<T> g{Tensor<T>({len, ch}),     Tensor<T>({len, ch, ns}), Tensor<T>({len, ch, ns}),
                    Tensor<T>({len, ns}),     Tensor<T>({ch}),          Tensor<T>({ch, ns})};
  // carry[d,n] = dL/dh_k, accumulated backwards in time.
  Tensor<T> carry({ch, ns});
  for (std::size_t step = len; step-- > 0;) {
    for (std::size_t d = 0; d < ch; ++d) {
      const T gy = dy(step, d);
      const T xk = x(step, d);
      g.d_d_skip(d) += gy * xk;
      T dx = ssm.d_skip(d) * gy;
      for (std::size_t n = 0; n < ns; ++n) {
        T& gh = carry(d, n);
        if (step + 1 < len) gh *= ssm.a_bar(step + 1, d, n);
        gh += ssm.c(step, n) * gy;
        g.d_c(step, n) += gy * states(step + 1, d, n);
        g.d_a_bar(step, d, n) = gh * states(step, d, n);
        g.d_b_bar(step, d, n) = gh * xk;
        dx += gh * ssm.b_bar(step, d, n);
      }
      g.dx(step, d) = dx;
    }
  }
  for (std::size_t d = 0; d < ch; ++d) {
    for (std::size_t n = 0; n < ns; ++n) g.d_h0(d, n) = ssm.a_bar(0, d, n) * carry(d, n);
  }
  return g;
}

template <typename T>
SsmParams<T> s6_project(const Tensor<T>& x, const Tensor<T>& a, const Tensor<T>& d_skip,
                        const S6Projection<T>& proj) {
  expect_rank(x, 2, "s6 input");
  const std::size_t ch = x.extent(1);
  const std::size_t ns = a.extent(1);
  expect_shape(a, {ch, ns}, "A");
  expect_shape(proj.w_b, {ch, ns}, "W_B");
  expect_shape(proj.w_c, {ch, ns}, "W_C");
  expect_shape(proj.w_delta, {ch, ch}, "W_delta");

  Tensor<T> zero_n({ns});
  auto delta = linear_map(x, proj.w_delta, proj.b_delta);
  for (T& v : delta.data()) v = softplus(v);
  // softplus underflows to exactly 0 for very negative pre-activations.
  for (T& v : delta.data()) v = std::max(v, std::numeric_limits<T>::min());
  return {a, linear_map(x, proj.w_b, zero_n), linear_map(x, proj.w_c, zero_n), d_skip,
          std::move(delta)};
}

template <typename T>
Tensor<T> s6_forward(const Tensor<T>& x, const S6Weights<T>& weights, ScanOptions options) {
  const auto params = s6_project(x, weights.a, weights.d_skip, weights.proj);
  const auto ssm = discretize(params);
  if (options.mode == ScanMode::parallel) {
    return ssm_parallel_scan(ssm, x, {}, options.threads).y;
  }
  return ssm_recurrence_seq(ssm, x).y;
}

template <typename T>
S6Weights<T> random_s6_weights(std::size_t channels, std::size_t state_size, Rng& rng,
                               double scale) {
  S6Weights<T> w;
  w.a = random_uniform<T>({channels, state_size}, -2.0, -0.5, rng);
  w.d_skip = random_uniform<T>({channels}, -1.0, 1.0, rng);
  const double s = scale / std::sqrt(static_cast<double>(channels));
  w.proj.w_b = random_normal<T>({channels, state_size}, s, rng);
  w.proj.w_c = random_normal<T>({channels, state_size}, s, rng);
  w.proj.w_delta = random_normal<T>({channels, channels}, s, rng);
  w.proj.b_delta = Tensor<T>({channels});
  std::uniform_real_distribution<double> dt(0.01, 0.2);
  for (T& v : w.proj.b_delta.data()) v = static_cast<T>(std::log(std::expm1(dt(rng))));
  return w;
}

template <typename T>
S6Weights<T> zero_s6_weights(std::size_t channels, std::size_t state_size) {
  S6Weights<T> w;
  w.a = Tensor<T>({channels, state_size}, T{-1});
  w.d_skip = Tensor<T>({channels});
  w.proj = {Tensor<T>({channels, state_size}), Tensor<T>({channels, state_size}),
            Tensor<T>({channels, channels}), Tensor<T>({channels})};
  return w;
}

#define SAMBA_INSTANTIATE_SSM(T)                                                                  \
  template std::pair<Tensor<T>, Tensor<T>> zoh_discretize(const Tensor<T>&, const Tensor<T>&,     \
                                                          const Tensor<T>&);                      \
  template DiscreteSsm<T> discretize(const SsmParams<T>&);                                        \
  template SsmOutput<T> ssm_recurrence_seq(const DiscreteSsm<T>&, const Tensor<T>&,               \
                                           const Tensor<T>&);                                     \
  template SsmOutput<T> ssm_parallel_scan(const DiscreteSsm<T>&, const Tensor<T>&,                \
                                          const Tensor<T>&, unsigned);                            \
  template SsmGradients<T> ssm_backward(const DiscreteSsm<T>&, const Tensor<T>&,                  \
                                        const Tensor<T>&, const Tensor<T>&);                      \
  template SsmParams<T> s6_project(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,          \
                                   const S6Projection<T>&);                                       \
  template Tensor<T> s6_forward(const Tensor<T>&, const S6Weights<T>&, ScanOptions);              \
  template S6Weights<T> random_s6_weights(std::size_t, std::size_t, Rng&, double);                \
  template S6Weights<T> zero_s6_weights(std::size_t, std::size_t);

SAMBA_INSTANTIATE_SSM(float)
SAMBA_INSTANTIATE_SSM(double)

#undef SAMBA_INSTANTIATE_SSM

}  // namespace samba
