#pragma once

// Selective state-space kernels with a diagonal state matrix.
//
// Every channel d carries N independent scalar states. Per step k:
//   h_k[d,n] = Abar[k,d,n] * h_{k-1}[d,n] + Bbar[k,d,n] * x[k,d]
//   y[k,d]   = sum_n C[k,n] * h_k[d,n] + Dskip[d] * x[k,d]
// with Abar = exp(delta*A) and Bbar = (exp(delta*A) - 1) / (delta*A) * delta * B.

#include <cstddef>
#include <utility>

#include "samba/random.hpp"
#include "samba/tensor.hpp"

namespace samba {

/// Continuous parameters. `b` and `c` are either static [N] or per-step [L,N].
template <typename T>
struct SsmParams {
  Tensor<T> a;       // [D,N], negative real part for stable dynamics
  Tensor<T> b;       // [N] or [L,N]
  Tensor<T> c;       // [N] or [L,N]
  Tensor<T> d_skip;  // [D]
  Tensor<T> delta;   // [L,D], strictly positive
};

/// Discretized parameters ready for the recurrence.
template <typename T>
struct DiscreteSsm {
  Tensor<T> a_bar;   // [L,D,N]
  Tensor<T> b_bar;   // [L,D,N]
  Tensor<T> c;       // [L,N]
  Tensor<T> d_skip;  // [D]

  [[nodiscard]] std::size_t length() const { return a_bar.extent(0); }
  [[nodiscard]] std::size_t channels() const { return a_bar.extent(1); }
  [[nodiscard]] std::size_t state_size() const { return a_bar.extent(2); }
};

/// One element of the associative scan: the affine map h -> a*h + b.
template <typename T>
struct ScanElement {
  T a{1};
  T b{0};
};

/// Applies `first` then `second`: (a,b) o (a',b') = (a*a', a'*b + b').
template <typename T>
constexpr ScanElement<T> combine(const ScanElement<T>& first, const ScanElement<T>& second) {
  return {first.a * second.a, second.a * first.b + second.b};
}

template <typename T>
struct SsmOutput {
  Tensor<T> y;        // [L,D]
  Tensor<T> h_final;  // [D,N]
};

/// Below this |delta*A| the (e^z - 1)/z factor is replaced by its series limit 1.
inline constexpr double kZohSeriesThreshold = 1e-6;

/// Zero-order-hold discretization of a diagonal SSM. Returns (Abar, Bbar), each [L,D,N].
template <typename T>
std::pair<Tensor<T>, Tensor<T>> zoh_discretize(const Tensor<T>& a, const Tensor<T>& b,
                                               const Tensor<T>& delta);

/// Discretizes full params and expands static C to [L,N].
template <typename T>
DiscreteSsm<T> discretize(const SsmParams<T>& params);

/// Sequential evaluation. `h0` may be empty, meaning zeros.
template <typename T>
SsmOutput<T> ssm_recurrence_seq(const DiscreteSsm<T>& ssm, const Tensor<T>& x,
                                const Tensor<T>& h0 = {});

/// Same result via an up-sweep/down-sweep (Blelloch) prefix scan per state scalar:
/// O(L) work, O(log L) depth. `threads` caps how many state channels run concurrently.
template <typename T>
SsmOutput<T> ssm_parallel_scan(const DiscreteSsm<T>& ssm, const Tensor<T>& x,
                               const Tensor<T>& h0 = {}, unsigned threads = 1);

/// Gradients of sum(dy * y) with respect to every recurrence input.
template <typename T>
struct SsmGradients {
  Tensor<T> dx;       // [L,D]
  Tensor<T> d_a_bar;  // [L,D,N]
  Tensor<T> d_b_bar;  // [L,D,N]
  Tensor<T> d_c;      // [L,N]
  Tensor<T> d_d_skip; // [D]
  Tensor<T> d_h0;     // [D,N]
};

/// Reverse-time adjoint of the recurrence.
template <typename T>
SsmGradients<T> ssm_backward(const DiscreteSsm<T>& ssm, const Tensor<T>& x, const Tensor<T>& h0,
                             const Tensor<T>& dy);

// Selective (input-dependent) parameterization --------------------------------

/// Projection weights: B_k = x_k W_b, C_k = x_k W_c, delta_k = softplus(x_k W_delta + b_delta).
template <typename T>
struct S6Projection {
  Tensor<T> w_b;      // [D,N]
  Tensor<T> w_c;      // [D,N]
  Tensor<T> w_delta;  // [D,D]
  Tensor<T> b_delta;  // [D]
};

template <typename T>
struct S6Weights {
  Tensor<T> a;       // [D,N]
  Tensor<T> d_skip;  // [D]
  S6Projection<T> proj;

  [[nodiscard]] std::size_t channels() const { return a.extent(0); }
  [[nodiscard]] std::size_t state_size() const { return a.extent(1); }
};

enum class ScanMode { sequential, parallel };

struct ScanOptions {
  ScanMode mode = ScanMode::sequential;
  unsigned threads = 1;
};

/// Per-step B [L,N], C [L,N] and delta [L,D] from the input; A and Dskip pass through.
template <typename T>
SsmParams<T> s6_project(const Tensor<T>& x, const Tensor<T>& a, const Tensor<T>& d_skip,
                        const S6Projection<T>& proj);

/// s6_project -> zoh -> scan with h0 = 0.
template <typename T>
Tensor<T> s6_forward(const Tensor<T>& x, const S6Weights<T>& weights, ScanOptions options = {});

/// Random S6 weights: A in -[0.5, 2], small projections, softplus bias near 0.1 timescale.
template <typename T>
S6Weights<T> random_s6_weights(std::size_t channels, std::size_t state_size, Rng& rng,
                               double scale = 0.3);

/// All-zero projections with the given A and Dskip.
template <typename T>
S6Weights<T> zero_s6_weights(std::size_t channels, std::size_t state_size);

}  // namespace samba
