#pragma once

// Three-stage modality-anchored schedule: dataset manifests, per-stage sample pools,
// seeded replay sampling and mask-constrained randomized quantization.

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "samba/modality.hpp"
#include "samba/scan_order.hpp"
#include "samba/tensor.hpp"

namespace samba {

/// Invalid manifest roster or stage plan.
class PlanError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A sampling request that needs a pool with no samples in it.
class SamplingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Manifest JSON that violates the schema; the message starts with the field path.
class SchemaError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class StageClass : std::uint8_t { rgb_only, dual, tri };

std::string_view to_string(StageClass c);

struct DatasetManifest {
  std::string id;
  std::vector<Modality> modalities;
  std::size_t size = 0;

  /// Throws PlanError unless rgb is present, modalities are distinct, there are at most
  /// three of them and size >= 1.
  void validate() const;
  [[nodiscard]] StageClass stage_class() const;
};

struct SampleRef {
  std::string id;
  std::size_t index = 0;
  friend bool operator==(const SampleRef&, const SampleRef&) = default;
};

/// Concatenation of whole datasets; sample k of the pool maps to (dataset, local index).
struct SamplePool {
  struct Segment {
    std::string id;
    std::size_t size = 0;
  };
  std::string name;
  std::vector<Segment> segments;

  [[nodiscard]] std::size_t total() const;
  [[nodiscard]] bool empty() const { return total() == 0; }
  [[nodiscard]] SampleRef at(std::size_t k) const;
  /// Every sample identity, in pool order.
  [[nodiscard]] std::vector<SampleRef> enumerate() const;
};

/// Prior-stage sample identities grouped by stage class.
struct RehearsalBuffer {
  SamplePool rgb_only{"replay:rgb", {}};
  SamplePool dual{"replay:dual", {}};

  [[nodiscard]] const SamplePool& pool(StageClass c) const;
};

struct ReplaySource {
  StageClass source = StageClass::rgb_only;
  double rate = 0.0;
};

struct StageRecord {
  int stage = 1;
  SamplePool fresh;  // the stage's own new data
  std::vector<ReplaySource> replay;
  std::optional<std::size_t> epochs;

  [[nodiscard]] double replay_rate_sum() const;
  [[nodiscard]] std::vector<std::string> eligible() const;
};

struct ReplayRates {
  double stage2_rgb = 0.10;
  double stage3_rgb = 0.10;
  double stage3_dual = 0.30;
};

struct SchedulePlan {
  std::array<StageRecord, 3> stages;
  RehearsalBuffer buffer;

  [[nodiscard]] const StageRecord& stage(int s) const;
};

/// Stage 1 trains on rgb-only sets, stage 2 on dual sets with rgb replay, stage 3 on
/// tri-modal sets with rgb and dual replay. Throws PlanError without an rgb-only manifest.
SchedulePlan build_stage_plan(const std::vector<DatasetManifest>& manifests,
                              const ReplayRates& rates = {},
                              const std::array<std::optional<std::size_t>, 3>& epochs = {});

enum class SourceTag : std::uint8_t { fresh, replay_rgb, replay_dual };

std::string_view to_string(SourceTag t);

/// Tag of draws replayed from the given class.
SourceTag replay_tag(StageClass c);

struct Draw {
  SampleRef sample;
  SourceTag source = SourceTag::fresh;
  friend bool operator==(const Draw&, const Draw&) = default;
};

enum class MixMode : std::uint8_t {
  bernoulli,    // each slot picks its source independently with the replay rates
  exact_count,  // round(rate * batch) slots per replay source, shuffled
};

/// Seeded batch of `batch` draws from the given stage. Throws SamplingError if a source
/// with a positive share has an empty pool.
std::vector<Draw> sample_batch(const SchedulePlan& plan, int stage, std::size_t batch,
                               std::uint64_t seed, MixMode mode = MixMode::bernoulli);

// Randomized quantization ------------------------------------------------------

struct RqOptions {
  std::size_t bins = 8;
  double epsilon = 0.1;
  bool jitter = true;  // false: evenly spaced intervals mapped to their midpoints
};

template <typename T>
struct RqResult {
  Tensor<T> output;
  std::vector<std::vector<double>> edges;   // per channel, bins + 1 ascending edges
  std::vector<std::vector<double>> levels;  // per channel, one output value per interval
};

/// Per channel: random interval edges over [min, max], each value mapped to its
/// interval's random level; mask-true pixels are then clamped to within epsilon of the
/// input.
template <typename T>
RqResult<T> randomized_quantization_detailed(const Tensor<T>& x, const BinaryMask& mask,
                                             const RqOptions& options, std::uint64_t seed);

template <typename T>
Tensor<T> randomized_quantization(const Tensor<T>& x, const BinaryMask& mask,
                                  const RqOptions& options, std::uint64_t seed) {
  return randomized_quantization_detailed(x, mask, options, seed).output;
}

/// Interval of `value` given ascending edges: k with edges[k] <= value < edges[k+1], the
/// last interval closed on the right.
std::size_t rq_interval(const std::vector<double>& edges, double value);

// JSON --------------------------------------------------------------------------

/// Parses an array of {id, modalities[], size}. Throws SchemaError naming the field path.
std::vector<DatasetManifest> parse_manifests_json(std::string_view text);

std::string plan_to_json(const SchedulePlan& plan, int indent = 2);

}  // namespace samba
