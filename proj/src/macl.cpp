#include "samba/macl.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "json.hpp"

#include "samba/random.hpp"

namespace samba {

std::string_view to_string(StageClass c) {
  switch (c) {
    case StageClass::rgb_only:
      return "rgb-only";
    case StageClass::dual:
      return "dual";
    case StageClass::tri:
      return "tri";
  }
  return "?";
}

std::string_view to_string(SourceTag t) {
  switch (t) {
    case SourceTag::fresh:
      return "new";
    case SourceTag::replay_rgb:
      return "replay:rgb";
    case SourceTag::replay_dual:
      return "replay:dual";
  }
  return "?";
}

void DatasetManifest::validate() const {
  if (id.empty()) throw PlanError("manifest has an empty id");
  if (size == 0) throw PlanError("manifest '" + id + "' has size 0");
  if (std::find(modalities.begin(), modalities.end(), Modality::rgb) == modalities.end()) {
    throw PlanError("manifest '" + id + "' does not include rgb");
  }
  const std::set<Modality> distinct(modalities.begin(), modalities.end());
  if (distinct.size() != modalities.size()) {
    throw PlanError("manifest '" + id + "' lists a modality twice");
  }
  if (modalities.size() > 3) {
    throw PlanError("manifest '" + id + "' has " + std::to_string(modalities.size()) +
                    " modalities; at most rgb plus two auxiliaries are supported");
  }
}

StageClass DatasetManifest::stage_class() const {
  validate();
  switch (modalities.size()) {
    case 1:
      return StageClass::rgb_only;
    case 2:
      return StageClass::dual;
    default:
      return StageClass::tri;
  }
}

std::size_t SamplePool::total() const {
  std::size_t n = 0;
  for (const auto& s : segments) n += s.size;
  return n;
}

SampleRef SamplePool::at(std::size_t k) const {
  for (const auto& s : segments) {
    if (k < s.size) return {s.id, k};
    k -= s.size;
  }
  throw std::out_of_range("sample index beyond pool '" + name + "'");
}

std::vector<SampleRef> SamplePool::enumerate() const {
  std::vector<SampleRef> out;
  out.reserve(total());
  for (const auto& s : segments) {
    for (std::size_t i = 0; i < s.size; ++i) out.push_back({s.id, i});
  }
  return out;
}

const SamplePool& RehearsalBuffer::pool(StageClass c) const {
  if (c == StageClass::rgb_only) return rgb_only;
  if (c == StageClass::dual) return dual;
  throw PlanError("tri-modal data is never replayed");
}

double StageRecord::replay_rate_sum() const {
  double s = 0.0;
  for (const auto& r : replay) s += r.rate;
  return s;
}

std::vector<std::string> StageRecord::eligible() const {
  std::vector<std::string> ids;
  for (const auto& s : fresh.segments) ids.push_back(s.id);
  return ids;
}

const StageRecord& SchedulePlan::stage(int s) const {
  if (s < 1 || s > 3) throw PlanError("stage must be 1, 2 or 3, got " + std::to_string(s));
  return stages[static_cast<std::size_t>(s - 1)];
}

SchedulePlan build_stage_plan(const std::vector<DatasetManifest>& manifests,
                              const ReplayRates& rates,
                              const std::array<std::optional<std::size_t>, 3>& epochs) {
  for (double r : {rates.stage2_rgb, rates.stage3_rgb, rates.stage3_dual}) {
    if (!(r >= 0.0 && r <= 1.0)) throw PlanError("replay rate outside [0,1]");
  }
  if (rates.stage3_rgb + rates.stage3_dual > 1.0) {
    throw PlanError("stage 3 replay rates sum above 1");
  }
  std::set<std::string> ids;
  for (const auto& m : manifests) {
    m.validate();
    if (!ids.insert(m.id).second) throw PlanError("duplicate manifest id '" + m.id + "'");
  }

  SchedulePlan plan;
  const std::array<std::string, 3> names{"stage1:rgb-only", "stage2:dual", "stage3:tri"};
  for (std::size_t s = 0; s < 3; ++s) {
    plan.stages[s].stage = static_cast<int>(s + 1);
    plan.stages[s].fresh.name = names[s];
    plan.stages[s].epochs = epochs[s];
  }
  for (const auto& m : manifests) {
    const auto cls = m.stage_class();
    plan.stages[static_cast<std::size_t>(cls)].fresh.segments.push_back({m.id, m.size});
    if (cls == StageClass::rgb_only) plan.buffer.rgb_only.segments.push_back({m.id, m.size});
    if (cls == StageClass::dual) plan.buffer.dual.segments.push_back({m.id, m.size});
  }
  if (plan.stages[0].fresh.empty()) {
    throw PlanError("the roster has no rgb-only manifest to anchor stage 1");
  }
  plan.stages[1].replay = {{StageClass::rgb_only, rates.stage2_rgb}};
  plan.stages[2].replay = {{StageClass::rgb_only, rates.stage3_rgb},
                           {StageClass::dual, rates.stage3_dual}};
  return plan;
}

SourceTag replay_tag(StageClass c) {
  return c == StageClass::rgb_only ? SourceTag::replay_rgb : SourceTag::replay_dual;
}

namespace {

const SamplePool& pool_for(const SchedulePlan& plan, const StageRecord& record, SourceTag tag) {
  if (tag == SourceTag::fresh) return record.fresh;
  return plan.buffer.pool(tag == SourceTag::replay_rgb ? StageClass::rgb_only : StageClass::dual);
}

}  // namespace

std::vector<Draw> sample_batch(const SchedulePlan& plan, int stage, std::size_t batch,
                               std::uint64_t seed, MixMode mode) {
  const auto& record = plan.stage(stage);
  const double fresh_rate = 1.0 - record.replay_rate_sum();

  if (fresh_rate > 0.0 && record.fresh.empty()) {
    throw SamplingError("stage " + std::to_string(stage) + ": pool '" + record.fresh.name +
                        "' is empty");
  }
  for (const auto& r : record.replay) {
    const auto& pool = plan.buffer.pool(r.source);
    if (r.rate > 0.0 && pool.empty()) {
      throw SamplingError("stage " + std::to_string(stage) + ": pool '" + pool.name +
                          "' is empty");
    }
  }

  Rng rng(seed);
  std::vector<SourceTag> sources(batch, SourceTag::fresh);
  if (mode == MixMode::bernoulli) {
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    for (auto& src : sources) {
      const double u = coin(rng);
      double edge = 0.0;
      for (const auto& r : record.replay) {
        edge += r.rate;
        if (u < edge) {
          src = replay_tag(r.source);
          break;
        }
      }
    }
  } else {
    std::size_t next = 0;
    for (const auto& r : record.replay) {
      const auto count = static_cast<std::size_t>(std::llround(r.rate * static_cast<double>(batch)));
      for (std::size_t i = 0; i < count && next < batch; ++i) sources[next++] = replay_tag(r.source);
    }
    std::shuffle(sources.begin(), sources.end(), rng);
  }

  std::vector<Draw> draws;
  draws.reserve(batch);
  for (const auto src : sources) {
    const auto& pool = pool_for(plan, record, src);
    if (pool.empty()) {
      throw SamplingError("stage " + std::to_string(stage) + ": pool '" + pool.name + "' is empty");
    }
    std::uniform_int_distribution<std::size_t> pick(0, pool.total() - 1);
    draws.push_back({pool.at(pick(rng)), src});
  }
  return draws;
}

std::size_t rq_interval(const std::vector<double>& edges, double value) {
  if (edges.size() < 2) throw ParameterError("rq interval needs at least two edges");
  const auto inner_begin = edges.begin() + 1;
  const auto inner_end = edges.end() - 1;
  return static_cast<std::size_t>(std::upper_bound(inner_begin, inner_end, value) - inner_begin);
}

template <typename T>
RqResult<T> randomized_quantization_detailed(const Tensor<T>& x, const BinaryMask& mask,
                                             const RqOptions& options, std::uint64_t seed) {
  expect_rank(x, 3, "rq input");
  if (options.bins < 2) {
    throw ParameterError("randomized quantization needs bins >= 2, got " + std::to_string(options.bins));
  }
  if (!(options.epsilon >= 0.0)) throw ParameterError("randomized quantization needs epsilon >= 0");
  if (mask.height() != x.extent(0) || mask.width() != x.extent(1)) {
    throw DimensionError("rq mask is " + std::to_string(mask.height()) + "x" +
                         std::to_string(mask.width()) + " but input is " + shape_to_string(x.shape()));
  }
  const std::size_t c = x.extent(2);
  const std::size_t pixels = x.extent(0) * x.extent(1);
  const std::size_t bins = options.bins;
  Rng rng(seed);

  RqResult<T> result{x, std::vector<std::vector<double>>(c), std::vector<std::vector<double>>(c)};
  for (std::size_t ch = 0; ch < c; ++ch) {
    double lo = static_cast<double>(x[ch]);
    double hi = lo;
    for (std::size_t p = 0; p < pixels; ++p) {
      lo = std::min(lo, static_cast<double>(x[p * c + ch]));
      hi = std::max(hi, static_cast<double>(x[p * c + ch]));
    }
    auto& edges = result.edges[ch];
    auto& levels = result.levels[ch];
    edges.assign(bins + 1, lo);
    edges.back() = hi;
    levels.resize(bins);
    if (options.jitter) {
      std::uniform_real_distribution<double> inner(lo, hi);
      for (std::size_t k = 1; k < bins; ++k) edges[k] = inner(rng);
      std::sort(edges.begin() + 1, edges.end() - 1);
      for (std::size_t k = 0; k < bins; ++k) {
        levels[k] = std::uniform_real_distribution<double>(edges[k], edges[k + 1])(rng);
      }
    } else {
      for (std::size_t k = 1; k < bins; ++k) {
        edges[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(bins);
      }
      for (std::size_t k = 0; k < bins; ++k) levels[k] = 0.5 * (edges[k] + edges[k + 1]);
    }
    if (lo == hi) continue;  // a constant channel has nothing to quantize

    for (std::size_t p = 0; p < pixels; ++p) {
      const double v = static_cast<double>(x[p * c + ch]);
      double out = levels[rq_interval(edges, v)];
      if (mask[p]) out = std::clamp(out, v - options.epsilon, v + options.epsilon);
      result.output[p * c + ch] = static_cast<T>(out);
    }
  }
  // Rounding to T must not break the clamp on masked pixels.
  for (std::size_t p = 0; p < pixels; ++p) {
    if (!mask[p]) continue;
    for (std::size_t ch = 0; ch < c; ++ch) {
      const T v = x[p * c + ch];
      T& out = result.output[p * c + ch];
      const auto eps = options.epsilon;
      if (static_cast<double>(out) - static_cast<double>(v) > eps) out = std::nextafter(out, v);
      if (static_cast<double>(v) - static_cast<double>(out) > eps) out = std::nextafter(out, v);
    }
  }
  return result;
}

template RqResult<float> randomized_quantization_detailed(const Tensor<float>&, const BinaryMask&,
                                                          const RqOptions&, std::uint64_t);
template RqResult<double> randomized_quantization_detailed(const Tensor<double>&, const BinaryMask&,
                                                           const RqOptions&, std::uint64_t);

// JSON --------------------------------------------------------------------------

namespace {

using nlohmann::json;

[[noreturn]] void schema_fail(const std::string& path, const std::string& what) {
  throw SchemaError(path + ": " + what);
}

}  // namespace

std::vector<DatasetManifest> parse_manifests_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    schema_fail("$", std::string("invalid JSON (") + e.what() + ")");
  }
  if (!doc.is_array()) schema_fail("$", "expected an array of manifests");
  std::vector<DatasetManifest> out;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const std::string at = "$[" + std::to_string(i) + "]";
    const auto& item = doc[i];
    if (!item.is_object()) schema_fail(at, "expected an object");
    DatasetManifest m;

    if (!item.contains("id")) schema_fail(at + ".id", "missing");
    if (!item["id"].is_string()) schema_fail(at + ".id", "expected a string");
    m.id = item["id"].get<std::string>();
    if (m.id.empty()) schema_fail(at + ".id", "must not be empty");

    if (!item.contains("modalities")) schema_fail(at + ".modalities", "missing");
    const auto& mods = item["modalities"];
    if (!mods.is_array()) schema_fail(at + ".modalities", "expected an array");
    for (std::size_t k = 0; k < mods.size(); ++k) {
      const std::string mat = at + ".modalities[" + std::to_string(k) + "]";
      if (!mods[k].is_string()) schema_fail(mat, "expected a string");
      const auto name = mods[k].get<std::string>();
      const auto mod = parse_modality(name);
      if (!mod) schema_fail(mat, "unknown modality '" + name + "'");
      m.modalities.push_back(*mod);
    }

    if (!item.contains("size")) schema_fail(at + ".size", "missing");
    const auto& size = item["size"];
    if (!size.is_number_integer() || size.get<long long>() < 1) {
      schema_fail(at + ".size", "expected a positive integer");
    }
    m.size = size.get<std::size_t>();

    try {
      m.validate();
    } catch (const PlanError& e) {
      schema_fail(at + ".modalities", e.what());
    }
    out.push_back(std::move(m));
  }
  return out;
}

std::string plan_to_json(const SchedulePlan& plan, int indent) {
  json doc;
  doc["stages"] = json::array();
  for (const auto& s : plan.stages) {
    json stage;
    stage["stage"] = s.stage;
    stage["pool"] = s.fresh.name;
    stage["eligible"] = json::array();
    for (const auto& seg : s.fresh.segments) {
      stage["eligible"].push_back({{"id", seg.id}, {"size", seg.size}});
    }
    stage["new_samples"] = s.fresh.total();
    stage["replay"] = json::array();
    for (const auto& r : s.replay) {
      const auto& pool = plan.buffer.pool(r.source);
      stage["replay"].push_back({{"source", std::string(to_string(r.source))},
                                 {"rate", r.rate},
                                 {"pool_samples", pool.total()}});
    }
    stage["new_rate"] = 1.0 - s.replay_rate_sum();
    stage["epochs"] = s.epochs ? json(*s.epochs) : json(nullptr);
    doc["stages"].push_back(std::move(stage));
  }
  return doc.dump(indent);
}

}  // namespace samba
