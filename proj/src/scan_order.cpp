#include "samba/scan_order.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

namespace samba {

BinaryMask::BinaryMask(std::size_t height, std::size_t width, bool fill)
    : height_(height), width_(width), bits_(height * width, fill) {}

BinaryMask::BinaryMask(std::size_t height, std::size_t width, std::vector<bool> bits)
    : height_(height), width_(width), bits_(std::move(bits)) {
  if (bits_.size() != height * width) {
    throw DimensionError("mask has " + std::to_string(bits_.size()) + " bits for a " +
                         std::to_string(height) + "x" + std::to_string(width) + " grid");
  }
}

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), true));
}

BinaryMask binarize(const SaliencyMap& map, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ParameterError("binarize threshold must lie in (0,1)");
  }
  std::vector<bool> bits(map.size());
  for (std::size_t i = 0; i < map.size(); ++i) bits[i] = map[i] >= threshold;
  return BinaryMask(map.height(), map.width(), std::move(bits));
}

BinaryMask binarize(const SaliencyMap& map) { return binarize(map, map.threshold()); }

std::vector<std::uint32_t> sns_salient_order(const BinaryMask& mask) {
  const std::size_t h = mask.height();
  const std::size_t w = mask.width();
  std::vector<std::uint32_t> order;
  order.reserve(mask.count());

  bool left_to_right = true;
  std::optional<std::pair<std::size_t, std::size_t>> last;  // (row, col) of last emitted
  for (std::size_t r = 0; r < h; ++r) {
    std::size_t first = w;
    std::size_t final = 0;
    for (std::size_t c = 0; c < w; ++c) {
      if (mask(r, c)) {
        first = std::min(first, c);
        final = c;
      }
    }
    if (first == w) continue;

    if (last) {
      const auto dist = [&](std::size_t c) {
        const double dr = static_cast<double>(r) - static_cast<double>(last->first);
        const double dc = static_cast<double>(c) - static_cast<double>(last->second);
        return std::hypot(dr, dc);
      };
      left_to_right = dist(first) <= dist(final);
    }

    const auto emit = [&](std::size_t c) {
      if (mask(r, c)) order.push_back(static_cast<std::uint32_t>(r * w + c));
    };
    if (left_to_right) {
      for (std::size_t c = first; c <= final; ++c) emit(c);
      last = {r, final};
    } else {
      for (std::size_t c = final + 1; c-- > first;) emit(c);
      last = {r, first};
    }
  }
  return order;
}

std::string_view to_string(PathVariant v) {
  switch (v) {
    case PathVariant::salient_then_rest:
      return "salient_then_rest";
    case PathVariant::rest_then_salient:
      return "rest_then_salient";
    case PathVariant::reversed_salient_then_rest:
      return "reversed_salient_then_rest";
    case PathVariant::reversed_rest_then_salient:
      return "reversed_rest_then_salient";
  }
  return "unknown";
}

PathBundle sns_path_bundle(const BinaryMask& mask) {
  const std::size_t h = mask.height();
  const std::size_t w = mask.width();
  const auto salient = sns_salient_order(mask);
  std::vector<std::uint32_t> rest;
  rest.reserve(mask.size() - salient.size());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) rest.push_back(static_cast<std::uint32_t>(i));
  }
  const std::vector<std::uint32_t> salient_rev(salient.rbegin(), salient.rend());
  const std::vector<std::uint32_t> rest_rev(rest.rbegin(), rest.rend());

  const auto concat = [&](const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b) {
    std::vector<std::uint32_t> out(a);
    out.insert(out.end(), b.begin(), b.end());
    return ScanPath(h, w, std::move(out));
  };

  return PathBundle{
      {concat(salient, rest), concat(rest, salient), concat(salient_rev, rest_rev),
       concat(rest_rev, salient_rev)},
      {PathVariant::salient_then_rest, PathVariant::rest_then_salient,
       PathVariant::reversed_salient_then_rest, PathVariant::reversed_rest_then_salient}};
}

ScanPath raster_scan(std::size_t height, std::size_t width) {
  std::vector<std::uint32_t> order(height * width);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<std::uint32_t>(i);
  return ScanPath(height, width, std::move(order));
}

ScanPath boustrophedon_scan(std::size_t height, std::size_t width) {
  std::vector<std::uint32_t> order;
  order.reserve(height * width);
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t k = 0; k < width; ++k) {
      const std::size_t c = r % 2 == 0 ? k : width - 1 - k;
      order.push_back(static_cast<std::uint32_t>(r * width + c));
    }
  }
  return ScanPath(height, width, std::move(order));
}

ScanPath transposed_scan(std::size_t height, std::size_t width) {
  std::vector<std::uint32_t> order;
  order.reserve(height * width);
  for (std::size_t c = 0; c < width; ++c) {
    for (std::size_t r = 0; r < height; ++r) order.push_back(static_cast<std::uint32_t>(r * width + c));
  }
  return ScanPath(height, width, std::move(order));
}

namespace {

ScanPath anti_diagonal_scan(std::size_t height, std::size_t width, bool downwards) {
  std::vector<std::uint32_t> order;
  order.reserve(height * width);
  for (std::size_t s = 0; s + 1 < height + width; ++s) {
    const std::size_t r_lo = s >= width ? s - width + 1 : 0;
    const std::size_t r_hi = std::min(s, height - 1);
    for (std::size_t k = 0; k <= r_hi - r_lo; ++k) {
      const std::size_t r = downwards ? r_lo + k : r_hi - k;
      order.push_back(static_cast<std::uint32_t>(r * width + (s - r)));
    }
  }
  return ScanPath(height, width, std::move(order));
}

}  // namespace

ScanPath diagonal_scan(std::size_t height, std::size_t width) {
  return anti_diagonal_scan(height, width, true);
}

std::array<ScanPath, 4> diagonal_scan_set(std::size_t height, std::size_t width) {
  auto base = anti_diagonal_scan(height, width, true);
  auto companion = anti_diagonal_scan(height, width, false);
  auto base_rev = base.reversed();
  auto companion_rev = companion.reversed();
  return {std::move(base), std::move(base_rev), std::move(companion), std::move(companion_rev)};
}

std::array<ScanPath, 4> cross_scan_set(std::size_t height, std::size_t width) {
  auto raster = raster_scan(height, width);
  auto column = transposed_scan(height, width);
  auto raster_rev = raster.reversed();
  auto column_rev = column.reversed();
  return {std::move(raster), std::move(raster_rev), std::move(column), std::move(column_rev)};
}

ScanPath baseline_scan(BaselineScan kind, std::size_t height, std::size_t width) {
  if (height == 0 || width == 0) throw DimensionError("scan extents must be >= 1");
  switch (kind) {
    case BaselineScan::z:
      return raster_scan(height, width);
    case BaselineScan::s:
      return boustrophedon_scan(height, width);
    case BaselineScan::diagonal:
      return diagonal_scan(height, width);
  }
  return raster_scan(height, width);
}

template <typename T>
Tensor<T> apply_path(const Tensor<T>& x, const ScanPath& path) {
  expect_rank(x, 3, "apply_path input");
  if (x.extent(0) != path.height() || x.extent(1) != path.width()) {
    throw DimensionError("apply_path: path grid does not match tensor " + shape_to_string(x.shape()));
  }
  if (!is_permutation_of_range(path.order(), x.extent(0) * x.extent(1))) {
    throw IntegrityError("apply_path: path is not a permutation");
  }
  const std::size_t c = x.extent(2);
  const auto flat = x.reshaped({x.extent(0) * x.extent(1), c});
  Tensor<T> seq({path.size(), c});
  for (std::size_t k = 0; k < path.size(); ++k) {
    const auto src = flat.row(path[k]);
    std::copy(src.begin(), src.end(), seq.row(k).begin());
  }
  return seq;
}

template <typename T>
Tensor<T> invert_path(const Tensor<T>& seq, const ScanPath& path) {
  expect_rank(seq, 2, "invert_path input");
  if (seq.extent(0) != path.size()) {
    throw DimensionError("invert_path: sequence length does not match path");
  }
  if (!is_permutation_of_range(path.order(), path.height() * path.width())) {
    throw IntegrityError("invert_path: path is not a permutation");
  }
  const std::size_t c = seq.extent(1);
  Tensor<T> flat({path.size(), c});
  for (std::size_t k = 0; k < path.size(); ++k) {
    const auto src = seq.row(k);
    std::copy(src.begin(), src.end(), flat.row(path[k]).begin());
  }
  return std::move(flat).reshaped({path.height(), path.width(), c});
}

template Tensor<float> apply_path(const Tensor<float>&, const ScanPath&);
template Tensor<double> apply_path(const Tensor<double>&, const ScanPath&);
template Tensor<float> invert_path(const Tensor<float>&, const ScanPath&);
template Tensor<double> invert_path(const Tensor<double>&, const ScanPath&);

bool path_divergence(const BinaryMask& mask) {
  const auto sns = sns_salient_order(mask);
  const auto s_path = boustrophedon_scan(mask.height(), mask.width());
  std::vector<std::uint32_t> s_salient;
  s_salient.reserve(sns.size());
  for (std::uint32_t idx : s_path.order()) {
    if (mask[idx]) s_salient.push_back(idx);
  }
  return sns != s_salient;
}

}  // namespace samba
