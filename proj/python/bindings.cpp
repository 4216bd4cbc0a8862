#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "samba/cau.hpp"
#include "samba/gradcheck.hpp"
#include "samba/macl.hpp"
#include "samba/metrics.hpp"
#include "samba/scan_order.hpp"
#include "samba/sir.hpp"
#include "samba/ssm.hpp"

namespace py = pybind11;
using namespace samba;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

TensorD to_tensor(const Array& a) {
  Shape shape(a.shape(), a.shape() + a.ndim());
  return TensorD(std::move(shape), std::vector<double>(a.data(), a.data() + a.size()));
}

// Empty arrays mean "absent" for optional tensors.
TensorD to_optional_tensor(const std::optional<Array>& a) {
  return a && a->size() > 0 ? to_tensor(*a) : TensorD{};
}

Array to_array(const TensorD& t) {
  Array out(std::vector<py::ssize_t>(t.shape().begin(), t.shape().end()));
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

SaliencyMap to_map(const Array& a) {
  if (a.ndim() != 2) throw DimensionError("expected a 2-D map");
  return SaliencyMap(a.shape(0), a.shape(1), std::vector<double>(a.data(), a.data() + a.size()));
}

Array map_to_array(const SaliencyMap& m) {
  Array out({m.height(), m.width()});
  std::copy(m.values().begin(), m.values().end(), out.mutable_data());
  return out;
}

BinaryMask to_mask(const py::array_t<bool, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2) throw DimensionError("expected a 2-D mask");
  return BinaryMask(a.shape(0), a.shape(1), std::vector<bool>(a.data(), a.data() + a.size()));
}

DiscreteSsm<double> to_ssm(const Array& a_bar, const Array& b_bar, const Array& c, const Array& d_skip) {
  return {to_tensor(a_bar), to_tensor(b_bar), to_tensor(c), to_tensor(d_skip)};
}

py::dict ssm_output(const SsmOutput<double>& o) {
  py::dict d;
  d["y"] = to_array(o.y);
  d["h_final"] = to_array(o.h_final);
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Samba saliency kernels";

  m.def(
      "ssm_recurrence",
      [](const Array& a_bar, const Array& b_bar, const Array& c, const Array& d_skip, const Array& x,
         const std::optional<Array>& h0) {
        return ssm_output(ssm_recurrence_seq(to_ssm(a_bar, b_bar, c, d_skip), to_tensor(x), to_optional_tensor(h0)));
      },
      py::arg("a_bar"), py::arg("b_bar"), py::arg("c"), py::arg("d_skip"), py::arg("x"), py::arg("h0") = py::none(),
      "Sequential diagonal SSM. Shapes: a_bar, b_bar [L,D,N]; c [L,N]; d_skip [D]; x [L,D].");
  m.def(
      "ssm_parallel_scan",
      [](const Array& a_bar, const Array& b_bar, const Array& c, const Array& d_skip, const Array& x,
         const std::optional<Array>& h0, unsigned threads) {
        const auto ssm = to_ssm(a_bar, b_bar, c, d_skip);
        const auto xt = to_tensor(x);
        const auto h = to_optional_tensor(h0);
        py::gil_scoped_release release;
        auto out = ssm_parallel_scan(ssm, xt, h, threads);
        py::gil_scoped_acquire acquire;
        return ssm_output(out);
      },
      py::arg("a_bar"), py::arg("b_bar"), py::arg("c"), py::arg("d_skip"), py::arg("x"), py::arg("h0") = py::none(),
      py::arg("threads") = 1u);
  m.def(
      "ssm_backward",
      [](const Array& a_bar, const Array& b_bar, const Array& c, const Array& d_skip, const Array& x, const Array& h0,
         const Array& dy) {
        const auto g = ssm_backward(to_ssm(a_bar, b_bar, c, d_skip), to_tensor(x), to_tensor(h0), to_tensor(dy));
        py::dict d;
        d["dx"] = to_array(g.dx);
        d["d_a_bar"] = to_array(g.d_a_bar);
        d["d_b_bar"] = to_array(g.d_b_bar);
        d["d_c"] = to_array(g.d_c);
        d["d_d_skip"] = to_array(g.d_d_skip);
        d["d_h0"] = to_array(g.d_h0);
        return d;
      },
      py::arg("a_bar"), py::arg("b_bar"), py::arg("c"), py::arg("d_skip"), py::arg("x"), py::arg("h0"), py::arg("dy"));

  m.def(
      "sns_order", [](const py::array_t<bool>& mask) { return sns_salient_order(to_mask(mask)); }, py::arg("mask"),
      "Flat indices of the salient patches in spatial neighbouring order.");
  m.def(
      "sns_path_bundle",
      [](const py::array_t<bool>& mask) {
        const auto b = sns_path_bundle(to_mask(mask));
        std::vector<std::vector<std::uint32_t>> out;
        for (const auto& p : b.paths) out.push_back(p.order());
        return out;
      },
      py::arg("mask"), "Base path and its three variants.");
  m.def(
      "path_divergence", [](const py::array_t<bool>& mask) { return path_divergence(to_mask(mask)); },
      py::arg("mask"));

  m.def(
      "cau_pairing",
      [](std::size_t h, std::size_t w, std::size_t shift) {
        const auto plan = build_pairing(h, w, shift);
        py::dict d;
        d["group_of"] = plan.group_of;
        d["shallow_position"] = plan.shallow_position;
        d["deep_position"] = plan.deep_position;
        return d;
      },
      py::arg("height"), py::arg("width"), py::arg("shift") = 0);
  m.def(
      "cau_interleave",
      [](const Array& deep, const Array& shallow, std::size_t h, std::size_t w, std::size_t shift, bool altered) {
        const auto plan = build_pairing(h, w, shift);
        return to_array(cau_interleave(to_tensor(deep), to_tensor(shallow), plan,
                                       altered ? SubsequenceOrder::altered : SubsequenceOrder::forward));
      },
      py::arg("deep"), py::arg("shallow"), py::arg("height"), py::arg("width"), py::arg("shift") = 0,
      py::arg("altered") = false);

  m.def(
      "soft_morph_edge", [](const Array& map, std::size_t k) { return map_to_array(soft_morph_edge(to_map(map), k)); },
      py::arg("map"), py::arg("k"));
  m.def(
      "object_prior", [](const Array& map, std::size_t pool) { return map_to_array(object_prior(to_map(map), pool)); },
      py::arg("map"), py::arg("pool") = 14);
  m.def(
      "reverse_attention",
      [](const Array& prior, const Array& coarse) {
        return map_to_array(reverse_attention(to_map(prior), to_map(coarse)));
      },
      py::arg("prior"), py::arg("coarse"));

  m.def(
      "evaluate",
      [](const Array& pred, const Array& gt) {
        const auto r = evaluate(to_map(pred), to_map(gt));
        py::dict d;
        d["s_measure"] = r.s_measure;
        d["f_measure_max"] = r.f_measure_max;
        d["e_measure_max"] = r.e_measure_max;
        d["mae"] = r.mae;
        return d;
      },
      py::arg("pred"), py::arg("gt"), "S, max F, max E and MAE; f_measure_max is None for an empty gt.");

  m.def(
      "randomized_quantization",
      [](const Array& x, const py::array_t<bool>& mask, std::size_t bins, double epsilon, std::uint64_t seed) {
        return to_array(randomized_quantization(to_tensor(x), to_mask(mask), RqOptions{bins, epsilon, true}, seed));
      },
      py::arg("x"), py::arg("mask"), py::arg("bins") = 8, py::arg("epsilon") = 0.1, py::arg("seed") = 0);
  m.def(
      "schedule_plan", [](const std::string& manifest_json) { return plan_to_json(build_stage_plan(parse_manifests_json(manifest_json))); },
      py::arg("manifest_json"), "Stage plan for a JSON roster, as JSON.");
}
