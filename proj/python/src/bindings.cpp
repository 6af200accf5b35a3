#include <optional>
#include <string>
#include <vector>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tlbr/compression.hpp"
#include "tlbr/error.hpp"
#include "tlbr/factorizations.hpp"
#include "tlbr/image_io.hpp"
#include "tlbr/restart.hpp"
#include "tlbr/t3b_io.hpp"

namespace py = pybind11;
using namespace tlbr;

namespace {

using Array = py::array_t<double, py::array::f_style | py::array::forcecast>;

// Accepts 2-D (as n = 1) or 3-D arrays; storage order matches Tensor3.
Tensor3 to_tensor(const Array& a) {
  if (a.ndim() != 2 && a.ndim() != 3) throw py::value_error("expected a 2-D or 3-D array");
  const auto r = static_cast<Index>(a.shape(0));
  const auto c = static_cast<Index>(a.shape(1));
  const auto n = a.ndim() == 3 ? static_cast<Index>(a.shape(2)) : Index{1};
  std::vector<double> data(a.data(), a.data() + a.size());
  return Tensor3(r, c, n, std::move(data));
}

Array to_array(const Tensor3& t) {
  Array out({static_cast<py::ssize_t>(t.rows()), static_cast<py::ssize_t>(t.cols()),
             static_cast<py::ssize_t>(t.tubes())});
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

Mode parse_mode(const std::string& s) {
  if (s == "largest") return Mode::Largest;
  if (s == "smallest") return Mode::Smallest;
  throw py::value_error("mode must be 'largest' or 'smallest'");
}

Augmentation parse_aug(const std::string& s) {
  if (s == "ritz") return Augmentation::Ritz;
  if (s == "harm") return Augmentation::Harmonic;
  throw py::value_error("aug must be 'ritz' or 'harm'");
}

}  // namespace

PYBIND11_MODULE(_tlbr, m) {
  m.doc() = "Restarted tensor Lanczos bidiagonalization under the t-product";

  // Translators run newest first, so the base class goes in first.
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<DimMismatch>(m, "DimMismatch", PyExc_ValueError);
  py::register_exception<IndexOutOfRange>(m, "IndexOutOfRange", PyExc_IndexError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<UnsupportedFormat>(m, "UnsupportedFormat", PyExc_ValueError);

  m.def("tprod", [](const Array& a, const Array& b) {
    return to_array(tprod(to_tensor(a), to_tensor(b)));
  }, py::arg("a"), py::arg("b"), "t-product of two third-order arrays.");

  m.def("ttranspose", [](const Array& a) { return to_array(ttranspose(to_tensor(a))); },
        py::arg("a"));

  m.def("t_svd", [](const Array& a) {
    const TSVD t = t_svd(to_tensor(a));
    return py::make_tuple(to_array(t.U), to_array(t.S), to_array(t.V));
  }, py::arg("a"), "Economy t-SVD; returns (U, S, V).");

  m.def("tlbr_svd",
        [](const Array& a, Index k, Index m_, const std::string& mode, const std::string& aug,
           double delta, Index max_restarts, std::optional<std::uint64_t> seed) {
          SolverConfig cfg;
          cfg.k = k;
          cfg.m = m_;
          cfg.mode = parse_mode(mode);
          cfg.augmentation = parse_aug(aug);
          cfg.delta = delta;
          cfg.max_restarts = max_restarts;
          cfg.seed = seed;
          SolverResult r;
          const Tensor3 t = to_tensor(a);
          {
            py::gil_scoped_release release;
            r = tlbr_solve(t, cfg);
          }
          py::dict out;
          out["U"] = to_array(r.triplets.U);
          out["S"] = to_array(r.triplets.S());
          out["V"] = to_array(r.triplets.V);
          out["sigma"] = r.triplets.sigma;
          out["residual"] = r.triplets.residual;
          out["converged"] = r.converged;
          out["iterations"] = r.iterations;
          out["operator_applications"] = r.operator_applications;
          return out;
        },
        py::arg("a"), py::arg("k") = 4, py::arg("m") = 20, py::arg("mode") = "largest",
        py::arg("aug") = "ritz", py::arg("delta") = 1e-8, py::arg("max_restarts") = 200,
        py::arg("seed") = py::none(), "Partial t-SVD by the restarted solver.");

  m.def("compress",
        [](const Array& a, Index k, const std::string& method, Index m_,
           std::optional<std::uint64_t> seed) {
          CompressMethod cm;
          if (method == "tlbr") {
            cm = CompressMethod::Tlbr;
          } else if (method == "tsvd") {
            cm = CompressMethod::FullTsvd;
          } else {
            throw py::value_error("method must be 'tlbr' or 'tsvd'");
          }
          CompressOptions opts;
          opts.m = m_;
          opts.seed = seed;
          const Compressed c = compress(to_tensor(a), k, cm, opts);
          return py::make_tuple(to_array(c.approx), c.rel_error);
        },
        py::arg("a"), py::arg("k"), py::arg("method") = "tlbr", py::arg("m") = 0,
        py::arg("seed") = py::none(), "Rank-k approximation; returns (approx, rel_error).");

  m.def("load_image", [](const std::string& path) { return to_array(load_image(path).data); },
        py::arg("path"));
  m.def("save_image", [](const Array& a, const std::string& path) {
    save_image(to_tensor(a), path);
  }, py::arg("a"), py::arg("path"));
  m.def("read_t3b", [](const std::string& path) { return to_array(read_t3b(path)); },
        py::arg("path"));
  m.def("write_t3b", [](const Array& a, const std::string& path) {
    write_t3b(to_tensor(a), path);
  }, py::arg("a"), py::arg("path"));
}
