#include <pybind11/pybind11.h>

#include "dkplab/grid.hpp"

namespace py = pybind11;

PYBIND11_MODULE(_dkplab, m) {
  m.doc() = "elliptic measure laboratory bindings";
  m.def("version", [] { return "0.1.0"; });
}
