#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "etpir/audit.hpp"
#include "etpir/cli.hpp"
#include "etpir/net.hpp"

namespace py = pybind11;
using namespace etpir;

namespace {

SchemeParams params_of(std::uint64_t K, std::uint64_t N, std::uint64_t T, std::uint64_t E, std::uint64_t q) {
  SchemeParams p{K, N, T, E, q};
  p.validate();
  return p;
}

DecodeMode mode_of(bool retry) { return retry ? DecodeMode::kRetry : DecodeMode::kFaithful; }

}  // namespace

PYBIND11_MODULE(_etpir, m) {
  m.attr("DEFAULT_MODULUS") = kDefaultModulus;

  py::register_exception<InvalidParams>(m, "InvalidParams", PyExc_ValueError);
  py::register_exception<ProtocolError>(m, "ProtocolError", PyExc_RuntimeError);

  m.def("capacity", [](std::uint64_t K, std::uint64_t N, std::uint64_t T, std::uint64_t E) {
    return to_string(capacity(K, N, T, E));
  });
  m.def("rho_min", [](std::uint64_t K, std::uint64_t N, std::uint64_t T, std::uint64_t E) {
    return to_string(rho_min(K, N, T, E));
  });
  m.def(
      "counts_json",
      [](std::uint64_t K, std::uint64_t N, std::uint64_t T, std::uint64_t E, std::uint64_t q) {
        const SchemeParams p = params_of(K, N, T, E, q);
        return counts_json(p, derive_counts(p)).dump();
      },
      py::arg("K"), py::arg("N"), py::arg("T"), py::arg("E"), py::arg("q") = kDefaultModulus);

  m.def(
      "audit_json",
      [](std::uint64_t K, std::uint64_t N, std::uint64_t T, std::uint64_t E, std::uint64_t q, std::uint64_t seed,
         std::uint64_t trials, bool retry) {
        AuditOptions o;
        o.seed = seed;
        o.trials = trials;
        o.mode = mode_of(retry);
        AuditReport r;
        {
          py::gil_scoped_release nogil;
          r = run_audit(params_of(K, N, T, E, q), o);
        }
        return to_json(r).dump();
      },
      py::arg("K"), py::arg("N"), py::arg("T"), py::arg("E"), py::arg("q") = kDefaultModulus, py::arg("seed") = 1,
      py::arg("trials") = 100, py::arg("retry") = false);

  m.def(
      "random_messages",
      [](std::uint64_t K, std::uint64_t N, std::uint64_t T, std::uint64_t E, std::uint64_t q, std::uint64_t seed) {
        Rng rng(seed);
        return random_messages(params_of(K, N, T, E, q), rng);
      },
      py::arg("K"), py::arg("N"), py::arg("T"), py::arg("E"), py::arg("q") = kDefaultModulus, py::arg("seed") = 1);

  // Returns (message or None, downloads, bytes_sent, bytes_received).
  m.def(
      "retrieve",
      [](std::uint64_t K, std::uint64_t N, std::uint64_t T, std::uint64_t E, std::uint64_t q,
         const std::vector<std::vector<std::uint64_t>>& messages, std::size_t desired, std::uint64_t seed, bool tcp,
         bool retry) {
        const SchemeParams p = params_of(K, N, T, E, q);
        py::gil_scoped_release nogil;
        DeploymentOptions d;
        d.transport = tcp ? Transport::kTcpLoopback : Transport::kInProcess;
        d.shared_seed = seed;
        Deployment dep(p, messages, d);
        Rng rng(mix_seed({seed, desired}));
        RetrieveOptions ro;
        ro.mode = mode_of(retry);
        const RetrievalOutcome r = retrieve(dep, desired, rng, ro);
        return std::make_tuple(r.message, r.downloads, r.bytes_sent, r.bytes_received);
      },
      py::arg("K"), py::arg("N"), py::arg("T"), py::arg("E"), py::arg("q"), py::arg("messages"), py::arg("desired"),
      py::arg("seed") = 1, py::arg("tcp") = false, py::arg("retry") = false);

  m.def("cli", [](const std::vector<std::string>& args) {
    std::vector<const char*> argv{"etpir"};
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
    return std::make_tuple(code, out.str(), err.str());
  });
}
