#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "repgap/cli.hpp"
#include "repgap/error.hpp"
#include "repgap/featstore.hpp"
#include "repgap/measure.hpp"
#include "repgap/metrics.hpp"
#include "repgap/pipeline.hpp"
#include "repgap/stats.hpp"

namespace py = pybind11;
using namespace repgap;

namespace {

py::object to_python(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

py::object result_dict(const metrics::SetMetricResult& r) { return to_python(measure::to_json(r)); }

py::dict ttest_dict(const stats::TTestResult& r) {
  py::dict d;
  d["t"] = r.t;
  d["df"] = r.df;
  d["p_one_tailed"] = r.p_one_tailed;
  d["pooled_std"] = r.pooled_std;
  d["decision"] = stats::to_string(r.decision);
  d["tail"] = stats::to_string(r.tail);
  d["alpha"] = r.alpha;
  d["mean_a"] = r.mean_a;
  d["mean_b"] = r.mean_b;
  d["flags"] = r.flags;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Representation-gap metrics for defect and normal feature sets";

  static py::exception<UsageError> usage_error(m, "UsageError", PyExc_ValueError);
  static py::exception<IoError> io_error(m, "IoError", PyExc_OSError);
  static py::exception<ValidationError> validation_error(m, "ValidationError", PyExc_ValueError);
  static py::exception<NumericalError> numerical_error(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const UsageError& e) {
      usage_error(e.what());
    } catch (const IoError& e) {
      io_error(e.what());
    } catch (const ValidationError& e) {
      validation_error(e.what());
    } catch (const NumericalError& e) {
      numerical_error(e.what());
    }
  });

  m.def(
      "kl_divergence",
      [](std::vector<double> p, std::vector<double> q) {
        return metrics::kl_divergence(metrics::ProbabilityVector(std::move(p)), metrics::ProbabilityVector(std::move(q)));
      },
      py::arg("p"), py::arg("q"), "Natural-log KL divergence of two probability vectors.");
  m.def(
      "js_divergence",
      [](std::vector<double> p, std::vector<double> q) {
        return metrics::js_divergence(metrics::ProbabilityVector(std::move(p)), metrics::ProbabilityVector(std::move(q)));
      },
      py::arg("p"), py::arg("q"), "Base-2 Jensen-Shannon divergence.");
  m.def("mahalanobis_upper_bound", &metrics::mahalanobis_upper_bound, py::arg("n"), py::arg("p"));
  m.def(
      "mahalanobis_set",
      [](const Eigen::MatrixXd& defect, const Eigen::MatrixXd& normal) {
        return result_dict(metrics::mahalanobis_set(defect, normal));
      },
      py::arg("defect"), py::arg("normal"));
  m.def("within_set_mahalanobis", &metrics::within_set_mahalanobis, py::arg("normal"));
  m.def(
      "wasserstein2_set",
      [](const Eigen::MatrixXd& defect, const Eigen::MatrixXd& normal, std::size_t exact_limit) {
        metrics::WassersteinOptions options;
        options.exact_limit = exact_limit;
        return result_dict(metrics::wasserstein2_set(defect, normal, options));
      },
      py::arg("defect"), py::arg("normal"), py::arg("exact_limit") = metrics::WassersteinOptions{}.exact_limit);

  m.def("p_value", &stats::p_value, py::arg("t"), py::arg("df"), "Upper-tail probability of Student's t.");
  m.def(
      "hypothesis_test",
      [](std::vector<double> fg, std::vector<double> bg, double alpha, const std::string& tail) {
        return ttest_dict(stats::hypothesis_test(stats::MeasurementGroup(stats::GroupLabel::anomaly_fg, std::move(fg)),
                                                 stats::MeasurementGroup(stats::GroupLabel::anomaly_bg, std::move(bg)),
                                                 alpha, stats::tail_from_string(tail)));
      },
      py::arg("fg"), py::arg("bg"), py::arg("alpha") = 0.05, py::arg("tail") = "lower");

  m.def(
      "read_features",
      [](const std::filesystem::path& path) {
        const auto fm = featstore::read_features(path);
        py::dict d;
        d["values"] = fm.as_double();
        d["sample_ids"] = fm.sample_ids;
        d["meta"] = to_python(measure::meta_to_json(fm.meta));
        return d;
      },
      py::arg("path"), "Loads an FGAP feature file and its sidecar.");

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = cli::run_cli(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command line tool; returns (exit_code, stdout, stderr).");
}
