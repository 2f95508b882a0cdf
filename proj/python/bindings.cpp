#include "joinsample/engine.hpp"
#include "joinsample/errors.hpp"
#include "joinsample/harness.hpp"
#include "joinsample/query.hpp"
#include "joinsample/workload.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace joinsample;

namespace {

using QueryPtr = std::shared_ptr<const JoinQuery>;

/// Python-side handle; pybind11 holders cannot point to const.
struct PyQuery {
  QueryPtr q;
};

Value to_value(const py::handle& h, StringPool& pool) {
  if (py::isinstance<py::bool_>(h)) throw py::type_error("values must be int or str");
  if (py::isinstance<py::int_>(h)) return Value::integer(h.cast<std::int64_t>());
  if (py::isinstance<py::str>(h)) return parse_value(h.cast<std::string>(), pool);
  throw py::type_error("values must be int or str");
}

py::object from_value(const Value& v, const StringPool& pool) {
  if (v.is_int()) return py::int_(v.payload);
  return py::str(pool.str(v.payload));
}

py::tuple row(const std::vector<Value>& values, const StringPool& pool) {
  py::tuple t(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) t[i] = from_value(values[i], pool);
  return t;
}

std::vector<std::string> attribute_names(const JoinQuery& q) {
  std::vector<std::string> out;
  for (auto a : q.attributes) out.push_back(q.spec.attributes.name(a));
  return out;
}

/// An engine plus the string pool its values are interned in.
class PyEngine {
 public:
  PyEngine(const PyQuery& q, std::size_t k, std::uint64_t seed) : engine_(q.q, EngineOptions{k, seed, true}) {}

  void feed(const std::string& relation, const py::sequence& values) {
    std::vector<Value> v;
    for (const auto& x : values) v.push_back(to_value(x, pool_));
    engine_.feed(relation, v);
  }

  py::dict snapshot() const {
    const auto s = engine_.snapshot();
    py::list samples;
    for (const auto& x : s.samples) samples.append(row(x, pool_));
    py::dict d;
    d["arrival_index"] = s.arrival_index;
    d["join_upper"] = s.join_upper;
    d["samples"] = samples;
    return d;
  }

  py::dict metrics() const {
    const auto m = engine_.metrics();
    py::dict d;
    d["events"] = m.events;
    d["duplicates"] = m.duplicates;
    d["index_insertions"] = m.index_insertions;
    d["batches"] = m.batches;
    d["join_upper"] = m.batch_total;
    d["max_event_propagation"] = m.max_event_propagation;
    d["propagation_loops"] = m.index.propagation_loop_count;
    d["wcnt_doublings"] = m.index.wcnt_doublings;
    d["bucket_moves"] = m.index.bucket_moves;
    d["next_calls"] = m.reservoir.next_calls;
    d["skip_stops"] = m.reservoir.skip_calls;
    d["replacements"] = m.reservoir.replacements;
    return d;
  }

  std::vector<std::string> attributes() const { return attribute_names(engine_.query()); }

 private:
  StringPool pool_;
  Engine engine_;
};

std::shared_ptr<Workload> read_stream(const PyQuery& q, const std::string& path) {
  return std::make_shared<Workload>(ingest_file(path, q.q->spec));
}

py::tuple run(const PyQuery& q, const Workload& w, std::size_t k, std::uint64_t seed, std::uint64_t every) {
  std::ostringstream samples, metrics;
  run_stream(q.q, w, RunOptions{k, seed, every}, samples, metrics);
  return py::make_tuple(samples.str(), metrics.str());
}

py::list validate(const PyQuery& q, const Workload& w, std::size_t k, std::uint64_t trials, std::uint64_t seed,
                  bool w_update) {
  ValidateOptions opts;
  opts.k = k;
  opts.trials = trials;
  opts.seed = seed;
  opts.w_update = w_update;
  const auto r = validate_uniformity(q.q, w, opts);
  py::list out;
  for (const auto& c : r.checkpoints) {
    py::dict d;
    d["arrival_index"] = c.arrival_index;
    d["results"] = c.stats.cells;
    d["chi2"] = c.stats.chi2;
    d["df"] = c.stats.df;
    d["p_value"] = c.stats.p_value;
    d["max_sigma"] = c.stats.max_sigma;
    d["max_deviation"] = c.stats.max_deviation;
    d["beyond_3sigma"] = c.cells_beyond_3sigma;
    d["engine_matches_replay"] = r.engine_matches_replay;
    out.append(d);
  }
  return out;
}

py::list run_rswp(std::uint64_t n, std::size_t k, std::vector<double> densities, std::uint64_t trials,
                  std::uint64_t seed, const std::string& mode, std::uint32_t cost) {
  RswpOptions opts;
  opts.n = n;
  opts.k = k;
  opts.densities = std::move(densities);
  opts.trials = trials;
  opts.seed = seed;
  opts.busy_iterations = cost;
  if (mode == "edit") {
    opts.mode = PredicateMode::EditDistance;
  } else if (mode != "busy") {
    throw py::value_error("mode must be 'busy' or 'edit'");
  }
  py::list out;
  for (const auto& r : rswp(opts)) {
    py::dict d;
    d["density"] = r.density;
    d["realized_density"] = r.realized_density;
    d["visited"] = r.mean_visited;
    d["next_calls"] = r.mean_next;
    d["skip_stops"] = r.mean_stops;
    d["predicted_skip_stops"] = r.predicted_stops;
    out.append(d);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_joinsample, m) {
  m.doc() = "Uniform reservoir samples over streaming joins.";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ParseError>(m, "ParseError", base.ptr());

  py::class_<PyQuery>(m, "Query")
      .def_property_readonly("name", [](const PyQuery& q) { return q.q->spec.name; })
      .def_property_readonly("attributes", [](const PyQuery& q) { return attribute_names(*q.q); })
      .def_property_readonly("relations",
                             [](const PyQuery& q) {
                               std::vector<std::string> out;
                               for (const auto& r : q.q->spec.relations) out.push_back(r.name);
                               return out;
                             })
      .def_property_readonly("kind", [](const PyQuery& q) {
        switch (q.q->kind) {
          case PlanKind::Acyclic: return "acyclic";
          case PlanKind::ForeignKey: return "foreign-key";
          case PlanKind::Ghd: return "ghd";
        }
        return "";
      });

  m.def("load_query", [](const std::string& path) { return PyQuery{std::make_shared<const JoinQuery>(load_query_file(path))}; },
        py::arg("path"));
  m.def("parse_query", [](const std::string& text) { return PyQuery{std::make_shared<const JoinQuery>(load_query(text))}; },
        py::arg("text"));

  py::class_<Workload, std::shared_ptr<Workload>>(m, "Stream").def("__len__", [](const Workload& w) {
    return w.events.size();
  });
  m.def("read_stream", &read_stream, py::arg("query"), py::arg("path"));

  py::class_<PyEngine>(m, "Engine")
      .def(py::init<const PyQuery&, std::size_t, std::uint64_t>(), py::arg("query"), py::arg("k"), py::arg("seed") = 0)
      .def("feed", &PyEngine::feed, py::arg("relation"), py::arg("values"))
      .def("snapshot", &PyEngine::snapshot)
      .def("metrics", &PyEngine::metrics)
      .def_property_readonly("attributes", &PyEngine::attributes);

  m.def("run", &run, py::arg("query"), py::arg("stream"), py::arg("k"), py::arg("seed") = 0,
        py::arg("checkpoint_every") = 0, "Returns (samples_csv, metrics_csv).");
  m.def("validate", &validate, py::arg("query"), py::arg("stream"), py::arg("k"), py::arg("trials") = 1000,
        py::arg("seed") = 0, py::arg("w_update") = true);
  m.def("rswp", &run_rswp, py::arg("n") = 100'000, py::arg("k") = 1000,
        py::arg("densities") = std::vector<double>{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0},
        py::arg("trials") = 10, py::arg("seed") = 0, py::arg("mode") = "busy", py::arg("cost") = 200);
}
