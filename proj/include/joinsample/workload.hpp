#pragma once

#include "joinsample/query.hpp"
#include "joinsample/rng.hpp"
#include "joinsample/value.hpp"

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace joinsample {

struct StreamEvent {
  std::size_t relation = 0;   // base relation index
  std::vector<Value> values;  // declared column order
  friend bool operator==(const StreamEvent&, const StreamEvent&) = default;
};

/// An event sequence plus the pool its string values were interned in.
struct Workload {
  std::vector<StreamEvent> events;
  StringPool strings;
};

/// One event per line: relation name, then values in schema order, separated
/// by commas. Blank lines are skipped; anything else malformed throws
/// ParseError carrying the 1-based line number.
Workload ingest(std::istream& in, const QuerySpec& spec);
Workload ingest_file(const std::string& path, const QuerySpec& spec);
void write_events(std::ostream& out, const Workload& w, const QuerySpec& spec);

using Edge = std::pair<std::int64_t, std::int64_t>;

/// m distinct directed edges (no self loops) chosen uniformly among n vertices.
std::vector<Edge> erdos_renyi(std::int64_t n, std::size_t m, Rng& rng);

/// Chung-Lu graph: endpoints drawn with weight proportional to
/// (i+1)^(-1/(gamma-1)); m distinct directed edges, no self loops.
std::vector<Edge> chung_lu(std::int64_t n, std::size_t m, double gamma, Rng& rng);

/// Every binary relation of the query receives all edges; the union of
/// (relation, edge) events is shuffled into one stream.
Workload graph_stream(const QuerySpec& spec, const std::vector<Edge>& edges, Rng& rng);

/// Schema-shaped stream driven by the query's `workload:` hints:
///   rows.<Rel>: row count (default 1000)
///   domain.<attr>: values drawn uniformly from [0, domain) (default 100)
///   preload: comma-separated relations emitted first, unshuffled
/// Parent relations of declared foreign keys get distinct key values
/// 0..rows-1; children draw their key from the parent's range.
Workload schema_stream(const QuerySpec& spec, Rng& rng, double scale = 1.0);

}  // namespace joinsample
