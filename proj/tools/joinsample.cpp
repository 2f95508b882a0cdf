// joinsample: run, validate, bench, rswp, gen.

#include "joinsample/errors.hpp"
#include "joinsample/harness.hpp"
#include "joinsample/query.hpp"
#include "joinsample/workload.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <memory>

using namespace joinsample;

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

struct Common {
  std::string query;
  std::string stream;
  std::size_t k = 1;
  std::uint64_t seed = 0;
  std::uint64_t checkpoint_every = 0;
  std::string out = "out";
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--query", c.query, "query config (YAML)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--stream", c.stream, "event stream file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--k", c.k, "sample size")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", c.seed, "master seed");
  cmd->add_option("--checkpoint-every", c.checkpoint_every, "events between checkpoints (0: default cadence)");
  cmd->add_option("--out", c.out, "output path prefix");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Uniform reservoir sampling over streaming joins"};
  app.require_subcommand(1);

  Common run_opts;
  auto* run_cmd = app.add_subcommand("run", "stream events through the engine, writing samples and metrics");
  add_common(run_cmd, run_opts);

  Common val_opts;
  std::uint64_t trials = 1000;
  std::string mutation = "none";
  auto* val_cmd = app.add_subcommand("validate", "Monte Carlo uniformity check at 25/50/100% checkpoints");
  add_common(val_cmd, val_opts);
  val_cmd->add_option("--trials", trials, "seeded trials");
  val_cmd->add_option("--mutation", mutation, "inject a known bias")->check(CLI::IsMember({"none", "skip-w-update"}));

  Common bench_opts;
  std::uint64_t cap = 10'000'000;
  std::string baseline = "all";
  double budget = 600.0;
  auto* bench_cmd = app.add_subcommand("bench", "engine against the rebuild and materialized baselines");
  add_common(bench_cmd, bench_opts);
  bench_cmd->add_option("--cap", cap, "oracle result cap for the baselines");
  bench_cmd->add_option("--baseline", baseline, "none, rebuild, materialized or all");
  bench_cmd->add_option("--budget", budget, "seconds per system before Timeout");

  RswpOptions rswp_opts;
  std::string rswp_out = "out";
  std::string mode = "busy";
  auto* rswp_cmd = app.add_subcommand("rswp", "reservoir sampling with a predicate over a synthetic stream");
  rswp_cmd->add_option("--n", rswp_opts.n, "stream length");
  rswp_cmd->add_option("--k", rswp_opts.k, "sample size")->check(CLI::PositiveNumber);
  rswp_cmd->add_option("--seed", rswp_opts.seed, "master seed");
  rswp_cmd->add_option("--trials", rswp_opts.trials, "trials per density");
  rswp_cmd->add_option("--densities", rswp_opts.densities, "real-item densities")->delimiter(',');
  rswp_cmd->add_option("--mode", mode, "busy or edit")->check(CLI::IsMember({"busy", "edit"}));
  rswp_cmd->add_option("--cost", rswp_opts.busy_iterations, "busy-loop iterations per predicate call");
  rswp_cmd->add_option("--out", rswp_out, "output path prefix");

  std::string gen_query;
  std::string gen_kind = "er";
  std::int64_t vertices = 1000;
  std::size_t edges = 5000;
  double gamma = 2.5;
  double scale = 1.0;
  std::uint64_t gen_seed = 0;
  std::string gen_out;
  auto* gen_cmd = app.add_subcommand("gen", "generate a synthetic event stream");
  gen_cmd->add_option("--query", gen_query, "query config (YAML)")->required()->check(CLI::ExistingFile);
  gen_cmd->add_option("--kind", gen_kind, "er, powerlaw or schema")->check(CLI::IsMember({"er", "powerlaw", "schema"}));
  gen_cmd->add_option("--vertices", vertices, "graph vertices");
  gen_cmd->add_option("--edges", edges, "distinct graph edges");
  gen_cmd->add_option("--gamma", gamma, "power-law exponent");
  gen_cmd->add_option("--scale", scale, "row-count multiplier for schema streams");
  gen_cmd->add_option("--seed", gen_seed, "seed");
  gen_cmd->add_option("--out", gen_out, "stream file (stdout when omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    auto load = [](const Common& c) {
      auto q = std::make_shared<const JoinQuery>(load_query_file(c.query));
      auto w = std::make_shared<Workload>(ingest_file(c.stream, q->spec));
      return std::make_pair(q, w);
    };
    if (run_cmd->parsed()) {
      auto [q, w] = load(run_opts);
      auto samples = open_out(run_opts.out + ".samples.csv");
      auto metrics = open_out(run_opts.out + ".metrics.csv");
      run_stream(q, *w, RunOptions{run_opts.k, run_opts.seed, run_opts.checkpoint_every}, samples, metrics);
    } else if (val_cmd->parsed()) {
      auto [q, w] = load(val_opts);
      ValidateOptions vo;
      vo.k = val_opts.k;
      vo.trials = trials;
      vo.seed = val_opts.seed;
      vo.w_update = mutation != "skip-w-update";
      const auto report = validate_uniformity(q, *w, vo);
      auto out = open_out(val_opts.out + ".validate.csv");
      write_validate_report(out, report, vo.k, vo.trials);
      write_validate_report(std::cout, report, vo.k, vo.trials);
    } else if (bench_cmd->parsed()) {
      auto [q, w] = load(bench_opts);
      BenchOptions bo;
      bo.k = bench_opts.k;
      bo.seed = bench_opts.seed;
      bo.checkpoint_every = bench_opts.checkpoint_every;
      bo.baseline = parse_baseline(baseline);
      bo.cap = cap;
      bo.budget_seconds = budget;
      auto table = open_out(bench_opts.out + ".bench.csv");
      auto timing = open_out(bench_opts.out + ".timing.csv");
      bench(q, *w, bo, table, timing);
    } else if (rswp_cmd->parsed()) {
      rswp_opts.mode = mode == "edit" ? PredicateMode::EditDistance : PredicateMode::Busy;
      const auto rows = rswp(rswp_opts);
      auto table = open_out(rswp_out + ".rswp.csv");
      auto timing = open_out(rswp_out + ".timing.csv");
      write_rswp(table, timing, rows);
    } else if (gen_cmd->parsed()) {
      const auto q = load_query_file(gen_query);
      Rng rng(gen_seed);
      Workload w;
      if (gen_kind == "schema") {
        w = schema_stream(q.spec, rng, scale);
      } else {
        const auto e = gen_kind == "er" ? erdos_renyi(vertices, edges, rng) : chung_lu(vertices, edges, gamma, rng);
        w = graph_stream(q.spec, e, rng);
      }
      if (gen_out.empty()) {
        write_events(std::cout, w, q.spec);
      } else {
        auto out = open_out(gen_out);
        write_events(out, w, q.spec);
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
