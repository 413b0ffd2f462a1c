// Command-line front end: generate synthetic datasets, learn a DAG from a
// count CSV, evaluate an estimate against a truth edge list, and run the
// Monte-Carlo benchmark grid.
//
// Exit codes: 0 success; 2 bad usage, bad config, or unparseable input files;
// 1 numeric/runtime failures.

#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qvf/dag.hpp"
#include "qvf/errors.hpp"
#include "qvf/io.hpp"
#include "qvf/pipeline.hpp"
#include "qvf/rng.hpp"
#include "qvf/sampling.hpp"

namespace {

using nlohmann::json;
using namespace qvf;

std::uint64_t fresh_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

// Flag > config > fresh randomness; reruns need the printed seed.
std::uint64_t pick_seed(const std::optional<std::uint64_t>& flag, bool config_had_seed,
                        std::uint64_t config_seed) {
  if (flag) return *flag;
  if (config_had_seed) return config_seed;
  return fresh_seed();
}

int cmd_generate(const std::string& config_path, const std::string& out_prefix,
                 const std::optional<std::uint64_t>& seed_flag) {
  bool config_had_seed = false;
  OdsConfig cfg = load_ods_config(config_path, &config_had_seed);
  const std::uint64_t seed = pick_seed(seed_flag, config_had_seed, cfg.seed);

  std::mt19937_64 dag_rng = make_rng(derive_seed(seed, 0));
  Dag dag = random_dag(cfg.p, cfg.num_parents, cfg.theta_lo, cfg.theta_hi, cfg.intercept, dag_rng);
  std::vector<QvfFamily> fams(static_cast<std::size_t>(cfg.p), cfg.family.make());
  CountMatrix data = sample_dataset(dag, fams, cfg.n, derive_seed(seed, 1));

  write_count_csv(out_prefix + ".data.csv", data);
  write_directed_edges(out_prefix + ".dag.txt", dag.edges);

  std::cout << "generated " << cfg.n << " samples x " << cfg.p << " nodes (family="
            << cfg.family.name << ", seed=" << seed << ")\n"
            << "wrote " << out_prefix << ".data.csv and " << out_prefix << ".dag.txt\n";
  return 0;
}

json report_json(const OdsResult& res, const OdsConfig& cfg, Index p, Index n) {
  json r;
  r["p"] = p;
  r["n"] = n;
  r["family"] = cfg.family.name;
  r["lambda"] = resolve_lambda(cfg);
  r["lambda_d"] = resolve_lambda_d(cfg);
  r["c0"] = cfg.c0;
  r["ordering"] = res.ordering.nodes;
  json edges = json::array();
  for (const auto& [a, b] : res.edges) edges.push_back({a, b});
  r["edges"] = edges;
  json moral = json::array();
  for (const auto& [a, b] : res.moral.edge_set()) moral.push_back({a, b});
  r["moral_edges"] = moral;
  r["step1_ms"] = res.step1_ms;
  r["step2_ms"] = res.step2_ms;
  r["step3_ms"] = res.step3_ms;
  r["degenerate_cells"] = res.degenerate_cells;
  json reports = json::array();
  for (const ScoreReport& rep : res.reports) {
    json e;
    e["node"] = rep.node;
    e["position"] = rep.position;
    e["candidate_parents"] = rep.candidate_parents;
    e["score"] = rep.degenerate ? json(nullptr) : json(rep.score);
    e["cells_used"] = rep.cells_used;
    e["samples_used"] = rep.samples_used;
    e["degenerate"] = rep.degenerate;
    e["degenerate_cells"] = rep.degenerate_cells;
    reports.push_back(e);
  }
  r["score_reports"] = reports;
  return r;
}

int cmd_learn(const std::string& data_path, const std::string& config_path,
              const std::string& truth_path, const std::string& out_prefix, bool verbose) {
  OdsConfig cfg;
  if (!config_path.empty()) cfg = load_ods_config(config_path);
  CountMatrix data = read_count_csv(data_path);
  cfg.p = data.cols();
  cfg.n = data.rows();

  Dag truth;
  const Dag* truth_ptr = nullptr;
  if (!truth_path.empty()) {
    truth.p = cfg.p;
    truth.edges = read_directed_edges(truth_path, cfg.p);
    truth_ptr = &truth;
  }
  if (cfg.oracle_moral_graph && !truth_ptr) {
    throw std::invalid_argument("config sets oracle_moral_graph but no --truth was given");
  }

  OdsResult res = ods_learn(data, cfg, truth_ptr);

  write_ordering(out_prefix + ".ordering.txt", res.ordering);
  write_directed_edges(out_prefix + ".edges.txt", res.edges);
  write_undirected_edges(out_prefix + ".moral.txt", res.moral);
  {
    std::ofstream out(out_prefix + ".report.json", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + out_prefix + ".report.json");
    out << report_json(res, cfg, cfg.p, cfg.n).dump(2) << "\n";
  }

  std::cout << "ordering:";
  for (Index v : res.ordering.nodes) std::cout << ' ' << v;
  std::cout << "\nmoral edges: " << res.moral.edge_count() << "\nedges: " << res.edges.size()
            << "\nsteps ms: " << format_value(res.step1_ms) << ' ' << format_value(res.step2_ms)
            << ' ' << format_value(res.step3_ms) << "\n";
  if (verbose) {
    for (const ScoreReport& rep : res.reports) {
      std::cout << "position " << rep.position << " node " << rep.node << " score "
                << (rep.degenerate ? std::string("degenerate") : format_value(rep.score))
                << " (cells " << rep.cells_used << ", samples " << rep.samples_used << ")\n";
    }
  }
  std::cout << "wrote " << out_prefix << ".{ordering,edges,moral}.txt and " << out_prefix
            << ".report.json\n";
  return 0;
}

int cmd_evaluate(const std::string& est_path, const std::string& truth_path, Index p,
                 const std::string& ordering_path) {
  auto est = read_directed_edges(est_path, p);
  auto truth_edges = read_directed_edges(truth_path, p);
  EvalMetrics m = evaluate_structure(est, truth_edges, p);
  if (!ordering_path.empty()) {
    Ordering ord = read_ordering(ordering_path, p);
    Dag truth;
    truth.p = p;
    truth.edges = truth_edges;
    m.ordering_consistent = is_consistent_ordering(truth, ord);
  }
  if (m.ordering_consistent) {
    std::cout << "ordering_consistent: " << (*m.ordering_consistent ? 1 : 0) << "\n";
  }
  std::cout << "skeleton_hamming_norm: " << format_value(m.skeleton_hamming_norm) << "\n"
            << "directed_hamming_norm: " << format_value(m.directed_hamming_norm) << "\n"
            << "inserted: " << m.inserted << "\nremoved: " << m.removed
            << "\nreversed: " << m.reversed << "\n";
  return 0;
}

int cmd_benchmark(const std::string& grid_path, const std::string& out_path,
                  const std::optional<std::uint64_t>& seed_flag, int threads) {
  std::vector<OdsConfig> grid = load_benchmark_grid(grid_path);
  if (seed_flag) {
    for (OdsConfig& cfg : grid) cfg.seed = *seed_flag;
  }
  BenchmarkResult result = run_benchmark(grid, threads);
  write_benchmark_csv(out_path, result.rows);
  for (const GridSummary& s : result.summaries) std::cout << s.to_line() << "\n";
  std::size_t failed = 0;
  for (const TrialRecord& r : result.rows) failed += r.failed ? 1 : 0;
  if (failed) std::cout << failed << " trial(s) failed; see stderr\n";
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"QVF DAG learning: overdispersion-score ordering with l1 neighborhood selection"};
  app.require_subcommand(1);

  std::string config_path, data_path, truth_path, out_prefix, out_path;
  std::string est_path, ordering_path, grid_path;
  std::optional<std::uint64_t> seed_flag;
  Index p = 0;
  int threads = 0;
  bool verbose = false;

  CLI::App* gen = app.add_subcommand("generate", "Sample a random DAG model and write a count CSV");
  gen->add_option("--config", config_path, "JSON config (p, n, family, ...)")->required();
  gen->add_option("--out", out_prefix, "Output prefix for .data.csv and .dag.txt")->required();
  gen->add_option("--seed", seed_flag, "Seed override (otherwise config seed, otherwise random)");

  CLI::App* learn = app.add_subcommand("learn", "Learn ordering and DAG from a count CSV");
  learn->add_option("--data", data_path, "Count CSV")->required();
  learn->add_option("--config", config_path, "JSON config for family and tuning knobs");
  learn->add_option("--truth", truth_path, "Truth edge list (needed for oracle_moral_graph)");
  learn->add_option("--out", out_prefix,
                    "Output prefix for .ordering.txt, .edges.txt, .moral.txt, .report.json")
      ->required();
  learn->add_flag("-v,--verbose", verbose, "Print per-candidate scores");

  CLI::App* eval = app.add_subcommand("evaluate", "Compare an estimated edge list to the truth");
  eval->add_option("--est", est_path, "Estimated directed edge list")->required();
  eval->add_option("--truth", truth_path, "Truth directed edge list")->required();
  eval->add_option("--p", p, "Number of nodes")->required()->check(CLI::PositiveNumber);
  eval->add_option("--ordering", ordering_path, "Ordering file to check against the truth");

  CLI::App* bench = app.add_subcommand("benchmark", "Run a Monte-Carlo grid and write per-trial CSV");
  bench->add_option("--grid", grid_path, "JSON grid (one config object or {\"grid\": [...]})")
      ->required();
  bench->add_option("--out", out_path, "Per-trial CSV path")->required();
  bench->add_option("--seed", seed_flag, "Seed override applied to every grid entry");
  bench->add_option("--threads", threads, "Worker threads (0 = hardware)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    app.exit(e);
    return 2;
  }

  try {
    if (app.got_subcommand(gen)) return cmd_generate(config_path, out_prefix, seed_flag);
    if (app.got_subcommand(learn)) {
      return cmd_learn(data_path, config_path, truth_path, out_prefix, verbose);
    }
    if (app.got_subcommand(eval)) return cmd_evaluate(est_path, truth_path, p, ordering_path);
    if (app.got_subcommand(bench)) return cmd_benchmark(grid_path, out_path, seed_flag, threads);
  } catch (const CsvParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;  // unreachable with require_subcommand(1)
}
