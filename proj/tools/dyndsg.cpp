// dyndsg: replay update streams through the dynamic densest-subgraph
// structures, verify them against brute force, or benchmark update cost.
//
// Exit codes: 0 success, 1 input error, 2 invariant/verification failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "dyndsg/harness.hpp"

namespace {

constexpr int kExitInput = 1;
constexpr int kExitVerify = 2;

struct Options {
  std::string stream_path;
  std::string out_path;
  std::optional<double> eps;
  double alpha_c = 0.25;
  double loop_c = 4.0;
  double dup_c = 4.0;
  double threshold_c = 4.0;
  double saturation_c = 1.0;
  double verify_cq = 8.0;
  std::uint64_t seed = 1;
  bool parallel = false;
  bool timings = false;
  std::size_t bench_n = 200;
  std::size_t bench_m = 10000;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--eps", o.eps, "Approximation parameter (overrides the stream header)")->envname("DYNDSG_EPS");
  cmd->add_option("--alpha-c", o.alpha_c, "Constant c in alpha = c eps^2 / log2(nW)")->envname("DYNDSG_ALPHA_C");
  cmd->add_option("--loop-c", o.loop_c, "Loop budget constant C (ceil(C/alpha) arcs per check)")->envname("DYNDSG_LOOP_C");
  cmd->add_option("--dup-c", o.dup_c, "Duplication constant c_D")->envname("DYNDSG_DUP_C");
  cmd->add_option("--threshold-c", o.threshold_c, "Threshold constant c_T")->envname("DYNDSG_THRESHOLD_C");
  cmd->add_option("--saturation-c", o.saturation_c, "Saturation margin constant")->envname("DYNDSG_SATURATION_C");
  cmd->add_option("--seed", o.seed, "Random seed")->envname("DYNDSG_SEED");
  cmd->add_flag("--parallel", o.parallel, "Fan updates out to grid instances on worker threads")->envname("DYNDSG_PARALLEL");
  cmd->add_flag("--timings", o.timings, "Include wall-clock figures in the report")->envname("DYNDSG_TIMINGS");
  cmd->add_option("--out", o.out_path, "Write the report here instead of stdout")->envname("DYNDSG_OUT");
}

dyndsg::RunConfig run_config(const Options& o) {
  dyndsg::RunConfig rc;
  rc.epsilon = o.eps;
  rc.reducer.alpha_c = o.alpha_c;
  rc.reducer.loop_c = o.loop_c;
  rc.reducer.dup_c = o.dup_c;
  rc.reducer.threshold_c = o.threshold_c;
  rc.reducer.saturation_c = o.saturation_c;
  rc.reducer.parallel = o.parallel;
  rc.timings = o.timings;
  rc.verify_cq = o.verify_cq;
  return rc;
}

dyndsg::ParsedStream load(const Options& o) {
  if (o.stream_path.empty() || o.stream_path == "-") return dyndsg::parse_stream(std::cin);
  std::ifstream in(o.stream_path);
  if (!in) throw dyndsg::Error("cannot open " + o.stream_path);
  return dyndsg::parse_stream(in);
}

void emit(const Options& o, const std::string& text) {
  if (o.out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(o.out_path);
  if (!out) throw dyndsg::Error("cannot write " + o.out_path);
  out << text;
}

std::string oracle_report(const dyndsg::ParsedStream& s) {
  // Final graph after all updates; queries are ignored.
  std::map<std::pair<dyndsg::VertexId, dyndsg::VertexId>, std::uint64_t> edges;
  const bool directed = s.header.mode == dyndsg::StreamMode::kDdsg;
  for (const auto& e : s.events) {
    if (e.kind == dyndsg::UpdateEvent::Kind::kQuery) continue;
    const std::pair<dyndsg::VertexId, dyndsg::VertexId> key =
        directed ? std::pair{e.u, e.v} : std::pair{std::min(e.u, e.v), std::max(e.u, e.v)};
    if (e.kind == dyndsg::UpdateEvent::Kind::kInsert) {
      ++edges[key];
    } else {
      auto it = edges.find(key);
      if (it == edges.end()) throw dyndsg::Error("line " + std::to_string(e.line) + ": delete of absent edge");
      if (--it->second == 0) edges.erase(it);
    }
  }
  nlohmann::ordered_json j;
  if (directed) {
    dyndsg::oracle::DirectedGraph g;
    g.n = s.header.n;
    for (const auto& [k, c] : edges) g.edges.push_back({k.first, k.second, c});
    const auto a = dyndsg::oracle::exact_ddsg(g);
    j["density"] = a.density();
    j["S"] = a.sources;
    j["T"] = a.sinks;
  } else {
    std::vector<dyndsg::oracle::Edge> list;
    for (const auto& [k, c] : edges) list.push_back({k.first, k.second, c});
    std::vector<dyndsg::VertexId> witness;
    j["density"] = dyndsg::oracle::exact_vwdsg_real(s.weights, list, &witness);
    j["S"] = witness;
  }
  return j.dump() + "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic densest subgraph: stream replay, verification, benchmarking"};
  app.require_subcommand(1);
  Options o;

  auto* run = app.add_subcommand("run", "Replay a stream and report every query");
  run->add_option("--stream", o.stream_path, "Stream file ('-' for stdin)")->envname("DYNDSG_STREAM");
  add_common(run, o);

  auto* verify = app.add_subcommand("verify", "Replay a small stream and check each query against brute force");
  verify->add_option("--stream", o.stream_path, "Stream file ('-' for stdin)")->envname("DYNDSG_STREAM");
  verify->add_option("--cq", o.verify_cq, "Required ratio is 1 - cq * eps")->envname("DYNDSG_CQ");
  add_common(verify, o);

  auto* bench = app.add_subcommand("bench", "Random insert/delete workload on one engine; reports work counters");
  bench->add_option("--n", o.bench_n, "Vertex count")->envname("DYNDSG_N");
  bench->add_option("--m", o.bench_m, "Number of insertions (then as many deletions)")->envname("DYNDSG_M");
  add_common(bench, o);

  auto* orc = app.add_subcommand("oracle", "Exact optimum of the stream's final graph (small n)");
  orc->add_option("--stream", o.stream_path, "Stream file ('-' for stdin)")->envname("DYNDSG_STREAM");
  add_common(orc, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitInput;
  }

  try {
    if (run->parsed()) {
      emit(o, dyndsg::to_json_lines(dyndsg::run(load(o), run_config(o))));
    } else if (verify->parsed()) {
      const auto report = dyndsg::verify(load(o), run_config(o));
      emit(o, dyndsg::to_json_lines(report));
      if (!report.passed()) return kExitVerify;
    } else if (bench->parsed()) {
      dyndsg::BenchConfig bc;
      bc.n = o.bench_n;
      bc.m = o.bench_m;
      bc.epsilon = o.eps.value_or(0.2);
      bc.seed = o.seed;
      bc.engine.alpha_c = o.alpha_c;
      bc.engine.loop_c = o.loop_c;
      emit(o, dyndsg::to_json(dyndsg::run_bench(bc), o.timings));
    } else if (orc->parsed()) {
      emit(o, oracle_report(load(o)));
    }
  } catch (const dyndsg::Error& e) {
    std::fprintf(stderr, "dyndsg: %s\n", e.what());
    return kExitInput;
  }
  return 0;
}
