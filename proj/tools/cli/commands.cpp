#include "commands.hpp"

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "bench.hpp"
#include "geode/error.hpp"
#include "geode/graph.hpp"

namespace geode::cli {

using nlohmann::json;

namespace {

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

double parse_real(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size() && s.find_first_not_of(" \t", used) != std::string::npos) throw 0;
    return v;
  } catch (...) {
    throw ConfigError(fmt::format("{}: '{}' is not a number", what, s));
  }
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(fmt::format("cannot write '{}'", path));
  return out;
}

void check_digest(const LatentGraph& graph, const Decoder& decoder) {
  if (decoder.input_dim() != graph.dim()) {
    throw DimensionError(fmt::format("decoder latent dimension {} does not match graph dimension {}",
                                     decoder.input_dim(), graph.dim()));
  }
  if (!graph.metric_digest().empty() &&
      metric_digest(decoder, graph.metric_config()) != graph.metric_digest()) {
    throw SchemaError("graph edge weights were computed with a different decoder or metric "
                      "configuration; rebuild the graph");
  }
}

HeuristicKind heuristic_from(const std::string& name) {
  const auto h = parse_heuristic(name);
  if (!h) throw ConfigError(fmt::format("unknown heuristic '{}'", name));
  return *h;
}

// Maps an endpoint given as an id or as a raw latent vector onto a graph node,
// inserting the vector when it is not already a node.
NodeId resolve_endpoint(LatentGraph& graph, const Decoder& decoder,
                        const std::optional<std::uint32_t>& id,
                        const std::optional<std::string>& vec, int k, const char* which) {
  if (id && vec) throw ConfigError(fmt::format("give either --{0}-id or --{0}, not both", which));
  if (id) {
    if (*id >= graph.node_count()) {
      throw ConfigError(fmt::format("--{}-id {} out of range ({} nodes)", which, *id,
                                    graph.node_count()));
    }
    return *id;
  }
  if (!vec) throw ConfigError(fmt::format("missing --{0}-id or --{0}", which));
  return insert_node(graph, decoder, parse_vector(*vec), k, graph.metric_config());
}

void write_interpolation(std::ostream& out, const std::vector<InterpolationPoint>& points,
                         bool emit_x) {
  if (points.empty()) return;
  out << "edge,t";
  for (Eigen::Index d = 0; d < points.front().z.size(); ++d) out << ",z" << d + 1;
  out << ",phi";
  if (emit_x) {
    for (Eigen::Index d = 0; d < points.front().x.size(); ++d) out << ",x" << d + 1;
  }
  out << '\n';
  for (const InterpolationPoint& p : points) {
    out << p.edge << fmt::format(",{:.17g}", p.t);
    for (Eigen::Index d = 0; d < p.z.size(); ++d) out << fmt::format(",{:.17g}", p.z[d]);
    out << fmt::format(",{:.17g}", p.phi);
    if (emit_x) {
      for (Eigen::Index d = 0; d < p.x.size(); ++d) out << fmt::format(",{:.17g}", p.x[d]);
    }
    out << '\n';
  }
}

}  // namespace

// ---------------------------------------------------------------------------

Vector parse_vector(const std::string& text) {
  const auto parts = split(text, ',');
  if (parts.empty()) throw ConfigError("empty vector");
  Vector v(static_cast<Eigen::Index>(parts.size()));
  for (std::size_t i = 0; i < parts.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = parse_real(parts[i], "vector component");
  }
  return v;
}

std::unique_ptr<Decoder> open_decoder(const std::string& spec) {
  constexpr std::string_view kPrefix = "builtin:";
  if (spec.rfind(kPrefix, 0) != 0) return std::make_unique<DecoderModel>(load_decoder(spec));

  const auto parts = split(spec.substr(kPrefix.size()), ':');
  const std::string kind = parts.empty() ? "" : parts[0];
  const auto args = [&](std::size_t i) {
    if (parts.size() <= i) throw ConfigError(fmt::format("decoder '{}' is missing parameters", spec));
    std::vector<double> v;
    for (const auto& s : split(parts[i], ',')) v.push_back(parse_real(s, "decoder parameter"));
    return v;
  };
  if (kind == "identity") {
    const auto a = args(1);
    if (a.size() != 1 || a[0] < 1) throw ConfigError("builtin:identity:N needs N >= 1");
    return std::make_unique<AnalyticDecoder>(AnalyticDecoder::identity(static_cast<int>(a[0])));
  }
  if (kind == "linear") {
    const auto shape = args(1);
    const auto w = args(2);
    if (shape.size() != 2 || shape[0] < 1 || shape[1] < 1 ||
        w.size() != static_cast<std::size_t>(shape[0] * shape[1])) {
      throw ConfigError("builtin:linear:ROWS,COLS:w... needs ROWS*COLS weights");
    }
    return std::make_unique<AnalyticDecoder>(AnalyticDecoder::linear(
        Eigen::Map<const RowMajorMatrix>(w.data(), static_cast<Eigen::Index>(shape[0]),
                                         static_cast<Eigen::Index>(shape[1]))));
  }
  if (kind == "parabola") {
    const auto a = args(1);
    if (a.size() != 1) throw ConfigError("builtin:parabola:A takes one parameter");
    return std::make_unique<AnalyticDecoder>(AnalyticDecoder::parabola(a[0]));
  }
  if (kind == "sine-ridge" || kind == "sine_ridge") {
    const auto a = args(1);
    if (a.size() != 2) throw ConfigError("builtin:sine-ridge:AMPLITUDE,FREQUENCY takes two parameters");
    return std::make_unique<AnalyticDecoder>(AnalyticDecoder::sine_ridge(a[0], a[1]));
  }
  throw ConfigError(fmt::format("unknown built-in decoder '{}'", kind));
}

MetricConfig MetricFlags::to_config() const {
  MetricConfig cfg;
  if (jacobian == "fd") {
    cfg.jacobian_mode = JacobianMode::finite_difference;
  } else if (jacobian == "stoch") {
    cfg.jacobian_mode = JacobianMode::stochastic;
  } else {
    throw ConfigError(fmt::format("--jacobian must be fd or stoch, got '{}'", jacobian));
  }
  cfg.fd_step = fd_step;
  cfg.stoch_sigma = sigma;
  cfg.stoch_samples = mc_samples;
  cfg.curve_samples = edge_samples;
  cfg.rng_seed = seed;
  return cfg;
}

// ---------------------------------------------------------------------------

int cmd_build(const BuildOptions& opts, std::ostream& out, std::ostream&) {
  const auto decoder = open_decoder(opts.decoder);
  auto nodes = load_latents_csv(opts.latents, {.header = !opts.headerless});
  if (nodes.empty()) throw SchemaError(fmt::format("{}: no latent rows", opts.latents));
  if (nodes.front().z.size() != decoder->input_dim()) {
    throw DimensionError(fmt::format("{}: latents have dimension {}, decoder expects {}",
                                     opts.latents, nodes.front().z.size(), decoder->input_dim()));
  }
  const MetricConfig cfg = opts.metric.to_config();

  const auto t0 = std::chrono::steady_clock::now();
  const LatentGraph graph = build_graph(*decoder, std::move(nodes), opts.neighbors, cfg, opts.workers);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  auto file = open_out(opts.out);
  file << dump_graph(graph);
  if (!file) throw IoError(fmt::format("failed writing '{}'", opts.out));

  if (opts.json) {
    out << json{{"nodes", graph.node_count()}, {"edges", graph.edge_count()}, {"build_s", seconds}}
               .dump()
        << '\n';
  } else {
    out << fmt::format("nodes {}  edges {}  build {:.3f} s  -> {}\n", graph.node_count(),
                       graph.edge_count(), seconds, opts.out);
  }
  return kOk;
}

int cmd_query(const QueryOptions& opts, std::ostream& out, std::ostream& err) {
  LatentGraph graph = load_graph(opts.graph);
  const auto decoder = open_decoder(opts.decoder);
  check_digest(graph, *decoder);
  const HeuristicKind heuristic = heuristic_from(opts.heuristic);
  const int k = opts.neighbors.value_or(graph.k());
  if (opts.interpolate < 0) throw ConfigError("--interpolate must be >= 1");
  if (opts.interpolate > 0 && opts.interp_out.empty() && opts.out.empty()) {
    throw ConfigError("--interpolate needs --out or --interp-out");
  }

  const std::size_t before = graph.node_count();
  const NodeId start = resolve_endpoint(graph, *decoder, opts.start_id, opts.start, k, "start");
  const NodeId target = resolve_endpoint(graph, *decoder, opts.target_id, opts.target, k, "target");
  if (opts.persist_insert && graph.node_count() != before) save_graph(graph, opts.graph);

  const SearchResult result =
      astar(graph, *decoder, start, target, heuristic, graph.metric_config());
  if (!result.found()) {
    err << fmt::format("no path from {} to {}: explored component of size {}\n", start, target,
                       result.explored);
    return kNoPath;
  }
  const GeodesicPath& path = *result.path;
  const std::string doc = path_to_json(path).dump() + "\n";
  if (opts.out.empty()) {
    out << doc;
  } else {
    auto file = open_out(opts.out);
    file << doc;
    if (opts.json) {
      out << doc;
    } else {
      out << fmt::format("path {} -> {}: {} nodes, length {:.10g}, expansions {}, {:.6f} s\n",
                         start, target, path.node_ids.size(), path.total_length, path.expansions,
                         path.elapsed_s);
    }
  }

  if (opts.interpolate > 0) {
    const std::string csv_path = opts.interp_out.empty() ? opts.out + ".interp.csv" : opts.interp_out;
    auto file = open_out(csv_path);
    write_interpolation(file, interpolate_path(*decoder, path, opts.interpolate, graph.metric_config()),
                        opts.emit_x);
  }
  return kOk;
}

int cmd_mf(const MfOptions& opts, std::ostream& out, std::ostream&) {
  const auto decoder = open_decoder(opts.decoder);
  const Vector b = parse_vector(opts.bounds);
  if (b.size() != 4) throw ConfigError("--bounds takes xmin,xmax,ymin,ymax");
  MetricConfig cfg = opts.metric.to_config();
  cfg.validate(decoder->input_dim());
  const MfGrid grid = mf_grid(*decoder, {b[0], b[1], b[2], b[3]}, opts.res, cfg, opts.workers);
  if (opts.out.empty()) {
    write_mf_csv(out, grid);
  } else {
    auto file = open_out(opts.out);
    write_mf_csv(file, grid);
  }
  return kOk;
}

int cmd_baseline(const BaselineOptions& opts, std::ostream& out, std::ostream& err) {
  const auto decoder = open_decoder(opts.decoder);
  json doc = {{"format", "geode-baseline-v1"}};

  if (opts.graph.empty()) {
    if (!opts.start || !opts.target) {
      throw ConfigError("without --graph, give both endpoints as --start/--target vectors");
    }
    const MetricConfig cfg = opts.metric.to_config();
    cfg.validate(decoder->input_dim());
    doc["euclidean"] = euclidean_baseline(*decoder, parse_vector(*opts.start),
                                          parse_vector(*opts.target), cfg);
  } else {
    LatentGraph graph = load_graph(opts.graph);
    check_digest(graph, *decoder);
    const int k = opts.neighbors.value_or(graph.k());
    const NodeId start = resolve_endpoint(graph, *decoder, opts.start_id, opts.start, k, "start");
    const NodeId target = resolve_endpoint(graph, *decoder, opts.target_id, opts.target, k, "target");
    const MetricConfig& cfg = graph.metric_config();
    doc["euclidean"] = euclidean_baseline(*decoder, graph.node(start).z, graph.node(target).z, cfg);
    const SearchResult piece = piecewise_euclidean_baseline(graph, *decoder, start, target, cfg);
    const SearchResult geo = astar(graph, *decoder, start, target, HeuristicKind::obs_chord, cfg);
    if (!piece.found()) {
      err << fmt::format("no path from {} to {}: explored component of size {}\n", start, target,
                         piece.explored);
      return kNoPath;
    }
    doc["piecewise"] = path_to_json(*piece.path);
    doc["geodesic_length"] = geo.path->total_length;
  }

  if (opts.json) {
    out << doc.dump(2) << '\n';
  } else {
    out << fmt::format("euclidean interpolation  {:.10g}\n", doc["euclidean"].get<double>());
    if (doc.contains("piecewise")) {
      out << fmt::format("piecewise euclidean      {:.10g}  ({} nodes)\n",
                         doc["piecewise"]["total_length"].get<double>(),
                         doc["piecewise"]["node_ids"].size());
      out << fmt::format("graph geodesic           {:.10g}\n", doc["geodesic_length"].get<double>());
    }
  }
  return kOk;
}

int cmd_bench(const BenchCliOptions& opts, std::ostream& out, std::ostream&) {
  const LatentGraph graph = load_graph(opts.graph);
  const auto decoder = open_decoder(opts.decoder);
  check_digest(graph, *decoder);
  const BenchSummary summary = run_bench(
      graph, *decoder, {opts.pairs, opts.seed, heuristic_from(opts.heuristic), opts.workers});
  const bool timing = !opts.no_timing;
  const std::string doc = bench_to_json(summary, timing).dump(2) + "\n";
  if (!opts.out.empty()) {
    auto file = open_out(opts.out);
    file << doc;
  }
  if (opts.json) {
    out << doc;
  } else {
    print_bench_table(out, summary, timing);
  }
  return kOk;
}

// ---------------------------------------------------------------------------

namespace {

void add_metric_flags(CLI::App& cmd, MetricFlags& m, bool samples_required) {
  auto* samples = cmd.add_option("--edge-samples", m.edge_samples,
                                 "Sampling points per straight segment");
  if (samples_required) samples->required();
  samples->check(CLI::PositiveNumber);
  cmd.add_option("--jacobian", m.jacobian, "Jacobian estimator")
      ->check(CLI::IsMember({"fd", "stoch"}));
  cmd.add_option("--fd-step", m.fd_step, "Central-difference step");
  cmd.add_option("--sigma", m.sigma, "Stochastic Jacobian perturbation scale");
  cmd.add_option("--mc-samples", m.mc_samples, "Stochastic Jacobian sample count");
  cmd.add_option("--seed", m.seed, "Seed for stochastic Jacobians");
}

void add_endpoints(CLI::App& cmd, std::optional<std::uint32_t>& start_id,
                   std::optional<std::uint32_t>& target_id, std::optional<std::string>& start,
                   std::optional<std::string>& target) {
  cmd.add_option("--start-id", start_id, "Start node id");
  cmd.add_option("--target-id", target_id, "Target node id");
  cmd.add_option("--start", start, "Start latent vector \"v1,v2,...\"");
  cmd.add_option("--target", target, "Target latent vector \"v1,v2,...\"");
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"geode: graph-based geodesics in the latent space of a generative model"};
  app.require_subcommand(1);

  BuildOptions build;
  auto* build_cmd = app.add_subcommand("build", "Build a k-NN latent graph with Riemannian weights");
  build_cmd->add_option("--decoder", build.decoder, "Decoder file or builtin:...")->required();
  build_cmd->add_option("--latents", build.latents, "Latent node CSV")->required();
  build_cmd->add_option("--neighbors", build.neighbors, "Nearest neighbours per node")
      ->required()
      ->check(CLI::PositiveNumber);
  build_cmd->add_option("--out", build.out, "Output graph file")->required();
  build_cmd->add_flag("--headerless", build.headerless, "Latent CSV has no header row");
  build_cmd->add_option("--workers", build.workers, "Worker threads (0 = all cores)");
  build_cmd->add_flag("--json", build.json, "Print the summary as JSON");
  add_metric_flags(*build_cmd, build.metric, true);

  QueryOptions query;
  auto* query_cmd = app.add_subcommand("query", "Find the graph geodesic between two points");
  query_cmd->add_option("--graph", query.graph, "Graph file")->required();
  query_cmd->add_option("--decoder", query.decoder, "Decoder file or builtin:...")->required();
  add_endpoints(*query_cmd, query.start_id, query.target_id, query.start, query.target);
  query_cmd->add_option("--neighbors", query.neighbors, "Neighbours for inserted query points");
  query_cmd->add_option("--heuristic", query.heuristic, "zero, obs-chord or latent-line")
      ->check(CLI::IsMember({"zero", "obs-chord", "latent-line"}));
  query_cmd->add_option("--out", query.out, "Path JSON output (default stdout)");
  query_cmd->add_option("--interpolate", query.interpolate, "Decoded points per edge");
  query_cmd->add_option("--interp-out", query.interp_out, "Interpolation CSV output");
  query_cmd->add_flag("--emit-x", query.emit_x, "Include decoded observations in the CSV");
  query_cmd->add_flag("--persist-insert", query.persist_insert,
                      "Save inserted query points back into the graph file");
  query_cmd->add_flag("--json", query.json, "Echo the path JSON to stdout");

  MfOptions mf;
  auto* mf_cmd = app.add_subcommand("mf", "Magnification-factor grid over a 2-D latent box");
  mf_cmd->add_option("--decoder", mf.decoder, "Decoder file or builtin:...")->required();
  mf_cmd->add_option("--bounds", mf.bounds, "xmin,xmax,ymin,ymax");
  mf_cmd->add_option("--res", mf.res, "Cells per axis")->check(CLI::PositiveNumber);
  mf_cmd->add_option("--out", mf.out, "CSV output (default stdout)");
  mf_cmd->add_option("--workers", mf.workers, "Worker threads (0 = all cores)");
  add_metric_flags(*mf_cmd, mf.metric, false);

  BaselineOptions baseline;
  auto* baseline_cmd = app.add_subcommand("baseline", "Euclidean and piecewise-Euclidean baselines");
  baseline_cmd->add_option("--graph", baseline.graph, "Graph file");
  baseline_cmd->add_option("--decoder", baseline.decoder, "Decoder file or builtin:...")->required();
  add_endpoints(*baseline_cmd, baseline.start_id, baseline.target_id, baseline.start, baseline.target);
  baseline_cmd->add_option("--neighbors", baseline.neighbors, "Neighbours for inserted query points");
  baseline_cmd->add_flag("--json", baseline.json, "Print JSON");
  add_metric_flags(*baseline_cmd, baseline.metric, false);

  BenchCliOptions bench;
  auto* bench_cmd = app.add_subcommand("bench", "Geodesic vs baseline statistics on random pairs");
  bench_cmd->add_option("--graph", bench.graph, "Graph file")->required();
  bench_cmd->add_option("--decoder", bench.decoder, "Decoder file or builtin:...")->required();
  bench_cmd->add_option("--pairs", bench.pairs, "Number of random node pairs");
  bench_cmd->add_option("--seed", bench.seed, "Pair sampling seed");
  bench_cmd->add_option("--heuristic", bench.heuristic, "zero, obs-chord or latent-line")
      ->check(CLI::IsMember({"zero", "obs-chord", "latent-line"}));
  bench_cmd->add_option("--workers", bench.workers, "Worker threads (0 = all cores)");
  bench_cmd->add_option("--out", bench.out, "Summary JSON output");
  bench_cmd->add_flag("--json", bench.json, "Print the summary JSON to stdout");
  bench_cmd->add_flag("--no-timing", bench.no_timing, "Leave wall-clock fields out of the output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help(e.get_name() == "--help" && app.get_subcommands().size() == 1
                        ? app.get_subcommands().front()->get_name()
                        : "");
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    err << "run with --help for usage\n";
    return kUsage;
  }

  try {
    if (*build_cmd) return cmd_build(build, out, err);
    if (*query_cmd) return cmd_query(query, out, err);
    if (*mf_cmd) return cmd_mf(mf, out, err);
    if (*baseline_cmd) return cmd_baseline(baseline, out, err);
    if (*bench_cmd) return cmd_bench(bench, out, err);
  } catch (const SchemaError& e) {
    err << "schema error: " << e.what() << '\n';
    return kSchema;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return kSchema;
  } catch (const DimensionError& e) {
    err << "dimension error: " << e.what() << '\n';
    return kDimension;
  } catch (const ConfigError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kUsage;
}

}  // namespace geode::cli
