#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "geode/decoder.hpp"
#include "geode/metric.hpp"
#include "geode/search.hpp"

namespace geode::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kSchema = 2,
  kDimension = 3,
  kNoPath = 4,
  kUsage = 64,
};

/// Opens a decoder from a geode-decoder-v1 file, or from one of the built-in
/// analytic decoders:
///   builtin:identity:N
///   builtin:linear:ROWS,COLS:w11,w12,...   (row-major)
///   builtin:parabola:A
///   builtin:sine-ridge:AMPLITUDE,FREQUENCY
std::unique_ptr<Decoder> open_decoder(const std::string& spec);

/// Parses "v1,v2,..." into a vector.
Vector parse_vector(const std::string& text);

struct MetricFlags {
  std::string jacobian = "fd";
  double fd_step = 1e-5;
  double sigma = 1e-3;
  int mc_samples = 1000;
  int edge_samples = 32;
  std::uint64_t seed = 0;

  MetricConfig to_config() const;
};

struct BuildOptions {
  std::string decoder;
  std::string latents;
  std::string out;
  int neighbors = 4;
  bool headerless = false;
  MetricFlags metric;
  int workers = 0;
  bool json = false;
};

struct QueryOptions {
  std::string graph;
  std::string decoder;
  std::string out;
  std::optional<std::uint32_t> start_id, target_id;
  std::optional<std::string> start, target;
  std::optional<int> neighbors;
  std::string heuristic = "obs-chord";
  int interpolate = 0;
  std::string interp_out;
  bool emit_x = false;
  bool persist_insert = false;
  bool json = false;
};

struct MfOptions {
  std::string decoder;
  std::string out;
  std::string bounds = "-1,1,-1,1";
  int res = 64;
  MetricFlags metric;
  int workers = 0;
};

struct BaselineOptions {
  std::string graph;
  std::string decoder;
  std::optional<std::uint32_t> start_id, target_id;
  std::optional<std::string> start, target;
  std::optional<int> neighbors;
  MetricFlags metric;
  bool json = false;
};

struct BenchCliOptions {
  std::string graph;
  std::string decoder;
  std::string out;
  std::size_t pairs = 100;
  std::uint64_t seed = 0;
  std::string heuristic = "obs-chord";
  int workers = 1;
  bool json = false;
  bool no_timing = false;
};

int cmd_build(const BuildOptions& opts, std::ostream& out, std::ostream& err);
int cmd_query(const QueryOptions& opts, std::ostream& out, std::ostream& err);
int cmd_mf(const MfOptions& opts, std::ostream& out, std::ostream& err);
int cmd_baseline(const BaselineOptions& opts, std::ostream& out, std::ostream& err);
int cmd_bench(const BenchCliOptions& opts, std::ostream& out, std::ostream& err);

/// Parses argv, dispatches to a subcommand and maps errors to exit codes.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace geode::cli
