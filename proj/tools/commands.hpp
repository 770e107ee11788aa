#pragma once

#include "erstruct/genotype_io.hpp"

#include "json.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace erstruct::cli {

inline constexpr const char* kToolVersion = "1.0.0";

enum ExitCode : int { kSuccess = 0, kInputError = 1, kEstimationFailed = 2 };

struct RunConfig {
  std::string command;

  // genotype input: one of bfile, (bed, bim, fam), matrix
  std::string bfile;
  std::string bed, bim, fam;
  std::string matrix;
  char delimiter = ',';

  std::string design;      // simulate
  std::string null_cache;  // estimate: reuse path

  double alpha = 0.001;
  Index m = 5000;
  std::optional<Index> k_coarse;
  double maf_min = 0.05;
  Index block_width = kDefaultBlockWidth;
  std::optional<std::uint64_t> seed;
  Index n = 0;  // null-cache

  std::string out = "erstruct";  // output prefix (or file for null-cache)
  std::string report;            // default <out>.report.json
  std::string scree;             // default <out>.scree.tsv
  std::string gram_dump;         // optional
  std::string format = "plink";  // simulate: plink | text
  unsigned threads = 0;
};

nlohmann::json config_to_json(const RunConfig& config);

int cmd_estimate(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_spectrum(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_simulate(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_null_cache(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Parses argv and runs the selected subcommand.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace erstruct::cli
