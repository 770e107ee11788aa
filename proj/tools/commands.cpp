#include "commands.hpp"

#include "erstruct/error.hpp"
#include "erstruct/estimator.hpp"
#include "erstruct/goe_null.hpp"
#include "erstruct/pipeline.hpp"
#include "erstruct/simulator.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <ostream>

namespace erstruct::cli {

namespace {

namespace fs = std::filesystem;

void require_file(const std::string& path) {
  if (!fs::is_regular_file(path)) throw Error(ErrorCode::Io, "input file not found: " + path);
}

void validate_common(const RunConfig& c) {
  if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw Error(ErrorCode::InvalidArgument, "--alpha must be in (0, 1)");
  if (c.m < 1) throw Error(ErrorCode::InvalidArgument, "--m must be at least 1");
  if (c.block_width < 1) throw Error(ErrorCode::InvalidArgument, "--block-width must be at least 1");
}

std::unique_ptr<GenotypeSource> open_input(const RunConfig& c) {
  const int chosen = !c.bfile.empty() + !c.bed.empty() + !c.matrix.empty();
  if (chosen != 1) {
    throw Error(ErrorCode::InvalidArgument, "give exactly one of --bfile, --bed/--bim/--fam, --matrix");
  }
  if (!c.bfile.empty()) {
    for (const char* ext : {".bed", ".bim", ".fam"}) require_file(c.bfile + ext);
    return open_plink(c.bfile);
  }
  if (!c.bed.empty()) {
    if (c.bim.empty() || c.fam.empty()) throw Error(ErrorCode::InvalidArgument, "--bed needs --bim and --fam");
    require_file(c.bed);
    require_file(c.bim);
    require_file(c.fam);
    return open_plink(c.bed, c.bim, c.fam);
  }
  require_file(c.matrix);
  return open_matrix_text(c.matrix, c.delimiter);
}

std::string report_path(const RunConfig& c) { return c.report.empty() ? c.out + ".report.json" : c.report; }
std::string scree_path(const RunConfig& c) { return c.scree.empty() ? c.out + ".scree.tsv" : c.scree; }

void write_scree_file(const std::string& path, const Spectrum& spectrum) {
  std::ofstream tsv(path);
  if (!tsv) throw Error(ErrorCode::Io, "cannot write " + path);
  write_scree_tsv(tsv, spectrum);
}

void warn_low_replicates(Index m, double alpha, std::ostream& err) {
  if (replicate_count_low(m, alpha)) {
    err << "warning: m * alpha = " << static_cast<double>(m) * alpha
        << " < 10; the critical value is an extreme order statistic and will be noisy."
           " Consider a larger --m.\n";
  }
}

ProgressFn progress_to(std::ostream& err) {
  return [&err](std::string_view msg) { err << "[erstruct] " << msg << '\n'; };
}

template <typename Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
  }
  return kInputError;
}

}  // namespace

nlohmann::json config_to_json(const RunConfig& c) {
  nlohmann::json j;
  j["command"] = c.command;
  if (!c.bfile.empty()) j["bfile"] = c.bfile;
  if (!c.bed.empty()) j["bed"] = c.bed, j["bim"] = c.bim, j["fam"] = c.fam;
  if (!c.matrix.empty()) j["matrix"] = c.matrix, j["delimiter"] = std::string(1, c.delimiter);
  if (!c.design.empty()) j["design"] = c.design;
  if (!c.null_cache.empty()) j["null_cache"] = c.null_cache;
  j["alpha"] = c.alpha;
  j["m"] = c.m;
  j["k_coarse"] = c.k_coarse ? nlohmann::json(*c.k_coarse) : nlohmann::json(nullptr);
  j["maf_min"] = c.maf_min;
  j["block_width"] = c.block_width;
  j["seed"] = c.seed ? nlohmann::json(*c.seed) : nlohmann::json(nullptr);
  if (c.n > 0) j["n"] = c.n;
  j["out"] = c.out;
  j["threads"] = c.threads;
  return j;
}

int cmd_estimate(const RunConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    validate_common(config);
    auto source = open_input(config);

    std::optional<NullCache> cache;
    if (!config.null_cache.empty()) {
      require_file(config.null_cache);
      cache = read_null_cache(config.null_cache);
      if (cache->n != source->samples()) {
        throw Error(ErrorCode::CacheDimensionMismatch,
                    "null cache has n=" + std::to_string(cache->n) + " but the data has n=" +
                        std::to_string(source->samples()));
      }
    }

    PipelineOptions options;
    options.maf_min = config.maf_min;
    options.block_width = config.block_width;
    options.threads = config.threads;
    options.progress = progress_to(err);
    const auto start = std::chrono::steady_clock::now();
    PreparedSpectrum prepared = prepare_spectrum(*source, options);
    const Index n = prepared.spectrum.n;
    if (!config.gram_dump.empty()) write_gram(config.gram_dump, prepared.gram);

    const std::uint64_t seed = config.seed.value_or(0);
    if (!cache) {
      err << "[erstruct] building null cache (n=" << n << ", m=" << config.m << ")\n";
      cache = build_null_cache(n, config.m, seed, config.threads);
    }
    warn_low_replicates(cache->m, config.alpha, err);

    const Index k_coarse = config.k_coarse.value_or(default_k_coarse(n));
    const EstimateReport report =
        estimate_k(prepared.spectrum, *cache, prepared.gram.p_used, config.alpha, k_coarse);
    for (const auto& step : report.steps) {
      err << "[erstruct] K=" << step.k << " r=" << step.r_k << " xi=" << step.xi << ' '
          << to_string(step.decision) << '\n';
    }

    nlohmann::json doc = to_json(report);
    doc["provenance"] = {
        {"tool", "erstruct"},
        {"tool_version", kToolVersion},
        {"config", config_to_json(config)},
        {"seeds", {{"null_cache", cache->seed}}},
        {"null_cache_source", config.null_cache.empty() ? "built" : config.null_cache},
        {"markers_total", prepared.stats.markers()},
        {"elapsed_seconds",
         std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()}};
    {
      std::ofstream json(report_path(config));
      if (!json) throw Error(ErrorCode::Io, "cannot write " + report_path(config));
      json << doc.dump(2) << '\n';
    }
    write_scree_file(scree_path(config), prepared.spectrum);

    if (report.failed()) {
      err << "estimation failed: no K in 1.." << k_coarse
          << " passed the look-ahead test"
          << (report.degenerate ? " (degenerate input: zero bulk variance)" : "")
          << "; try a larger --k-coarse or --alpha\n";
      out << "K_hat\tFAILED\n";
      return kEstimationFailed;
    }
    out << "K_hat\t" << *report.k_hat << '\n';
    return kSuccess;
  });
}

int cmd_spectrum(const RunConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    validate_common(config);
    auto source = open_input(config);
    PipelineOptions options;
    options.maf_min = config.maf_min;
    options.block_width = config.block_width;
    options.threads = config.threads;
    options.progress = progress_to(err);
    const PreparedSpectrum prepared = prepare_spectrum(*source, options);
    if (!config.gram_dump.empty()) write_gram(config.gram_dump, prepared.gram);
    write_scree_file(scree_path(config), prepared.spectrum);
    out << "n\t" << prepared.spectrum.n << "\np_used\t" << prepared.gram.p_used << "\nscree\t"
        << scree_path(config) << '\n';
    return kSuccess;
  });
}

int cmd_simulate(const RunConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    if (config.design.empty()) throw Error(ErrorCode::InvalidArgument, "--design is required");
    if (!config.seed) throw Error(ErrorCode::InvalidArgument, "--seed is required");
    require_file(config.design);
    const SimulationDesign design = load_design(config.design);

    SimulationOptions options;
    options.threads = config.threads;
    const SimulatedGenotypes sim = simulate(design, *config.seed, options);

    if (config.format == "plink") {
      std::vector<std::string> families;
      for (Index label : sim.labels) families.push_back("g" + std::to_string(label + 1));
      write_plink(config.out, sim.matrix, families);
    } else if (config.format == "text") {
      write_matrix_text(config.out + ".txt", sim.matrix, config.delimiter);
      std::ofstream labels(config.out + ".labels");
      if (!labels) throw Error(ErrorCode::Io, "cannot write " + config.out + ".labels");
      for (Index label : sim.labels) labels << "g" << (label + 1) << '\n';
    } else {
      throw Error(ErrorCode::InvalidArgument, "--format must be plink or text");
    }
    out << "n\t" << design.samples() << "\np\t" << design.p << "\nK\t" << design.groups() << '\n';
    return kSuccess;
  });
}

int cmd_null_cache(const RunConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    validate_common(config);
    if (!config.seed) throw Error(ErrorCode::InvalidArgument, "--seed is required");
    warn_low_replicates(config.m, config.alpha, err);
    const NullCache cache = build_null_cache(config.n, config.m, *config.seed, config.threads);
    write_null_cache(config.out, cache);
    out << "null_cache\t" << config.out << "\nn\t" << cache.n << "\nm\t" << cache.m << '\n';
    return kSuccess;
  });
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Estimate the number of sub-populations in genotype data from eigenvalue ratios"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  RunConfig config;
  std::string delimiter = ",";
  std::uint64_t seed = 0;

  auto add_input = [&](CLI::App* cmd) {
    cmd->add_option("--bfile", config.bfile, "PLINK prefix (.bed/.bim/.fam)");
    cmd->add_option("--bed", config.bed, "PLINK .bed file");
    cmd->add_option("--bim", config.bim, "PLINK .bim file");
    cmd->add_option("--fam", config.fam, "PLINK .fam file");
    cmd->add_option("--matrix", config.matrix, "delimited text matrix, one row per sample");
    cmd->add_option("--delimiter", delimiter, "text matrix delimiter (use \\t for tab)");
    cmd->add_option("--maf-min", config.maf_min, "drop markers with MAF below this")->capture_default_str();
    cmd->add_option("--block-width", config.block_width, "markers per streamed block")->capture_default_str();
    cmd->add_option("--threads", config.threads, "worker threads (0 = all cores)");
    cmd->add_option("--out", config.out, "output prefix")->capture_default_str();
    cmd->add_option("--emit-scree", config.scree, "scree TSV path (default <out>.scree.tsv)");
    cmd->add_option("--dump-gram", config.gram_dump, "write the Gram matrix to this file");
  };

  auto* estimate = app.add_subcommand("estimate", "estimate the number of sub-populations");
  add_input(estimate);
  estimate->add_option("--alpha", config.alpha, "significance level")->capture_default_str();
  estimate->add_option("--m", config.m, "GOE replicates")->capture_default_str();
  estimate->add_option("--k-coarse", config.k_coarse, "coarse upper bound on K (default floor(n/10))");
  estimate->add_option("--seed", seed, "null cache seed (default 0)");
  estimate->add_option("--null-cache", config.null_cache, "reuse a prebuilt null cache");
  estimate->add_option("--report", config.report, "report JSON path (default <out>.report.json)");

  auto* spectrum = app.add_subcommand("spectrum", "export the eigenvalue spectrum only");
  add_input(spectrum);

  auto* simulate_cmd = app.add_subcommand("simulate", "simulate genotypes from a design document");
  simulate_cmd->add_option("--design", config.design, "design JSON")->required();
  simulate_cmd->add_option("--seed", seed, "simulation seed")->required();
  simulate_cmd->add_option("--out", config.out, "output prefix")->capture_default_str();
  simulate_cmd->add_option("--format", config.format, "plink or text")->capture_default_str();
  simulate_cmd->add_option("--delimiter", delimiter, "text delimiter");
  simulate_cmd->add_option("--threads", config.threads, "worker threads (0 = all cores)");

  auto* cache_cmd = app.add_subcommand("null-cache", "prebuild a GOE null cache");
  cache_cmd->add_option("--n", config.n, "sample count")->required();
  cache_cmd->add_option("--m", config.m, "replicates")->capture_default_str();
  cache_cmd->add_option("--seed", seed, "master seed")->required();
  cache_cmd->add_option("--alpha", config.alpha, "intended significance level (for the m*alpha check)")
      ->capture_default_str();
  cache_cmd->add_option("--out", config.out, "cache file")->required();
  cache_cmd->add_option("--threads", config.threads, "worker threads (0 = all cores)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kSuccess;
  } catch (const CLI::CallForVersion& e) {
    out << kToolVersion << '\n';
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }

  if (delimiter == "\\t" || delimiter == "tab") delimiter = "\t";
  if (delimiter.size() != 1) {
    err << "error: --delimiter must be a single character\n";
    return kInputError;
  }
  config.delimiter = delimiter[0];

  CLI::App* chosen = app.get_subcommands().front();
  config.command = chosen->get_name();
  for (const char* name : {"--seed"}) {
    if (chosen->get_option_no_throw(name) && chosen->count(name) > 0) config.seed = seed;
  }

  if (config.command == "estimate") return cmd_estimate(config, out, err);
  if (config.command == "spectrum") return cmd_spectrum(config, out, err);
  if (config.command == "simulate") return cmd_simulate(config, out, err);
  return cmd_null_cache(config, out, err);
}

}  // namespace erstruct::cli
