#include "erstruct/pipeline.hpp"

#include <string>

namespace erstruct {

PreparedSpectrum prepare_spectrum(GenotypeSource& source, const PipelineOptions& options) {
  auto note = [&](const std::string& msg) {
    if (options.progress) options.progress(msg);
  };
  PreparedSpectrum out;
  note("pass 1/2: marker statistics (n=" + std::to_string(source.samples()) +
       ", p=" + std::to_string(source.markers()) + ")");
  out.stats = filter_markers(marker_stats(source, options.block_width), options.maf_min);
  note("retained " + std::to_string(out.stats.retained()) + " markers");

  note("pass 2/2: accumulating Gram matrix");
  const Standardizer standardizer = build_standardizer(out.stats);
  out.gram = accumulate_gram(source, standardizer, options.block_width, options.threads);

  note("eigendecomposition");
  out.spectrum = eigen_decompose(out.gram);
  return out;
}

}  // namespace erstruct
