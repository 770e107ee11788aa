#pragma once

#include "erstruct/estimator.hpp"
#include "erstruct/genotype_io.hpp"
#include "erstruct/normalize_gram.hpp"
#include "erstruct/spectrum.hpp"

#include <functional>
#include <string_view>

namespace erstruct {

using ProgressFn = std::function<void(std::string_view)>;

struct PipelineOptions {
  double maf_min = 0.05;
  Index block_width = kDefaultBlockWidth;
  unsigned threads = 0;
  ProgressFn progress;  // optional
};

struct PreparedSpectrum {
  MarkerStats stats;
  SymmetricGram gram;
  Spectrum spectrum;
};

/// Pass 1 (statistics + MAF filter), pass 2 (Gram), then the eigensolve.
PreparedSpectrum prepare_spectrum(GenotypeSource& source, const PipelineOptions& options);

}  // namespace erstruct
