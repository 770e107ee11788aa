#include "erstruct/genotype_io.hpp"

#include "erstruct/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <string_view>

namespace erstruct {

namespace {

// 2-bit code -> minor-allele count, indexed by the code value.
constexpr std::array<std::int8_t, 4> kDecode = {2, kMissing, 1, 0};

constexpr unsigned char encode_one(std::int8_t g) {
  switch (g) {
    case 2: return 0b00;
    case 1: return 0b10;
    case 0: return 0b11;
    default: return 0b01;
  }
}

Index count_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  Index lines = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") != std::string::npos) ++lines;
  }
  return lines;
}

Index bytes_for(Index samples) { return (samples + 3) / 4; }

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

MemorySource::MemorySource(GenotypeBlock matrix) : matrix_(std::move(matrix)) {}

bool MemorySource::next_block(Index max_width, GenotypeBlock& block) {
  if (cursor_ >= matrix_.cols()) return false;
  const Index width = std::min(std::max<Index>(max_width, 1), matrix_.cols() - cursor_);
  block = matrix_.middleCols(cursor_, width);
  cursor_ += width;
  return true;
}

void decode_plink_marker(const unsigned char* bytes, Index samples, std::int8_t* out) {
  for (Index i = 0; i < samples; ++i) {
    const unsigned code = (bytes[i >> 2] >> ((i & 3) * 2)) & 0b11;
    out[i] = kDecode[code];
  }
}

void encode_plink_marker(const std::int8_t* genotypes, Index samples, unsigned char* out) {
  std::fill(out, out + bytes_for(samples), 0);
  for (Index i = 0; i < samples; ++i) {
    out[i >> 2] |= static_cast<unsigned char>(encode_one(genotypes[i]) << ((i & 3) * 2));
  }
}

PlinkSource::PlinkSource(const std::filesystem::path& bed, Index samples, Index markers)
    : samples_(samples), markers_(markers), bytes_per_marker_(bytes_for(samples)) {
  bed_.open(bed, std::ios::binary);
  if (!bed_) throw Error(ErrorCode::Io, "cannot open " + bed.string());

  std::array<char, 3> header{};
  bed_.read(header.data(), 3);
  if (bed_.gcount() < 2 || static_cast<unsigned char>(header[0]) != 0x6C ||
      static_cast<unsigned char>(header[1]) != 0x1B) {
    throw Error(ErrorCode::BadMagic, bed.string() + " is not a PLINK .bed file");
  }
  if (bed_.gcount() < 3) throw Error(ErrorCode::TruncatedPayload, bed.string() + ": no mode byte");
  if (header[2] == 0x00) {
    throw Error(ErrorCode::SampleMajorUnsupported, bed.string() + " is sample-major");
  }
  if (header[2] != 0x01) throw Error(ErrorCode::BadMagic, bed.string() + ": unknown mode byte");

  const auto expected = static_cast<std::uintmax_t>(3 + markers_ * bytes_per_marker_);
  const auto actual = std::filesystem::file_size(bed);
  if (actual != expected) {
    std::ostringstream msg;
    msg << bed.string() << ": expected " << expected << " bytes for n=" << samples_
        << ", p=" << markers_ << ", found " << actual;
    throw Error(ErrorCode::TruncatedPayload, msg.str());
  }
}

void PlinkSource::rewind() {
  bed_.clear();
  bed_.seekg(3, std::ios::beg);
  cursor_ = 0;
}

bool PlinkSource::next_block(Index max_width, GenotypeBlock& block) {
  if (cursor_ >= markers_) return false;
  const Index width = std::min(std::max<Index>(max_width, 1), markers_ - cursor_);
  buffer_.resize(static_cast<std::size_t>(width * bytes_per_marker_));
  if (cursor_ == 0) bed_.seekg(3, std::ios::beg);
  bed_.read(reinterpret_cast<char*>(buffer_.data()), static_cast<std::streamsize>(buffer_.size()));
  if (bed_.gcount() != static_cast<std::streamsize>(buffer_.size())) {
    throw Error(ErrorCode::TruncatedPayload, "short read from .bed");
  }
  block.resize(samples_, width);
  for (Index j = 0; j < width; ++j) {
    decode_plink_marker(buffer_.data() + j * bytes_per_marker_, samples_, block.col(j).data());
  }
  cursor_ += width;
  return true;
}

std::unique_ptr<GenotypeSource> open_plink(const std::filesystem::path& bed,
                                           const std::filesystem::path& bim,
                                           const std::filesystem::path& fam) {
  const Index n = count_lines(fam);
  const Index p = count_lines(bim);
  return std::make_unique<PlinkSource>(bed, n, p);
}

std::unique_ptr<GenotypeSource> open_plink(const std::string& prefix) {
  return open_plink(prefix + ".bed", prefix + ".bim", prefix + ".fam");
}

std::unique_ptr<GenotypeSource> open_matrix_text(const std::filesystem::path& path,
                                                 char delimiter) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());

  std::vector<std::int8_t> values;
  Index rows = 0;
  Index cols = -1;
  std::string line;
  Index line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    Index fields = 0;
    std::string_view rest(line);
    for (;;) {
      const auto cut = rest.find(delimiter);
      const std::string_view token = trim(rest.substr(0, cut));
      std::int8_t g;
      if (token == "0") g = 0;
      else if (token == "1") g = 1;
      else if (token == "2") g = 2;
      else if (token == "NA") g = kMissing;
      else {
        throw Error(ErrorCode::InvalidToken, path.string() + ":" + std::to_string(line_no) +
                                                 ": invalid genotype '" + std::string(token) + "'");
      }
      values.push_back(g);
      ++fields;
      if (cut == std::string_view::npos) break;
      rest.remove_prefix(cut + 1);
    }
    if (cols < 0) cols = fields;
    if (fields != cols) {
      throw Error(ErrorCode::RaggedRows, path.string() + ":" + std::to_string(line_no) + ": " +
                                             std::to_string(fields) + " fields, expected " +
                                             std::to_string(cols));
    }
    ++rows;
  }
  if (cols < 0) cols = 0;

  // values is row-major (sample by sample).
  GenotypeBlock matrix(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) matrix(i, j) = values[static_cast<std::size_t>(i * cols + j)];
  return std::make_unique<MemorySource>(std::move(matrix));
}

void write_plink(const std::string& prefix, const GenotypeBlock& matrix,
                 const std::vector<std::string>& family_ids) {
  const Index n = matrix.rows();
  const Index p = matrix.cols();
  if (!family_ids.empty() && static_cast<Index>(family_ids.size()) != n) {
    throw Error(ErrorCode::DimensionMismatch, "family id count does not match sample count");
  }

  std::ofstream bed(prefix + ".bed", std::ios::binary);
  if (!bed) throw Error(ErrorCode::Io, "cannot write " + prefix + ".bed");
  const unsigned char header[3] = {0x6C, 0x1B, 0x01};
  bed.write(reinterpret_cast<const char*>(header), 3);
  std::vector<unsigned char> record(static_cast<std::size_t>(bytes_for(n)));
  for (Index j = 0; j < p; ++j) {
    encode_plink_marker(matrix.col(j).data(), n, record.data());
    bed.write(reinterpret_cast<const char*>(record.data()),
              static_cast<std::streamsize>(record.size()));
  }

  std::ofstream bim(prefix + ".bim");
  if (!bim) throw Error(ErrorCode::Io, "cannot write " + prefix + ".bim");
  for (Index j = 0; j < p; ++j) bim << "1\tm" << (j + 1) << "\t0\t" << (j + 1) << "\tA\tG\n";

  std::ofstream fam(prefix + ".fam");
  if (!fam) throw Error(ErrorCode::Io, "cannot write " + prefix + ".fam");
  for (Index i = 0; i < n; ++i) {
    fam << (family_ids.empty() ? std::string("0") : family_ids[static_cast<std::size_t>(i)])
        << " s" << (i + 1) << " 0 0 0 -9\n";
  }
  if (!bed || !bim || !fam) throw Error(ErrorCode::Io, "write failed for " + prefix);
}

void write_matrix_text(const std::filesystem::path& path, const GenotypeBlock& matrix,
                       char delimiter) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  std::string row;
  for (Index i = 0; i < matrix.rows(); ++i) {
    row.clear();
    for (Index j = 0; j < matrix.cols(); ++j) {
      if (j > 0) row += delimiter;
      const std::int8_t g = matrix(i, j);
      if (g == kMissing) row += "NA";
      else row += static_cast<char>('0' + g);
    }
    row += '\n';
    out << row;
  }
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

MarkerStats marker_stats(GenotypeSource& source, Index block_width) {
  const Index n = source.samples();
  const Index p = source.markers();
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "marker_stats needs at least 2 samples");

  MarkerStats stats;
  stats.mu_hat = Eigen::VectorXd::Zero(p);
  stats.n_called.setZero(p);
  stats.maf = Eigen::VectorXd::Zero(p);
  stats.keep.setConstant(p, false);

  source.rewind();
  GenotypeBlock block;
  while (source.next_block(block_width, block)) {
    const Index first = source.position() - block.cols();
    for (Index j = 0; j < block.cols(); ++j) {
      std::int64_t sum = 0;
      std::int64_t called = 0;
      for (Index i = 0; i < n; ++i) {
        const std::int8_t g = block(i, j);
        if (g != kMissing) {
          sum += g;
          ++called;
        }
      }
      const Index m = first + j;
      stats.n_called(m) = called;
      if (called == 0) continue;
      const double mu = static_cast<double>(sum) / static_cast<double>(called);
      stats.mu_hat(m) = mu;
      stats.maf(m) = std::min(mu / 2.0, 1.0 - mu / 2.0);
      stats.keep(m) = mu > 0.0 && mu < 2.0;
    }
  }
  return stats;
}

MarkerStats filter_markers(MarkerStats stats, double maf_min) {
  if (!(maf_min >= 0.0)) throw Error(ErrorCode::InvalidArgument, "maf_min must be >= 0");
  for (Index j = 0; j < stats.markers(); ++j) {
    stats.keep(j) = stats.keep(j) && stats.maf(j) >= maf_min;
  }
  if (stats.retained() == 0) {
    std::ostringstream msg;
    msg << "no marker has MAF >= " << maf_min << " (of " << stats.markers() << ")";
    throw Error(ErrorCode::AllMarkersDropped, msg.str());
  }
  return stats;
}

}  // namespace erstruct
