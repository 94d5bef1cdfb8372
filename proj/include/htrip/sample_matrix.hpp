#pragma once

// One realized n x N matrix with the metadata needed to regenerate it, and
// its text container:
//
//   htrip-sample-matrix v1
//   n <rows>
//   N <columns>
//   model <model record>
//   master_seed <unsigned 64-bit>
//   generator_id <text>
//   entries
//   <n*N lines, column-major, %.17g>
//
// Values written with 17 significant digits parse back to the same doubles,
// so the round trip is bit-exact.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "htrip/errors.hpp"
#include "htrip/rng.hpp"
#include "htrip/tailmodels.hpp"

namespace htrip {

struct GenerateOptions {
  std::size_t element_cap = 100'000'000;
};

class SampleMatrix {
 public:
  SampleMatrix(std::size_t n, std::size_t N, std::vector<double> entries, ColumnModel model,
               std::uint64_t master_seed = 0, std::string generator_id = std::string(kGeneratorId))
      : n_(n), N_(N), entries_(std::move(entries)), model_(std::move(model)), master_seed_(master_seed),
        generator_id_(std::move(generator_id)) {
    detail::require(n_ >= 1 && N_ >= 1, "SampleMatrix: n and N must be >= 1");
    detail::require(entries_.size() == n_ * N_, "SampleMatrix: entry count must equal n*N");
    for (double x : entries_) detail::require(std::isfinite(x), "SampleMatrix: entries must be finite");
  }

  /// A matrix given directly by its columns; the model field is a Gaussian
  /// placeholder and the seed is 0.
  static SampleMatrix from_columns(const std::vector<std::vector<double>>& cols) {
    detail::require(!cols.empty() && !cols.front().empty(), "from_columns: empty input");
    const std::size_t n = cols.front().size();
    std::vector<double> e;
    e.reserve(n * cols.size());
    for (const auto& c : cols) {
      detail::require(c.size() == n, "from_columns: ragged columns");
      e.insert(e.end(), c.begin(), c.end());
    }
    return SampleMatrix(n, cols.size(), std::move(e), ColumnModel::gaussian(), 0, "explicit");
  }

  std::size_t rows() const { return n_; }
  std::size_t cols() const { return N_; }
  std::span<const double> column(std::size_t j) const { return {entries_.data() + j * n_, n_}; }
  double operator()(std::size_t i, std::size_t j) const { return entries_[j * n_ + i]; }
  std::span<const double> entries() const { return entries_; }
  const ColumnModel& model() const { return model_; }
  std::uint64_t master_seed() const { return master_seed_; }
  const std::string& generator_id() const { return generator_id_; }

  bool operator==(const SampleMatrix& o) const {
    return n_ == o.n_ && N_ == o.N_ && entries_ == o.entries_ && model_ == o.model_ &&
           master_seed_ == o.master_seed_ && generator_id_ == o.generator_id_;
  }

 private:
  std::size_t n_;
  std::size_t N_;
  std::vector<double> entries_;
  ColumnModel model_;
  std::uint64_t master_seed_;
  std::string generator_id_;
};

/// Column j is drawn from RandomStream(master_seed, j).
inline SampleMatrix generate_matrix(const ColumnModel& model, std::size_t n, std::size_t N,
                                    std::uint64_t master_seed, const GenerateOptions& opt = {}) {
  detail::require(n >= 1 && N >= 1, "generate_matrix: n and N must be >= 1");
  if (N > opt.element_cap / n)
    throw CapError("generate_matrix: n*N exceeds element cap " + std::to_string(opt.element_cap));
  std::vector<double> entries;
  entries.reserve(n * N);
  for (std::size_t j = 0; j < N; ++j) {
    RandomStream stream(master_seed, j);
    const auto col = sample_column(model, n, stream);
    entries.insert(entries.end(), col.begin(), col.end());
  }
  return SampleMatrix(n, N, std::move(entries), model, master_seed);
}

inline void write_matrix(std::ostream& os, const SampleMatrix& a) {
  os << "htrip-sample-matrix v1\n";
  os << "n " << a.rows() << "\nN " << a.cols() << "\n";
  os << "model " << to_record(a.model()) << "\n";
  os << "master_seed " << a.master_seed() << "\n";
  os << "generator_id " << a.generator_id() << "\n";
  os << "entries\n";
  for (double x : a.entries()) os << detail::format_double(x) << "\n";
}

inline SampleMatrix read_matrix(std::istream& is) {
  std::string line;
  auto next = [&](const std::string& what) {
    do {
      if (!std::getline(is, line)) throw FormatError("matrix file: unexpected end before " + what);
    } while (line.empty() || line.front() == '#');
    return line;
  };
  auto field = [&](const std::string& key) {
    next(key);
    if (line.rfind(key + " ", 0) != 0) throw FormatError("matrix file: expected '" + key + "', got '" + line + "'");
    return line.substr(key.size() + 1);
  };
  if (next("header") != "htrip-sample-matrix v1") throw FormatError("matrix file: bad header '" + line + "'");
  std::size_t n = 0, N = 0;
  std::uint64_t seed = 0;
  try {
    n = std::stoull(field("n"));
    N = std::stoull(field("N"));
  } catch (const std::invalid_argument&) {
    throw FormatError("matrix file: bad dimension");
  }
  const ColumnModel model = parse_model_record(field("model"));
  try {
    seed = std::stoull(field("master_seed"));
  } catch (const std::invalid_argument&) {
    throw FormatError("matrix file: bad seed");
  }
  const std::string gen = field("generator_id");
  if (next("entries") != "entries") throw FormatError("matrix file: expected 'entries'");
  std::vector<double> e;
  e.reserve(n * N);
  for (std::size_t i = 0; i < n * N; ++i) e.push_back(detail::parse_double("entry", next("entry")));
  return SampleMatrix(n, N, std::move(e), model, seed, gen);
}

inline void save_matrix(const std::string& path, const SampleMatrix& a) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot open '" + path + "' for writing");
  write_matrix(os, a);
  if (!os) throw FormatError("write failed: '" + path + "'");
}

inline SampleMatrix load_matrix(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open '" + path + "'");
  return read_matrix(is);
}

}  // namespace htrip
