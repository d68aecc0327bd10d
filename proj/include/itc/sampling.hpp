#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "itc/tensor.hpp"

namespace itc {

enum class Replacement { with, without };

/// Ordered list of sampled cells, stored as row-major flat offsets.
class SampleSet {
 public:
  using Bounds = std::vector<std::pair<std::size_t, std::size_t>>;

  SampleSet(Dims dims, std::vector<std::size_t> flat, Replacement replacement,
            std::optional<Bounds> batch_bounds = std::nullopt);

  const Dims& dims() const { return dims_; }
  std::size_t size() const { return flat_.size(); }
  bool empty() const { return flat_.empty(); }
  Replacement replacement() const { return replacement_; }
  const std::vector<std::size_t>& flat() const { return flat_; }
  MultiIndex index(std::size_t i) const { return unflatten(dims_, flat_.at(i)); }
  const std::optional<Bounds>& batch_bounds() const { return bounds_; }

  /// Distinct cells in first-occurrence order.
  std::vector<std::size_t> distinct() const;

  /// Batch b as its own with-replacement set (no bounds).
  SampleSet batch(std::size_t b) const;

 private:
  Dims dims_;
  std::vector<std::size_t> flat_;
  Replacement replacement_;
  std::optional<Bounds> bounds_;
};

SampleSet sample_omega(const Dims& dims, std::size_t n, Replacement replacement,
                       std::uint64_t seed);

/// n2 iid batches of n1 uniform cells each.
SampleSet sample_batches(const Dims& dims, std::size_t n1, std::size_t n2,
                         std::uint64_t seed);

/// Omega as the distinct support of an iid sequence (the coupling used to
/// relate the two sampling models).
SampleSet distinct_support(const SampleSet& s);

DenseTensor project_omega(const DenseTensor& x, const SampleSet& s);

/// (1/n) sum_i (prod d_j) P_{omega_i} A over a with-replacement sample.
DenseTensor sampled_mean(const DenseTensor& a, const SampleSet& s);

// OMEGA1 text format: header "OMEGA1 k n with|without", the dims line, then
// one 0-based index tuple per line.
void write_omega1(std::ostream& os, const SampleSet& s);
SampleSet read_omega1(std::istream& is);
SampleSet load_omega1(const std::string& path);
void save_omega1(const std::string& path, const SampleSet& s);

}  // namespace itc
