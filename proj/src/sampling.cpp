#include "itc/sampling.hpp"

#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "itc/rng.hpp"

namespace itc {

SampleSet::SampleSet(Dims dims, std::vector<std::size_t> flat, Replacement replacement,
                     std::optional<Bounds> batch_bounds)
    : dims_(std::move(dims)),
      flat_(std::move(flat)),
      replacement_(replacement),
      bounds_(std::move(batch_bounds)) {
  if (dims_.size() < 2) throw Error("SampleSet: order must be at least 2");
  const std::size_t total = product(dims_);
  for (std::size_t f : flat_) {
    if (f >= total) throw Error("SampleSet: index out of range");
  }
  if (replacement_ == Replacement::without) {
    std::unordered_set<std::size_t> seen(flat_.begin(), flat_.end());
    if (seen.size() != flat_.size()) throw Error("SampleSet: duplicate index without replacement");
  }
  if (bounds_) {
    const auto& b = *bounds_;
    if (b.empty()) throw Error("SampleSet: empty batch bounds");
    const std::size_t n1 = b.front().second - b.front().first;
    std::size_t at = 0;
    for (const auto& [s, e] : b) {
      if (s != at || e < s || e - s != n1) throw Error("SampleSet: batch bounds must tile equally");
      at = e;
    }
    if (at != flat_.size()) throw Error("SampleSet: batch bounds do not cover the samples");
  }
}

std::vector<std::size_t> SampleSet::distinct() const {
  if (replacement_ == Replacement::without) return flat_;
  std::vector<std::size_t> out;
  std::unordered_set<std::size_t> seen;
  for (std::size_t f : flat_) {
    if (seen.insert(f).second) out.push_back(f);
  }
  return out;
}

SampleSet SampleSet::batch(std::size_t b) const {
  if (!bounds_ || b >= bounds_->size()) throw Error("SampleSet: no such batch");
  const auto [s, e] = (*bounds_)[b];
  return SampleSet(dims_, {flat_.begin() + s, flat_.begin() + e}, Replacement::with);
}

SampleSet sample_omega(const Dims& dims, std::size_t n, Replacement replacement,
                       std::uint64_t seed) {
  const std::size_t total = product(dims);
  if (n < 1) throw Error("sample_omega: n must be at least 1");
  CounterRng rng(seed, 0x0e6a);
  std::vector<std::size_t> flat(n);
  if (replacement == Replacement::with) {
    for (auto& f : flat) f = rng.below(total);
    return SampleSet(dims, std::move(flat), replacement);
  }
  if (n > total) throw Error("sample_omega: n exceeds the number of cells");
  // partial Fisher-Yates over a virtual identity permutation
  std::unordered_map<std::size_t, std::size_t> swapped;
  auto at = [&](std::size_t i) {
    auto it = swapped.find(i);
    return it == swapped.end() ? i : it->second;
  };
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + rng.below(total - i);
    const std::size_t vi = at(i), vj = at(j);
    flat[i] = vj;
    swapped[j] = vi;
  }
  return SampleSet(dims, std::move(flat), replacement);
}

SampleSet sample_batches(const Dims& dims, std::size_t n1, std::size_t n2,
                         std::uint64_t seed) {
  if (n1 < 1 || n2 < 1) throw Error("sample_batches: n1 and n2 must be positive");
  SampleSet all = sample_omega(dims, n1 * n2, Replacement::with, seed);
  SampleSet::Bounds b;
  for (std::size_t j = 0; j < n2; ++j) b.emplace_back(j * n1, (j + 1) * n1);
  return SampleSet(dims, all.flat(), Replacement::with, std::move(b));
}

SampleSet distinct_support(const SampleSet& s) {
  return SampleSet(s.dims(), s.distinct(), Replacement::without);
}

DenseTensor project_omega(const DenseTensor& x, const SampleSet& s) {
  if (x.dims() != s.dims()) throw Error("project_omega: shape mismatch");
  std::vector<double> out(x.size(), 0.0);
  for (std::size_t f : s.flat()) out[f] = x.flat(f);
  return DenseTensor(x.dims(), std::move(out));
}

DenseTensor sampled_mean(const DenseTensor& a, const SampleSet& s) {
  if (a.dims() != s.dims()) throw Error("sampled_mean: shape mismatch");
  if (s.replacement() != Replacement::with) throw Error("sampled_mean: needs an iid sample");
  if (s.empty()) throw Error("sampled_mean: empty sample");
  const double scale = static_cast<double>(a.size()) / static_cast<double>(s.size());
  std::vector<double> counts(a.size(), 0.0);
  for (std::size_t f : s.flat()) counts[f] += 1.0;
  for (std::size_t i = 0; i < counts.size(); ++i) counts[i] *= scale * a.flat(i);
  return DenseTensor(a.dims(), std::move(counts));
}

void write_omega1(std::ostream& os, const SampleSet& s) {
  const std::size_t k = s.dims().size();
  os << "OMEGA1 " << k << ' ' << s.size() << ' '
     << (s.replacement() == Replacement::with ? "with" : "without") << '\n';
  for (std::size_t j = 0; j < k; ++j) os << (j ? " " : "") << s.dims()[j];
  os << '\n';
  for (std::size_t i = 0; i < s.size(); ++i) {
    const MultiIndex m = s.index(i);
    for (std::size_t j = 0; j < k; ++j) os << (j ? " " : "") << m[j];
    os << '\n';
  }
}

SampleSet read_omega1(std::istream& is) {
  std::string magic, rep;
  std::size_t k = 0, n = 0;
  if (!(is >> magic) || magic != "OMEGA1") throw Error("OMEGA1: bad header");
  if (!(is >> k >> n >> rep) || k < 2) throw Error("OMEGA1: bad header");
  Replacement r;
  if (rep == "with") {
    r = Replacement::with;
  } else if (rep == "without") {
    r = Replacement::without;
  } else {
    throw Error("OMEGA1: replacement must be 'with' or 'without'");
  }
  Dims dims(k);
  for (auto& d : dims) {
    if (!(is >> d) || d == 0) throw Error("OMEGA1: bad dims");
  }
  std::vector<std::size_t> flat(n);
  MultiIndex m(k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      if (!(is >> m[j])) throw Error("OMEGA1: truncated index list");
      if (m[j] >= dims[j]) throw Error("OMEGA1: index out of range");
    }
    flat[i] = flatten(dims, m);
  }
  std::string extra;
  if (is >> extra) throw Error("OMEGA1: trailing data");
  return SampleSet(std::move(dims), std::move(flat), r);
}

SampleSet load_omega1(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return read_omega1(in);
}

void save_omega1(const std::string& path, const SampleSet& s) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  write_omega1(out, s);
}

}  // namespace itc
