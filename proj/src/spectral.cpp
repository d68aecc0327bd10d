#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include "itc/norms.hpp"
#include "itc/rng.hpp"
#include "itc/subspace.hpp"

namespace itc {

IncoherenceParams::IncoherenceParams(std::vector<double> delta, const Dims& dims)
    : delta_(std::move(delta)), dims_(dims) {
  if (delta_.size() != dims_.size()) {
    throw Error("IncoherenceParams: expected " + std::to_string(dims_.size()) +
                " radii, got " + std::to_string(delta_.size()));
  }
  for (std::size_t j = 0; j < delta_.size(); ++j) {
    const double v = delta_[j];
    if (!std::isfinite(v) || v <= 0.0 || v > 1.0) {
      throw Error("IncoherenceParams: delta_" + std::to_string(j) + " = " +
                  std::to_string(v) + " outside (0, 1]");
    }
    const double floor = 1.0 / std::sqrt(static_cast<double>(dims_[j]));
    if (v < floor) {
      delta_[j] = floor;
      clamped_ = true;
    }
  }
}

IncoherenceParams IncoherenceParams::ones(const Dims& dims) {
  return IncoherenceParams(std::vector<double>(dims.size(), 1.0), dims);
}

double IncoherenceParams::delta_star() const {
  double lg = 0.0;
  for (double v : delta_) lg += std::log(v);
  return std::exp(lg / static_cast<double>(delta_.size()));
}

double IncoherenceParams::delta_star_star() const {
  std::vector<double> s = delta_;
  std::sort(s.begin(), s.end());
  return std::sqrt(s[0] * s[1]);
}

LinmaxResult linmax_box_ball(const Eigen::VectorXd& g, double delta) {
  if (!(delta > 0.0 && delta <= 1.0)) throw Error("linmax_box_ball: delta outside (0, 1]");
  if (!g.allFinite()) throw Error("linmax_box_ball: non-finite gradient");
  const Eigen::Index n = g.size();
  LinmaxResult r;
  r.u = Eigen::VectorXd::Zero(n);
  std::vector<double> a;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (g(i) != 0.0) a.push_back(std::abs(g(i)));
  }
  if (a.empty()) return r;
  const double nz = static_cast<double>(a.size());
  if (nz * delta * delta <= 1.0) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (g(i) != 0.0) r.u(i) = g(i) > 0 ? delta : -delta;
    }
  } else {
    std::sort(a.begin(), a.end(), std::greater<>());
    // suffix[c] = sum_{i >= c} a_i^2
    std::vector<double> suffix(a.size() + 1, 0.0);
    for (std::size_t i = a.size(); i-- > 0;) suffix[i] = suffix[i + 1] + a[i] * a[i];
    double t = 0.0;
    for (std::size_t c = 0; c < a.size(); ++c) {
      const double room = std::max(0.0, 1.0 - static_cast<double>(c) * delta * delta);
      t = std::sqrt(room / suffix[c]);
      if (t * a[c] <= delta) break;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      const double m = std::min(delta, t * std::abs(g(i)));
      r.u(i) = g(i) >= 0 ? m : -m;
    }
  }
  r.value = r.u.dot(g);
  return r;
}

bool atom_feasible(const RankOneAtom& atom, const IncoherenceParams& p, std::size_t a,
                   std::size_t b, double tol) {
  if (atom.order() != p.order()) return false;
  for (std::size_t j = 0; j < atom.order(); ++j) {
    if (atom.factors[j].norm() > 1.0 + tol) return false;
    if (j != a && j != b && atom.factors[j].size() > 0 &&
        atom.factors[j].cwiseAbs().maxCoeff() > p[j] + tol) {
      return false;
    }
  }
  return true;
}

namespace {

void check_params(const Dims& dims, const IncoherenceParams& p) {
  if (p.dims() != dims) throw Error("incoherence parameters do not match tensor shape");
}

struct Ascent {
  std::vector<Eigen::VectorXd> f;
  double value = 0.0;
};

Ascent ascend(const CoordTensor& x, const IncoherenceParams& p, std::size_t a, std::size_t b,
              std::vector<Eigen::VectorXd> f, const SpectralConfig& cfg) {
  const std::size_t k = x.order();
  auto place = [&](std::size_t j, const Eigen::VectorXd& g) {
    if (j == a || j == b) {
      const double n = g.norm();
      if (n > 0.0) f[j] = g / n;
    } else {
      f[j] = linmax_box_ball(g, p[j]).u;
    }
  };
  for (std::size_t j = 0; j < k; ++j) {
    const Eigen::VectorXd g = f[j];
    place(j, g);
  }
  double prev = -std::numeric_limits<double>::infinity();
  for (int s = 0; s < cfg.max_sweeps; ++s) {
    double val = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const Eigen::VectorXd g = x.contract_all_but(f, j);
      place(j, g);
      if (j + 1 == k) val = g.dot(f[j]);
    }
    if (val - prev <= cfg.stall_tol * std::abs(val)) break;
    prev = val;
  }
  Ascent out;
  out.value = x.multilinear(f);
  out.f = std::move(f);
  return out;
}

}  // namespace

SpectralResult incoherent_spectral_lb(const CoordTensor& x, const IncoherenceParams& p,
                                      const SpectralConfig& cfg,
                                      std::span<const SpectralStart> extra_starts) {
  check_params(x.dims, p);
  const std::size_t k = x.order();
  SpectralResult best;
  best.value = -std::numeric_limits<double>::infinity();

  std::vector<Eigen::VectorXd> hosvd;
  if (cfg.hosvd_init) {
    for (std::size_t j = 0; j < k; ++j) hosvd.push_back(x.leading_mode_vector(j));
  }
  std::uint64_t pair_id = 0;
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b, ++pair_id) {
      auto consider = [&](std::vector<Eigen::VectorXd> start) {
        Ascent r = ascend(x, p, a, b, std::move(start), cfg);
        ++best.restarts_used;
        if (r.value > best.value) {
          best.value = r.value;
          best.atom.factors = std::move(r.f);
          best.atom.weight = 1.0;
          best.pair = {a, b};
        }
      };
      if (cfg.hosvd_init) consider(hosvd);
      for (const auto& s : extra_starts) consider(s.factors);
      for (int r = 0; r < cfg.restarts; ++r) {
        CounterRng rng(cfg.seed, (pair_id << 32) | static_cast<std::uint64_t>(r));
        std::vector<Eigen::VectorXd> start(k);
        for (std::size_t j = 0; j < k; ++j) {
          start[j].resize(static_cast<Eigen::Index>(x.dims[j]));
          for (Eigen::Index i = 0; i < start[j].size(); ++i) start[j](i) = rng.normal();
          start[j].normalize();
        }
        consider(std::move(start));
      }
    }
  }
  if (best.restarts_used == 0 || !(best.value > 0.0)) {
    // Zero input (or no starts): return the zero atom, which is feasible.
    best.value = 0.0;
    best.atom.factors.clear();
    for (std::size_t j = 0; j < k; ++j) {
      best.atom.factors.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(x.dims[j])));
    }
    best.atom.weight = 1.0;
    best.pair = {0, 1};
  }
  return best;
}

SpectralResult incoherent_spectral_lb(const DenseTensor& x, const IncoherenceParams& p,
                                      const SpectralConfig& cfg) {
  if (x.is_zero()) throw Error("incoherent_spectral_lb: zero tensor");
  return incoherent_spectral_lb(CoordTensor::from_dense(x), p, cfg, {});
}

// ---------------------------------------------------------------------------
// Nets

int net_levels(std::size_t d, double delta) {
  if (d < 2) throw Error("net: d must be at least 2");
  const double lo = 1.0 / std::sqrt(static_cast<double>(d));
  if (!(delta >= lo * (1.0 - 1e-12) && delta <= 1.0)) throw Error("delta out of range");
  const double l2 = std::log2(delta * delta * static_cast<double>(d));
  const int m = static_cast<int>(std::ceil(l2 - 1e-12)) - 1;
  return std::max(m, 0);
}

double net_cardinality_bound(std::size_t d) {
  return std::exp(1.344 + 3.082 * static_cast<double>(d));
}

namespace {

// Number of level patterns with sum 2^{j_i} <= 2d, as a double.
double level_patterns(std::size_t d, int m) {
  const std::size_t cap = 2 * d;
  std::vector<double> ways(cap + 1, 0.0);
  ways[0] = 1.0;
  for (std::size_t i = 0; i < d; ++i) {
    std::vector<double> nw(cap + 1, 0.0);
    for (std::size_t s = 0; s <= cap; ++s) {
      if (ways[s] == 0.0) continue;
      for (int j = 0; j <= m; ++j) {
        const std::size_t t = s + (std::size_t{1} << j);
        if (t <= cap) nw[t] += ways[s];
      }
    }
    ways = std::move(nw);
  }
  return std::accumulate(ways.begin(), ways.end(), 0.0);
}

double net_size_double(std::size_t d, double delta) {
  return level_patterns(d, net_levels(d, delta)) * std::ldexp(1.0, static_cast<int>(d));
}

}  // namespace

std::uint64_t net_cardinality(std::size_t d, double delta) {
  const double n = net_size_double(d, delta);
  if (n >= 1.8e19) return std::numeric_limits<std::uint64_t>::max();
  return static_cast<std::uint64_t>(n);
}

std::vector<Eigen::VectorXd> enumerate_net(std::size_t d, double delta, double c,
                                           bool guard_override) {
  const int m = net_levels(d, delta);
  if (!(c > 0.0 && c <= 1.0)) throw Error("enumerate_net: c outside (0, 1]");
  const double size = net_size_double(d, delta);
  if (!guard_override && size > kNetGuard) {
    throw Error("enumerate_net: net of " + std::to_string(size) +
                " vectors exceeds the enumeration guard");
  }
  std::vector<double> level(static_cast<std::size_t>(m) + 1);
  for (int j = 0; j <= m; ++j) {
    level[static_cast<std::size_t>(j)] =
        c * std::pow(2.0, 0.5 * j) / std::sqrt(2.0 * static_cast<double>(d));
  }
  std::vector<Eigen::VectorXd> out;
  out.reserve(static_cast<std::size_t>(size));
  const std::size_t cap = 2 * d;
  std::vector<int> pick(d, 0);
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t i, std::size_t sum) {
    if (i == d) {
      for (std::uint64_t signs = 0; signs < (std::uint64_t{1} << d); ++signs) {
        Eigen::VectorXd w(static_cast<Eigen::Index>(d));
        for (std::size_t t = 0; t < d; ++t) {
          const double v = level[static_cast<std::size_t>(pick[t])];
          w(static_cast<Eigen::Index>(t)) = ((signs >> t) & 1U) ? -v : v;
        }
        out.push_back(std::move(w));
      }
      return;
    }
    for (int j = 0; j <= m; ++j) {
      const std::size_t t = sum + (std::size_t{1} << j);
      if (t > cap) break;
      pick[i] = j;
      rec(i + 1, t);
    }
  };
  rec(0, 0);
  return out;
}

// ---------------------------------------------------------------------------
// Bracket

namespace {

// Contract position `pos` of a row-major array with vector w.
std::vector<double> contract_position(const std::vector<double>& v, const Dims& dims,
                                      std::size_t pos, const Eigen::VectorXd& w) {
  std::size_t left = 1;
  std::size_t right = 1;
  for (std::size_t j = 0; j < pos; ++j) left *= dims[j];
  for (std::size_t j = pos + 1; j < dims.size(); ++j) right *= dims[j];
  const std::size_t mid = dims[pos];
  std::vector<double> out(left * right, 0.0);
  for (std::size_t l = 0; l < left; ++l) {
    for (std::size_t m = 0; m < mid; ++m) {
      const double wm = w(static_cast<Eigen::Index>(m));
      const double* src = &v[(l * mid + m) * right];
      double* dst = &out[l * right];
      for (std::size_t r = 0; r < right; ++r) dst[r] += wm * src[r];
    }
  }
  return out;
}

double top_singular_value(const double* data, std::size_t rows, std::size_t cols) {
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> m(
      data, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  if (rows == 2 && cols == 2) {
    const double f = m.squaredNorm();
    const double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    const double disc = std::max(0.0, f * f - 4.0 * det * det);
    return std::sqrt(0.5 * (f + std::sqrt(disc)));
  }
  const Eigen::MatrixXd g = rows <= cols ? Eigen::MatrixXd(m * m.transpose())
                                         : Eigen::MatrixXd(m.transpose() * m);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

// Shared driver: for pair (a, b), walk every combination of the candidate
// vectors on the other modes and report the best top singular value of the
// contracted a x b matrix.
struct PairSearch {
  double best = -1.0;
  std::vector<std::size_t> pick;  // per constrained mode, ascending mode order
};

PairSearch search_pair(const std::vector<double>& vals, const Dims& dims, std::size_t a,
                       std::size_t b, const std::vector<std::vector<Eigen::VectorXd>>& cands) {
  const std::size_t k = dims.size();
  std::vector<std::size_t> cmodes;
  for (std::size_t j = 0; j < k; ++j) {
    if (j != a && j != b) cmodes.push_back(j);
  }
  PairSearch ps;
  std::vector<std::size_t> cur(cmodes.size(), 0);
  // Contract highest modes first so lower positions stay put.
  std::function<void(std::size_t, const std::vector<double>&, const Dims&)> rec =
      [&](std::size_t level, const std::vector<double>& v, const Dims& dd) {
        if (level == cmodes.size()) {
          const double s = top_singular_value(v.data(), dd[0], dd[1]);
          if (s > ps.best) {
            ps.best = s;
            ps.pick = cur;
          }
          return;
        }
        const std::size_t slot = cmodes.size() - 1 - level;
        const std::size_t mode = cmodes[slot];
        Dims nd = dd;
        nd.erase(nd.begin() + static_cast<std::ptrdiff_t>(mode));
        const auto& list = cands[mode];
        for (std::size_t i = 0; i < list.size(); ++i) {
          cur[slot] = i;
          rec(level + 1, contract_position(v, dd, mode, list[i]), nd);
        }
      };
  rec(0, vals, dims);
  return ps;
}

RankOneAtom atom_from_pick(const DenseTensor& x, std::size_t a, std::size_t b,
                           const std::vector<std::vector<Eigen::VectorXd>>& cands,
                           const std::vector<std::size_t>& pick) {
  const std::size_t k = x.order();
  std::vector<Eigen::VectorXd> f(k);
  std::size_t slot = 0;
  for (std::size_t j = 0; j < k; ++j) {
    if (j != a && j != b) f[j] = cands[j][pick[slot++]];
    else f[j] = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(x.dim(j)));
  }
  const Eigen::MatrixXd m = contract_all_but_pair(x, f, a, b);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  f[a] = svd.matrixU().col(0);
  f[b] = svd.matrixV().col(0);
  RankOneAtom at;
  at.factors = std::move(f);
  return at;
}

}  // namespace

NetBracket incoherent_spectral_bracket(const DenseTensor& x, const IncoherenceParams& p,
                                       const BracketConfig& cfg) {
  check_params(x.dims(), p);
  const std::size_t k = x.order();
  const Dims& dims = x.dims();
  // Canonical half of each net: sigma_1 is invariant under w -> -w.
  std::vector<std::vector<Eigen::VectorXd>> half(k);
  std::vector<double> full_size(k, 0.0);
  double evaluations = 0.0;
  if (k > 2) {
    for (std::size_t j = 0; j < k; ++j) full_size[j] = net_size_double(dims[j], p[j]);
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = a + 1; b < k; ++b) {
        double e = 1.0;
        for (std::size_t j = 0; j < k; ++j) {
          if (j != a && j != b) e *= 0.5 * full_size[j];
        }
        evaluations += e;
      }
    }
    if (!cfg.guard_override && evaluations > cfg.max_evaluations) {
      throw Error("incoherent_spectral_bracket: " + std::to_string(evaluations) +
                  " net evaluations exceed the guard");
    }
    for (std::size_t j = 0; j < k; ++j) {
      for (auto& w : enumerate_net(dims[j], p[j], 1.0, cfg.guard_override)) {
        if (w(0) > 0.0) half[j].push_back(std::move(w));
      }
    }
  }
  const std::vector<double> vals(x.values().begin(), x.values().end());
  NetBracket out;
  out.lower = -1.0;
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      const PairSearch ps = search_pair(vals, dims, a, b, half);
      double sz = 1.0;
      for (std::size_t j = 0; j < k; ++j) {
        if (j != a && j != b) sz *= full_size[j];
      }
      out.net_size += sz;
      if (ps.best > out.lower) {
        out.lower = ps.best;
        out.pair = {a, b};
        out.atom = atom_from_pick(x, a, b, half, ps.pick);
      }
    }
  }
  out.upper = std::ldexp(out.lower, static_cast<int>(k) - 2);
  return out;
}

// ---------------------------------------------------------------------------
// Certified upper bounds

double core_spectral_upper(const DenseTensor& w, int circle_points, double rank_tol) {
  const std::size_t k = w.order();
  if (w.is_zero()) return 0.0;
  if (k == 2) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(unfold(w, 0));
    return svd.singularValues()(0);
  }
  std::vector<SubspaceBasis> bases;
  DenseTensor core = w;
  for (std::size_t j = 0; j < k; ++j) {
    bases.push_back(mode_subspace(w, j, rank_tol));
    core = mode_product(core, j, bases.back().basis.transpose());
  }
  DenseTensor recon = core;
  for (std::size_t j = 0; j < k; ++j) recon = mode_product(recon, j, bases[j].basis);
  const double slack = hs_norm(w - recon);

  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return bases[i].rank() > bases[j].rank();
  });
  const std::size_t a = std::min(order[0], order[1]);
  const std::size_t b = std::max(order[0], order[1]);
  int circles = 0;
  for (std::size_t j = 0; j < k; ++j) {
    if (j == a || j == b) continue;
    if (bases[j].rank() > 2) return -1.0;
    if (bases[j].rank() == 2) ++circles;
  }
  int npts = circle_points;
  if (circles == 2) npts = std::max(50, static_cast<int>(7.0 * std::sqrt(circle_points)));
  else if (circles == 3) npts = 100;
  else if (circles > 3) return -1.0;

  // Unit vectors of each core mode: the circle net for rank 2, +-1 for rank 1.
  std::vector<std::vector<Eigen::VectorXd>> cands(k);
  const double theta = std::numbers::pi / (2.0 * npts);
  for (std::size_t j = 0; j < k; ++j) {
    if (j == a || j == b) continue;
    if (bases[j].rank() == 1) {
      cands[j].push_back(Eigen::VectorXd::Ones(1));
    } else {
      for (int i = 0; i < npts; ++i) {
        const double phi = (i + 0.5) * std::numbers::pi / npts;
        Eigen::VectorXd u(2);
        u << std::cos(phi), std::sin(phi);
        cands[j].push_back(u);
      }
    }
  }
  const std::vector<double> vals(core.values().begin(), core.values().end());
  const double mx = search_pair(vals, core.dims(), a, b, cands).best;
  const double s = std::sin(theta);
  const double c = std::cos(theta);
  double geo = 0.0;
  for (int i = 0; i < circles; ++i) geo += std::pow(c, i);
  const double denom = 1.0 - s * geo;
  if (!(denom > 0.0)) return -1.0;
  return mx * std::pow(c, circles) / denom + slack;
}

SpectralUpper incoherent_spectral_upper(const DenseTensor& w, const IncoherenceParams& p,
                                        const UpperConfig& cfg) {
  check_params(w.dims(), p);
  SpectralUpper out;
  const std::size_t k = w.order();
  if (w.is_zero()) {
    out.method = "exact";
    return out;
  }
  if (k == 2) {
    out.value = core_spectral_upper(w, cfg.circle_points, cfg.core_rank_tol);
    out.lower = out.value;
    out.method = "exact";
    return out;
  }
  out.lower = incoherent_spectral_lb(w, p, cfg.lb).value;
  double best = std::numeric_limits<double>::infinity();
  const double core = core_spectral_upper(w, cfg.circle_points, cfg.core_rank_tol);
  if (core >= 0.0) {
    best = core;
    out.method = "core";
  }
  double evaluations = 0.0;
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      double e = 1.0;
      for (std::size_t j = 0; j < k; ++j) {
        if (j != a && j != b) e *= 0.5 * net_size_double(w.dim(j), p[j]);
      }
      evaluations += e;
    }
  }
  if (evaluations <= cfg.net_budget) {
    const NetBracket nb = incoherent_spectral_bracket(w, p, cfg.bracket);
    out.lower = std::max(out.lower, nb.lower);
    if (nb.upper < best) {
      best = nb.upper;
      out.method = "net";
    }
  }
  if (!std::isfinite(best)) {
    best = std::ldexp(out.lower, static_cast<int>(k) - 2);
    out.method = "lb-safety";
  }
  out.value = std::max(best, out.lower);
  return out;
}

}  // namespace itc
