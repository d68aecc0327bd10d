#include "itc/experiments.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "itc/norms.hpp"
#include "itc/rng.hpp"

namespace itc {

using nlohmann::json;

namespace {

constexpr std::size_t kMaxDim = 16;
constexpr std::size_t kMaxOrder = 4;
constexpr std::size_t kMaxProduct = 100000;

std::string dims_string(const Dims& dims) {
  std::string s;
  for (std::size_t j = 0; j < dims.size(); ++j) {
    if (j) s += 'x';
    s += std::to_string(dims[j]);
  }
  return s;
}

std::string model_string(const LowRankModel& m) {
  std::string s = m.kind == LowRankModel::Kind::tucker ? "tucker" : "ortho_cp";
  for (std::size_t r : m.ranks) s += ":" + std::to_string(r);
  return s;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

std::string delta_string(const std::vector<double>& d) {
  std::string s;
  for (std::size_t j = 0; j < d.size(); ++j) {
    if (j) s += ';';
    s += fmt(d[j]);
  }
  return s;
}

double median_of(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size();
  return m % 2 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

// linear interpolation between order statistics
double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::optional<double> ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() < 2) return std::nullopt;
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) return std::nullopt;
  return sxy / sxx;
}

std::vector<double> broadcast(const std::vector<double>& d, std::size_t k) {
  if (d.size() == 1) return std::vector<double>(k, d[0]);
  if (d.size() != k) throw Error("delta list needs one value or one per mode");
  return d;
}

double mean_dim(const Dims& dims) {
  double s = 0.0;
  for (std::size_t d : dims) s += static_cast<double>(d);
  return s / static_cast<double>(dims.size());
}

std::vector<std::size_t> cell_grid(const SweepSpec& spec, const Dims& dims) {
  if (!spec.n_values.empty()) return spec.n_values;
  std::size_t lo = 0;
  for (std::size_t d : dims) lo += d;
  return geometric_grid(lo, product(dims), spec.grid_ratio);
}

json row_json(const PhaseRow& r) {
  return {{"n", r.n},
          {"trials", r.trials},
          {"successes", r.successes},
          {"not_converged", r.not_converged},
          {"median_err", r.median_err}};
}

}  // namespace

DeltaPolicy parse_delta_policy(const std::string& s) {
  if (s == "theorem3") return DeltaPolicy::theorem3;
  if (s == "ones") return DeltaPolicy::ones;
  if (s == "manual") return DeltaPolicy::manual;
  throw Error("unknown delta policy: " + s);
}

std::string to_string(DeltaPolicy p) {
  switch (p) {
    case DeltaPolicy::theorem3: return "theorem3";
    case DeltaPolicy::ones: return "ones";
    case DeltaPolicy::manual: return "manual";
  }
  return "";
}

CompletionConfig SweepSpec::default_solver() {
  CompletionConfig c;
  c.max_iters = 100;
  return c;
}

void SweepSpec::validate() const {
  if (cells.empty()) throw Error("sweep: empty grid");
  if (trials < 1) throw Error("sweep: trials must be >= 1");
  if (!(success_threshold > 0.0 && success_threshold <= 1.0)) {
    throw Error("sweep: success threshold must lie in (0, 1]");
  }
  if (n_values.empty() && !(grid_ratio > 1.0)) throw Error("sweep: grid ratio must exceed 1");
  for (const SweepCell& c : cells) {
    if (c.dims.size() < 2 || c.dims.size() > kMaxOrder) throw Error("sweep: order guard exceeded");
    for (std::size_t d : c.dims) {
      if (d < 1 || d > kMaxDim) throw Error("sweep: dimension guard exceeded");
    }
    if (product(c.dims) > kMaxProduct) throw Error("sweep: size guard exceeded");
    for (std::size_t n : n_values) {
      if (n < 1) throw Error("sweep: n must be >= 1");
      if (replacement == Replacement::without && n > product(c.dims)) {
        throw Error("sweep: n exceeds the number of cells");
      }
    }
  }
  if (delta_policy == DeltaPolicy::manual && manual_delta.empty()) {
    throw Error("sweep: manual delta policy without values");
  }
}

SweepSpec sweep_spec_from_json(const std::string& text) {
  const json j = json::parse(text);
  SweepSpec s;
  for (const json& c : j.at("cells")) {
    SweepCell cell;
    cell.dims = c.at("dims").get<Dims>();
    const std::string kind = c.value("model", std::string("ortho_cp"));
    const auto ranks = c.value("ranks", std::vector<std::size_t>{1});
    if (kind == "tucker") {
      cell.model = LowRankModel::tucker(ranks);
    } else if (kind == "ortho_cp") {
      cell.model = LowRankModel::ortho_cp(ranks.at(0));
    } else {
      throw Error("sweep: unknown rank model " + kind);
    }
    s.cells.push_back(std::move(cell));
  }
  s.n_values = j.value("n_values", s.n_values);
  s.grid_ratio = j.value("grid_ratio", s.grid_ratio);
  s.delta_policy = parse_delta_policy(j.value("delta_policy", to_string(s.delta_policy)));
  s.manual_delta = j.value("manual_delta", s.manual_delta);
  s.trials = j.value("trials", s.trials);
  s.seed_base = j.value("seed_base", s.seed_base);
  s.output_path = j.value("output_path", s.output_path);
  s.checkpoint_dir = j.value("checkpoint_dir", s.checkpoint_dir);
  const std::string rep = j.value("replacement", std::string("without"));
  if (rep != "with" && rep != "without") throw Error("sweep: replacement must be with|without");
  s.replacement = rep == "with" ? Replacement::with : Replacement::without;
  s.success_tol = j.value("success_tol", s.success_tol);
  s.success_threshold = j.value("success_threshold", s.success_threshold);
  s.bisect = j.value("bisect", s.bisect);
  s.early_stop = j.value("early_stop", s.early_stop);
  s.threads = j.value("threads", s.threads);
  if (j.contains("solver")) {
    const json& c = j.at("solver");
    s.solver.feas_tol = c.value("feas_tol", s.solver.feas_tol);
    s.solver.gap_tol = c.value("gap_tol", s.solver.gap_tol);
    s.solver.max_iters = c.value("max_iters", s.solver.max_iters);
    s.solver.max_atoms = c.value("max_atoms", s.solver.max_atoms);
    s.solver.bisection_steps = c.value("bisection_steps", s.solver.bisection_steps);
    s.solver.bisection_rel_width = c.value("bisection_rel_width", s.solver.bisection_rel_width);
  }
  s.validate();
  return s;
}

std::string to_json(const SweepSpec& s) {
  json cells = json::array();
  for (const SweepCell& c : s.cells) {
    cells.push_back({{"dims", c.dims},
                     {"model", c.model.kind == LowRankModel::Kind::tucker ? "tucker" : "ortho_cp"},
                     {"ranks", c.model.ranks}});
  }
  json j = {{"cells", cells},
            {"n_values", s.n_values},
            {"grid_ratio", s.grid_ratio},
            {"delta_policy", to_string(s.delta_policy)},
            {"manual_delta", s.manual_delta},
            {"trials", s.trials},
            {"seed_base", s.seed_base},
            {"output_path", s.output_path},
            {"checkpoint_dir", s.checkpoint_dir},
            {"replacement", s.replacement == Replacement::with ? "with" : "without"},
            {"success_tol", s.success_tol},
            {"success_threshold", s.success_threshold},
            {"bisect", s.bisect},
            {"early_stop", s.early_stop},
            {"threads", s.threads},
            {"solver",
             {{"feas_tol", s.solver.feas_tol},
              {"gap_tol", s.solver.gap_tol},
              {"max_iters", s.solver.max_iters},
              {"max_atoms", s.solver.max_atoms},
              {"bisection_steps", s.solver.bisection_steps},
              {"bisection_rel_width", s.solver.bisection_rel_width}}}};
  return j.dump(2);
}

std::vector<std::size_t> geometric_grid(std::size_t lo, std::size_t hi, double ratio) {
  if (lo < 1 || hi < lo || !(ratio > 1.0)) throw Error("geometric_grid: bad range");
  std::vector<std::size_t> g{lo};
  double x = static_cast<double>(lo);
  while (g.back() < hi) {
    x *= ratio;
    const auto v = std::min(hi, static_cast<std::size_t>(std::llround(x)));
    if (v > g.back()) g.push_back(v);
  }
  return g;
}

namespace {

struct TrialOutcome {
  bool success = false;
  bool not_converged = false;
  double err = 0.0;
};

TrialOutcome run_trial(const SweepSpec& spec, std::size_t cell, std::size_t n, std::size_t trial) {
  const SweepCell& c = spec.cells[cell];
  const DenseTensor t = random_lowrank(c.dims, c.model, derive_seed(spec.seed_base, cell, trial));
  std::vector<double> delta;
  switch (spec.delta_policy) {
    case DeltaPolicy::theorem3: {
      RecoveryConfig rc;
      rc.compute_alpha = false;
      delta = recovery_params(t, rc).delta;
      break;
    }
    case DeltaPolicy::ones: delta.assign(c.dims.size(), 1.0); break;
    case DeltaPolicy::manual: delta = broadcast(spec.manual_delta, c.dims.size()); break;
  }
  const SampleSet omega =
      sample_omega(c.dims, n, spec.replacement, derive_seed(spec.seed_base, cell, trial, n));
  const CompletionProblem prob =
      CompletionProblem::from_truth(t, omega, IncoherenceParams(delta, c.dims));
  const SolverResult r = complete(prob, spec.solver);
  TrialOutcome o;
  o.err = hs_norm(r.estimate - t) / hs_norm(t);
  o.success = o.err <= spec.success_tol;
  o.not_converged = r.status == SolveStatus::not_converged;
  return o;
}

}  // namespace

PhaseRow run_probe(const SweepSpec& spec, std::size_t cell, std::size_t n) {
  if (cell >= spec.cells.size()) throw Error("run_probe: cell out of range");
  const auto total = static_cast<std::size_t>(spec.trials);
  const auto need = static_cast<int>(std::ceil(spec.success_threshold * spec.trials - 1e-12));
  const std::size_t chunk = spec.early_stop ? static_cast<std::size_t>(std::max(spec.threads, 1)) : total;

  PhaseRow row;
  row.cell = cell;
  row.dims = spec.cells[cell].dims;
  row.model = model_string(spec.cells[cell].model);
  row.n = n;
  std::vector<double> errs;
  // trials are reduced in index order, so the stopping point does not depend
  // on the number of workers
  for (std::size_t start = 0; start < total; start += chunk) {
    const std::size_t count = std::min(chunk, total - start);
    const auto outs = parallel_map<TrialOutcome>(count, spec.threads, [&](std::size_t i) {
      return run_trial(spec, cell, n, start + i);
    });
    bool decided = false;
    for (const TrialOutcome& o : outs) {
      ++row.trials;
      row.successes += o.success;
      row.not_converged += o.not_converged;
      errs.push_back(o.err);
      const int failures = row.trials - row.successes;
      if (spec.early_stop && (row.successes >= need || failures > spec.trials - need)) {
        decided = true;
        break;
      }
    }
    if (decided) break;
  }
  row.success_frac = static_cast<double>(row.successes) / static_cast<double>(row.trials);
  row.median_err = median_of(errs);
  return row;
}

namespace {

std::map<std::size_t, PhaseRow> load_checkpoint(const std::string& path, const std::string& key,
                                                const SweepSpec& spec, std::size_t cell) {
  std::map<std::size_t, PhaseRow> done;
  std::ifstream in(path);
  if (!in) return done;
  json j;
  try {
    in >> j;
  } catch (const json::exception&) {
    return done;  // torn write; redo the cell
  }
  if (j.value("key", std::string()) != key) return done;
  for (const json& r : j.at("rows")) {
    PhaseRow row;
    row.cell = cell;
    row.dims = spec.cells[cell].dims;
    row.model = model_string(spec.cells[cell].model);
    row.n = r.at("n").get<std::size_t>();
    row.trials = r.at("trials").get<int>();
    row.successes = r.at("successes").get<int>();
    row.not_converged = r.at("not_converged").get<int>();
    row.success_frac = static_cast<double>(row.successes) / static_cast<double>(row.trials);
    row.median_err = r.at("median_err").get<double>();
    done.emplace(row.n, row);
  }
  return done;
}

void save_checkpoint(const std::string& path, const std::string& key,
                     const std::map<std::size_t, PhaseRow>& done) {
  json rows = json::array();
  for (const auto& [n, r] : done) rows.push_back(row_json(r));
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw Error("cannot write checkpoint " + tmp);
    out << json{{"key", key}, {"rows", rows}}.dump() << '\n';
  }
  std::filesystem::rename(tmp, path);
}

int monotone_violations(const std::vector<PhaseRow>& rows) {
  int v = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = i + 1; j < rows.size(); ++j) {
      const double pi = rows[i].success_frac, pj = rows[j].success_frac;
      const double ti = rows[i].trials, tj = rows[j].trials;
      const double pool = (pi * ti + pj * tj) / (ti + tj);
      const double sigma = std::sqrt(pool * (1 - pool) * (1 / ti + 1 / tj));
      if (pi - pj > 3 * sigma && pi > pj) ++v;
    }
  }
  return v;
}

}  // namespace

PhaseTable phase_transition(const SweepSpec& spec) {
  spec.validate();
  PhaseTable table;
  std::string spec_key;
  {
    SweepSpec keyed = spec;
    keyed.output_path.clear();
    keyed.checkpoint_dir.clear();
    keyed.threads = 1;
    spec_key = to_json(keyed);
  }
  if (!spec.checkpoint_dir.empty()) std::filesystem::create_directories(spec.checkpoint_dir);

  std::vector<double> xs, ys;
  for (std::size_t cell = 0; cell < spec.cells.size(); ++cell) {
    const Dims& dims = spec.cells[cell].dims;
    const std::vector<std::size_t> grid = cell_grid(spec, dims);
    const std::string ckpt = spec.checkpoint_dir.empty()
                                 ? std::string()
                                 : spec.checkpoint_dir + "/cell_" + std::to_string(cell) + ".json";
    const std::string key = spec_key + "#" + std::to_string(cell);
    std::map<std::size_t, PhaseRow> done;
    if (!ckpt.empty()) done = load_checkpoint(ckpt, key, spec, cell);

    auto probe = [&](std::size_t n) -> const PhaseRow& {
      auto it = done.find(n);
      if (it == done.end()) {
        it = done.emplace(n, run_probe(spec, cell, n)).first;
        if (!ckpt.empty()) save_checkpoint(ckpt, key, done);
      }
      return it->second;
    };
    auto passes = [&](const PhaseRow& r) { return r.success_frac >= spec.success_threshold; };

    PhaseCellSummary summary;
    summary.cell = cell;
    summary.dims = dims;
    std::optional<std::size_t> first;
    if (spec.bisect) {
      // invariant: grid[lo] fails (or lo = -1), grid[hi] passes (or hi = size)
      std::ptrdiff_t lo = -1, hi = static_cast<std::ptrdiff_t>(grid.size());
      while (hi - lo > 1) {
        const std::ptrdiff_t mid = lo + (hi - lo) / 2;
        if (passes(probe(grid[static_cast<std::size_t>(mid)]))) {
          hi = mid;
        } else {
          lo = mid;
        }
      }
      if (hi < static_cast<std::ptrdiff_t>(grid.size())) first = static_cast<std::size_t>(hi);
    } else {
      for (std::size_t i = 0; i < grid.size(); ++i) {
        if (passes(probe(grid[i])) && !first) first = i;
      }
    }
    if (first) {
      summary.n_star = grid[*first];
      summary.n_star_below = *first > 0 ? grid[*first - 1] : 0;
      summary.n_star_above = *first + 1 < grid.size() ? grid[*first + 1] : 0;
      xs.push_back(std::log(mean_dim(dims)));
      ys.push_back(std::log(static_cast<double>(*summary.n_star)));
    }
    std::vector<PhaseRow> cell_rows;
    for (const auto& [n, r] : done) cell_rows.push_back(r);
    summary.monotone_violations = monotone_violations(cell_rows);
    table.rows.insert(table.rows.end(), cell_rows.begin(), cell_rows.end());
    table.cells.push_back(summary);
  }
  table.slope = ls_slope(xs, ys);
  return table;
}

std::string phase_csv_header() {
  return "cell,dims,model,n,trials,successes,not_converged,success_frac,median_err";
}

std::string to_csv_row(const PhaseRow& r) {
  std::ostringstream os;
  os << r.cell << ',' << dims_string(r.dims) << ',' << r.model << ',' << r.n << ',' << r.trials
     << ',' << r.successes << ',' << r.not_converged << ',' << fmt(r.success_frac) << ','
     << fmt(r.median_err);
  return os.str();
}

std::string phase_summary_csv_header() {
  return "cell,dims,n_star,n_star_below,n_star_above,monotone_violations";
}

std::string to_csv_row(const PhaseCellSummary& s) {
  std::ostringstream os;
  os << s.cell << ',' << dims_string(s.dims) << ',';
  if (s.n_star) os << *s.n_star;
  os << ',' << s.n_star_below << ',' << s.n_star_above << ',' << s.monotone_violations;
  return os.str();
}

ConcentrationTable concentration_sweep(const DenseTensor& a, const ConcentrationSpec& spec) {
  if (spec.deltas.empty() || spec.n_values.empty()) throw Error("concentration: empty grid");
  if (spec.trials < 1) throw Error("concentration: trials must be >= 1");
  const Dims& dims = a.dims();
  const std::size_t k = dims.size();
  std::vector<IncoherenceParams> params;
  std::vector<std::vector<double>> deltas;
  for (const auto& d : spec.deltas) {
    deltas.push_back(broadcast(d, k));
    params.emplace_back(deltas.back(), dims);
  }
  std::vector<std::size_t> ns = spec.n_values;
  std::sort(ns.begin(), ns.end());
  if (ns.front() < 1) throw Error("concentration: n must be >= 1");

  BracketConfig bc;
  bc.guard_override = spec.guard_override;
  // fail on the guard before starting the Monte Carlo
  if (!a.is_zero()) {
    for (const auto& p : params) incoherent_spectral_bracket(a, p, bc);
  }

  struct Cell {
    std::vector<double> lower, upper;  // per delta
  };
  const double a_max = a.max_abs();
  ConcentrationTable table;
  std::vector<std::vector<ConcentrationRow>> by_delta(deltas.size());
  for (std::size_t n : ns) {
    const auto cells = parallel_map<Cell>(static_cast<std::size_t>(spec.trials), spec.threads,
                                          [&](std::size_t trial) {
      const SampleSet s = sample_omega(dims, n, Replacement::with, derive_seed(spec.seed_base, n, trial));
      const DenseTensor diff = sampled_mean(a, s) - a;
      Cell c;
      for (const auto& p : params) {
        if (diff.is_zero()) {
          c.lower.push_back(0.0);
          c.upper.push_back(0.0);
          continue;
        }
        const NetBracket b = incoherent_spectral_bracket(diff, p, bc);
        const double lb = incoherent_spectral_lb(diff, p).value;
        c.lower.push_back(std::max(b.lower, lb));
        c.upper.push_back(b.upper);
      }
      return c;
    });
    for (std::size_t di = 0; di < deltas.size(); ++di) {
      std::vector<double> lo, up;
      for (const Cell& c : cells) {
        lo.push_back(c.lower[di]);
        up.push_back(c.upper[di]);
      }
      ConcentrationRow r;
      r.n = n;
      r.delta = deltas[di];
      r.trials = spec.trials;
      r.median_lower = quantile(lo, 0.5);
      r.q90_lower = quantile(lo, 0.9);
      r.median_upper = quantile(up, 0.5);
      r.q90_upper = quantile(up, 0.9);
      r.shape = concentration_shape(a_max, dims, deltas[di], n);
      r.threshold = concentration_threshold(a_max, dims, deltas[di], n, spec.alpha).value;
      by_delta[di].push_back(r);
    }
  }
  for (std::size_t di = 0; di < deltas.size(); ++di) {
    std::vector<double> x, y;
    bool mono = true;
    for (std::size_t i = 0; i < by_delta[di].size(); ++i) {
      const ConcentrationRow& r = by_delta[di][i];
      if (i > 0 && r.median_lower > by_delta[di][i - 1].median_lower) mono = false;
      if (r.median_lower > 0.0) {
        x.push_back(std::log(static_cast<double>(r.n)));
        y.push_back(std::log(r.median_lower));
      }
    }
    table.slopes.push_back(ls_slope(x, y).value_or(std::numeric_limits<double>::quiet_NaN()));
    table.n_monotone.push_back(mono);
    table.rows.insert(table.rows.end(), by_delta[di].begin(), by_delta[di].end());
  }
  // larger delta must not give a larger median at the smallest n
  std::vector<std::size_t> order(deltas.size());
  std::iota(order.begin(), order.end(), 0);
  auto gmean = [&](std::size_t i) {
    double s = 0.0;
    for (double d : deltas[i]) s += std::log(d);
    return s;
  };
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return gmean(x) < gmean(y); });
  table.delta_monotone_small_n = true;
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (by_delta[order[i]].front().median_lower > by_delta[order[i - 1]].front().median_lower) {
      table.delta_monotone_small_n = false;
    }
  }
  return table;
}

std::string concentration_csv_header() {
  return "n,delta,trials,median_lower,q90_lower,median_upper,q90_upper,shape,threshold";
}

std::string to_csv_row(const ConcentrationRow& r) {
  std::ostringstream os;
  os << r.n << ',' << delta_string(r.delta) << ',' << r.trials << ',' << fmt(r.median_lower) << ','
     << fmt(r.q90_lower) << ',' << fmt(r.median_upper) << ',' << fmt(r.q90_upper) << ','
     << fmt(r.shape) << ',' << fmt(r.threshold);
  return os.str();
}

ThresholdResult concentration_threshold(double a_max, const Dims& dims,
                                        const std::vector<double>& delta, std::size_t n,
                                        double alpha) {
  const std::size_t k = dims.size();
  const std::vector<double> dl = broadcast(delta, k);
  if (n < 1) throw Error("concentration_threshold: n must be >= 1");
  const double kd = static_cast<double>(k);
  const double nn = static_cast<double>(n);
  ThresholdResult r;
  double log_prod = 0.0, log_delta = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    if (!(dl[j] > 0.0 && dl[j] <= 1.0)) throw Error("concentration_threshold: delta outside (0, 1]");
    log_prod += std::log(static_cast<double>(dims[j]));
    log_delta += std::log(dl[j]);
  }
  r.d_mean = mean_dim(dims);
  r.d_star = std::exp(log_prod / kd);
  r.delta_star = std::exp(log_delta / kd);
  r.delta_starstar = std::numeric_limits<double>::infinity();
  double inner = 0.0;
  for (std::size_t j1 = 0; j1 < k; ++j1) {
    for (std::size_t j2 = j1 + 1; j2 < k; ++j2) {
      r.delta_starstar = std::min(r.delta_starstar, std::sqrt(dl[j1] * dl[j2]));
      const double dd = dl[j1] * dl[j1] * dl[j2] * dl[j2];
      const double v = nn / (dd * static_cast<double>(dims[j1] * dims[j2])) + std::log(r.d_mean) / dd;
      inner = std::max(inner, v);
    }
  }
  r.value = 160.0 * (3.0 * alpha + 7.0) * (kd / nn) * std::sqrt(r.d_mean * std::log(r.d_star)) *
            std::pow(2.0 * r.delta_star * r.d_star, kd) * a_max * std::sqrt(inner);
  const double ld = std::log(r.d_mean);
  r.side_condition = 8.0 * std::exp(1.0) / (9.0 * std::log(2.0)) * kd * kd * ld * ld * ld <= r.d_mean;
  return r;
}

double concentration_shape(double a_max, const Dims& dims, const std::vector<double>& delta,
                           std::size_t n) {
  const std::size_t k = dims.size();
  const std::vector<double> dl = broadcast(delta, k);
  const double kd = static_cast<double>(k);
  double log_delta = 0.0;
  for (double x : dl) log_delta += std::log(x);
  const double dg = std::exp(log_delta / kd);
  const double d = mean_dim(dims);
  const double l = std::log(d) / static_cast<double>(n);
  const double first = std::sqrt(l) * std::pow(dg, kd - 2) * std::pow(d, kd - 0.5);
  const double second = l * std::pow(dg, kd - 2) * std::pow(d, kd + 0.5);
  return std::max(first, second) * a_max;
}

std::vector<NetCheckRow> net_cardinality_check(const std::vector<std::size_t>& d_values,
                                               const std::vector<double>& deltas, bool boundary,
                                               bool guard_override) {
  std::vector<NetCheckRow> rows;
  for (std::size_t d : d_values) {
    std::vector<double> ds = deltas;
    if (boundary) ds.push_back(1.0 / std::sqrt(static_cast<double>(d)));
    for (double delta : ds) {
      NetCheckRow r;
      r.d = d;
      r.delta = delta;
      r.levels = std::max(net_levels(d, delta), 0);
      r.count = enumerate_net(d, delta, 1.0, guard_override).size();
      r.bound = net_cardinality_bound(d);
      r.ok = static_cast<double>(r.count) <= r.bound;
      rows.push_back(r);
    }
  }
  return rows;
}

std::string netcheck_csv_header() { return "d,delta,levels,count,bound,ok"; }

std::string to_csv_row(const NetCheckRow& r) {
  std::ostringstream os;
  os << r.d << ',' << fmt(r.delta) << ',' << r.levels << ',' << r.count << ',' << fmt(r.bound) << ','
     << (r.ok ? 1 : 0);
  return os.str();
}

}  // namespace itc
