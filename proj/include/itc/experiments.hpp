#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "itc/completion.hpp"
#include "itc/sampling.hpp"

namespace itc {

enum class DeltaPolicy { theorem3, ones, manual };

DeltaPolicy parse_delta_policy(const std::string& s);
std::string to_string(DeltaPolicy p);

struct SweepCell {
  Dims dims;
  LowRankModel model = LowRankModel::ortho_cp(1);
};

struct SweepSpec {
  std::vector<SweepCell> cells;
  // shared n grid; when empty each cell gets a geometric grid from
  // sum(dims) to prod(dims) with ratio grid_ratio
  std::vector<std::size_t> n_values;
  double grid_ratio = 1.05;
  DeltaPolicy delta_policy = DeltaPolicy::theorem3;
  std::vector<double> manual_delta;  // one value per mode, or one for all
  int trials = 20;
  std::uint64_t seed_base = 0;
  std::string output_path;
  std::string checkpoint_dir;  // per-cell JSON; empty disables
  Replacement replacement = Replacement::without;
  double success_tol = 1e-3;  // relative HS error
  double success_threshold = 0.9;
  bool bisect = true;      // locate n* by bisection instead of running every n
  bool early_stop = true;  // stop a probe once its side of the threshold is decided
  int threads = 1;
  CompletionConfig solver = default_solver();

  static CompletionConfig default_solver();
  void validate() const;  // also enforces d <= 16, k <= 4, prod <= 1e5
};

SweepSpec sweep_spec_from_json(const std::string& text);
std::string to_json(const SweepSpec& s);

struct PhaseRow {
  std::size_t cell = 0;
  Dims dims;
  std::string model;
  std::size_t n = 0;
  int trials = 0;  // trials run; fewer than requested after an early stop
  int successes = 0;
  int not_converged = 0;
  double success_frac = 0.0;
  double median_err = 0.0;
};

struct PhaseCellSummary {
  std::size_t cell = 0;
  Dims dims;
  std::optional<std::size_t> n_star;  // smallest grid n with success >= threshold
  std::size_t n_star_below = 0;       // next grid value below n_star (0 if none)
  std::size_t n_star_above = 0;       // next grid value above n_star (0 if none)
  int monotone_violations = 0;        // pairs out of order by more than 3 sigma
};

struct PhaseTable {
  std::vector<PhaseRow> rows;  // cell order, then increasing n
  std::vector<PhaseCellSummary> cells;
  // least-squares slope of log n* on log mean(dims) over cells with n*
  std::optional<double> slope;
};

std::vector<std::size_t> geometric_grid(std::size_t lo, std::size_t hi, double ratio);

/// One (cell, n) probe over spec.trials seeded trials.
PhaseRow run_probe(const SweepSpec& spec, std::size_t cell, std::size_t n);

PhaseTable phase_transition(const SweepSpec& spec);

std::string phase_csv_header();
std::string to_csv_row(const PhaseRow& r);
std::string phase_summary_csv_header();
std::string to_csv_row(const PhaseCellSummary& s);

struct ConcentrationSpec {
  std::vector<std::vector<double>> deltas;  // per mode, or a single value for all
  std::vector<std::size_t> n_values;
  int trials = 200;
  double alpha = 1.0;
  std::uint64_t seed_base = 0;
  int threads = 1;
  bool guard_override = false;
};

struct ConcentrationRow {
  std::size_t n = 0;
  std::vector<double> delta;
  int trials = 0;
  // quantiles of the bracket of ||Xbar - A||_{o,delta}; "lower" is the best
  // feasible value found, "upper" the certified bound
  double median_lower = 0.0;
  double q90_lower = 0.0;
  double median_upper = 0.0;
  double q90_upper = 0.0;
  double shape = 0.0;      // rate shape with constants set to 1
  double threshold = 0.0;  // general threshold, exact constants
};

struct ConcentrationTable {
  std::vector<ConcentrationRow> rows;  // delta order, then increasing n
  std::vector<double> slopes;          // per delta, log median_lower vs log n
  std::vector<bool> n_monotone;        // per delta, median nonincreasing in n
  bool delta_monotone_small_n = false;  // at the smallest n, median nonincreasing in delta
};

/// Xbar is the rescaled sampled mean of A over n draws with replacement. The
/// same draws are reused across deltas.
ConcentrationTable concentration_sweep(const DenseTensor& a, const ConcentrationSpec& spec);

std::string concentration_csv_header();
std::string to_csv_row(const ConcentrationRow& r);

struct ThresholdResult {
  double value = 0.0;
  bool side_condition = false;  // (8e / (9 log 2)) k^2 (log d)^3 <= d
  double d_mean = 0.0;
  double d_star = 0.0;
  double delta_star = 0.0;
  double delta_starstar = 0.0;
};

ThresholdResult concentration_threshold(double a_max, const Dims& dims,
                                        const std::vector<double>& delta, std::size_t n,
                                        double alpha);

/// max{(log d / n)^(1/2) delta^(k-2) d^(k-1/2), (log d / n) delta^(k-2) d^(k+1/2)} a_max
/// with d the mean dimension and delta the geometric mean of the deltas.
double concentration_shape(double a_max, const Dims& dims, const std::vector<double>& delta,
                           std::size_t n);

struct NetCheckRow {
  std::size_t d = 0;
  double delta = 0.0;
  int levels = 0;  // m
  std::uint64_t count = 0;
  double bound = 0.0;
  bool ok = false;
};

/// Enumerates the net for each d and delta; `boundary` adds delta = 1/sqrt(d).
std::vector<NetCheckRow> net_cardinality_check(const std::vector<std::size_t>& d_values,
                                               const std::vector<double>& deltas,
                                               bool boundary, bool guard_override = false);

std::string netcheck_csv_header();
std::string to_csv_row(const NetCheckRow& r);

/// Runs fn(0..count-1) on up to `threads` workers; results come back in index order.
template <class T>
std::vector<T> parallel_map(std::size_t count, int threads, const std::function<T(std::size_t)>& fn) {
  std::vector<std::optional<T>> slots(count);
  const std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(threads, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) slots[i].emplace(fn(i));
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            slots[i].emplace(fn(i));
          } catch (...) {
            std::lock_guard<std::mutex> lock(failure_mu);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }
  std::vector<T> out;
  out.reserve(count);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace itc
