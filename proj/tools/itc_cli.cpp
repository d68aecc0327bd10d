// Command-line front end for the norms, completion, certificate and experiment code.
// Exit codes: 0 all assertions held, 2 an assertion failed, 1 usage or input error.

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "itc/certificate.hpp"
#include "itc/completion.hpp"
#include "itc/experiments.hpp"
#include "itc/norms.hpp"
#include "itc/rng.hpp"

using namespace itc;
using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kAssert = 2;

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    const double v = std::stod(item, &used);
    if (used != item.size()) throw Error("bad number in list: " + item);
    out.push_back(v);
  }
  if (out.empty()) throw Error("empty list");
  return out;
}

Dims parse_dims(const std::string& s) {
  Dims d;
  for (double v : parse_list(s)) {
    if (v < 1 || v != std::floor(v)) throw Error("dims must be positive integers");
    d.push_back(static_cast<std::size_t>(v));
  }
  return d;
}

// theorem3 needs the tensor whose tangent space sets the coherence
IncoherenceParams delta_for(const std::string& spec, const DenseTensor& t) {
  if (spec == "theorem3") {
    RecoveryConfig rc;
    rc.compute_alpha = false;
    return IncoherenceParams(recovery_params(t, rc).delta, t.dims());
  }
  if (spec == "ones") return IncoherenceParams::ones(t.dims());
  std::vector<double> d = parse_list(spec);
  if (d.size() == 1) d.assign(t.order(), d[0]);
  return IncoherenceParams(d, t.dims());
}

void write_out(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << text;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

DenseTensor truth_or_random(const std::string& path, const std::string& dims, std::size_t rank,
                            std::uint64_t seed) {
  if (!path.empty()) return load_tnsr1(path);
  return random_lowrank(parse_dims(dims), LowRankModel::ortho_cp(rank), seed);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"incoherent tensor norms, completion and certificates"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  int trials = 0;
  std::string delta = "theorem3";
  std::string out;
  int threads = 1;
  bool guard_override = false;
  auto common = [&](CLI::App* c) {
    c->add_option("--seed", seed, "seed base");
    c->add_option("--delta", delta, "theorem3 | ones | comma list");
    c->add_option("--out", out, "output path (default stdout)");
    c->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    c->add_flag("--guard-override", guard_override, "allow enumerations above the size guard");
  };

  auto* norms = app.add_subcommand("norms", "incoherent spectral and nuclear norms of a TNSR1 tensor");
  std::string tensor_path;
  bool skip_nuclear = false;
  norms->add_option("tensor", tensor_path, "TNSR1 file")->required();
  norms->add_flag("--no-nuclear", skip_nuclear, "skip the nuclear-norm solve");
  common(norms);

  auto* comp = app.add_subcommand("complete", "recover a tensor from sampled entries");
  std::string truth_path, omega_path, dims_str = "8,8,8";
  std::size_t rank = 1, n = 0;
  bool with_repl = false;
  comp->add_option("--truth", truth_path, "TNSR1 ground truth (default: random rank-r)");
  comp->add_option("--omega", omega_path, "OMEGA1 sample file (default: drawn with --n)");
  comp->add_option("--dims", dims_str, "dims of the random truth");
  comp->add_option("--rank", rank, "rank of the random truth");
  comp->add_option("--n", n, "number of samples to draw");
  comp->add_flag("--with-replacement", with_repl, "draw samples with replacement");
  common(comp);

  auto* cert = app.add_subcommand("certify", "golfing-scheme dual certificate report");
  std::size_t n1 = 0, n2 = 0;
  bool solve = false;
  cert->add_option("--truth", truth_path, "TNSR1 ground truth (default: random rank-r)");
  cert->add_option("--dims", dims_str, "dims of the random truth");
  cert->add_option("--rank", rank, "rank of the random truth");
  cert->add_option("--n1", n1, "samples per batch")->required();
  cert->add_option("--n2", n2, "number of batches")->required();
  cert->add_flag("--solve", solve, "also run the solver on the pooled samples");
  common(cert);

  auto* phase = app.add_subcommand("phase", "phase-transition sweep");
  std::string config_path;
  phase->add_option("--config", config_path, "sweep spec JSON")->required();
  phase->add_option("--trials", trials, "trials per probe");
  common(phase);

  auto* conc = app.add_subcommand("concentrate", "Monte Carlo concentration sweep");
  std::string n_list = "25,50,100,200", delta_list = "1,0.8,0.6";
  double alpha = 1.0;
  conc->add_option("--truth", truth_path, "TNSR1 tensor A (default: random rank-r)");
  std::string conc_dims = "5,5,5";
  conc->add_option("--dims", conc_dims, "dims of the random A");
  conc->add_option("--rank", rank, "rank of the random A");
  conc->add_option("--n-list", n_list, "comma list of sample sizes");
  conc->add_option("--delta-list", delta_list, "comma list of scalar deltas");
  conc->add_option("--alpha", alpha, "tail parameter of the threshold");
  conc->add_option("--trials", trials, "Monte Carlo trials per row");
  common(conc);

  auto* net = app.add_subcommand("netcheck", "net cardinality audit");
  std::string d_list = "2,3,4,5,6,7,8", net_deltas = "1,0.8";
  bool boundary = true;
  net->add_option("--d-list", d_list, "comma list of dimensions");
  net->add_option("--delta-list", net_deltas, "comma list of deltas");
  net->add_option("--boundary", boundary, "also check delta = 1/sqrt(d)");
  common(net);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (norms->parsed()) {
      const DenseTensor x = load_tnsr1(tensor_path);
      const IncoherenceParams p = delta_for(delta, x);
      json j;
      j["delta"] = p.delta();
      SpectralConfig sc;
      sc.seed = seed;
      j["spectral_lb"] = json::parse(to_json(incoherent_spectral_lb(x, p, sc)));
      UpperConfig uc;
      uc.bracket.guard_override = guard_override;
      const SpectralUpper up = incoherent_spectral_upper(x, p, uc);
      j["spectral_upper"] = {{"value", up.value}, {"lower", up.lower}, {"method", up.method}};
      if (!skip_nuclear) j["nuclear_ub"] = json::parse(to_json(incoherent_nuclear_ub(x, p)));
      write_out(out, j.dump(2) + "\n");
      return kOk;
    }

    if (comp->parsed()) {
      const DenseTensor t = truth_or_random(truth_path, dims_str, rank, seed);
      SampleSet omega = [&] {
        if (!omega_path.empty()) return load_omega1(omega_path);
        if (n == 0) throw Error("complete: need --omega or --n");
        return sample_omega(t.dims(), n, with_repl ? Replacement::with : Replacement::without,
                            derive_seed(seed, 1));
      }();
      const CompletionProblem prob = CompletionProblem::from_truth(t, omega, delta_for(delta, t));
      const SolverResult r = complete(prob);
      json j = json::parse(to_json(r));
      const double err = hs_norm(r.estimate - t) / hs_norm(t);
      j["rel_err"] = err;
      j["distinct_samples"] = prob.omega.size();
      write_out(out, j.dump(2) + "\n");
      return kOk;
    }

    if (cert->parsed()) {
      const DenseTensor t = truth_or_random(truth_path, dims_str, rank, seed);
      const IncoherenceParams p = delta_for(delta, t);
      const SampleSet b = sample_batches(t.dims(), n1, n2, derive_seed(seed, 2));
      CertificateConfig cfg;
      cfg.n1 = n1;
      cfg.n2 = n2;
      cfg.seed = seed;
      cfg.upper.bracket.guard_override = guard_override;
      std::optional<DenseTensor> est;
      if (solve) est = complete(CompletionProblem::from_truth(t, b, p)).estimate;
      const CertificateReport r = golfing_certificate(t, b, p, cfg, est ? &*est : nullptr);
      write_out(out, to_json(r) + "\n");
      const bool ok = !r.contradiction && r.telescoping_err <= cfg.telescoping_tol * r.w_max[0];
      return ok ? kOk : kAssert;
    }

    if (phase->parsed()) {
      SweepSpec spec = sweep_spec_from_json(read_file(config_path));
      if (phase->count("--seed")) spec.seed_base = seed;
      if (trials > 0) spec.trials = trials;
      if (phase->count("--threads")) spec.threads = threads;
      if (!out.empty()) spec.output_path = out;
      spec.validate();
      const PhaseTable table = phase_transition(spec);
      std::string rows = phase_csv_header() + "\n";
      for (const PhaseRow& r : table.rows) rows += to_csv_row(r) + "\n";
      std::string summary = phase_summary_csv_header() + "\n";
      int violations = 0;
      for (const PhaseCellSummary& s : table.cells) {
        summary += to_csv_row(s) + "\n";
        violations += s.monotone_violations;
      }
      if (spec.output_path.empty()) {
        std::cout << rows << summary;
      } else {
        write_out(spec.output_path, rows);
        write_out(spec.output_path + ".summary.csv", summary);
      }
      std::cerr << "slope: " << (table.slope ? std::to_string(*table.slope) : "n/a") << "\n";
      return violations == 0 ? kOk : kAssert;
    }

    if (conc->parsed()) {
      const DenseTensor a = truth_or_random(truth_path, conc_dims, rank, seed);
      ConcentrationSpec spec;
      for (double d : parse_list(delta_list)) spec.deltas.push_back({d});
      for (double v : parse_list(n_list)) {
        if (v < 1 || v != std::floor(v)) throw Error("n must be a positive integer");
        spec.n_values.push_back(static_cast<std::size_t>(v));
      }
      if (trials > 0) spec.trials = trials;
      spec.alpha = alpha;
      spec.seed_base = seed;
      spec.threads = threads;
      spec.guard_override = guard_override;
      const ConcentrationTable table = concentration_sweep(a, spec);
      std::string rows = concentration_csv_header() + "\n";
      bool ok = true;
      for (const ConcentrationRow& r : table.rows) {
        rows += to_csv_row(r) + "\n";
        ok = ok && r.q90_lower >= r.median_lower && r.q90_upper >= r.median_upper;
      }
      write_out(out, rows);
      for (std::size_t i = 0; i < table.slopes.size(); ++i) {
        std::cerr << "delta " << spec.deltas[i][0] << ": slope " << table.slopes[i]
                  << ", nonincreasing in n " << (table.n_monotone[i] ? "yes" : "no") << "\n";
        ok = ok && table.n_monotone[i];
      }
      std::cerr << "nonincreasing in delta at smallest n: "
                << (table.delta_monotone_small_n ? "yes" : "no") << "\n";
      return ok ? kOk : kAssert;
    }

    if (net->parsed()) {
      Dims ds;
      for (double v : parse_list(d_list)) {
        if (v < 1 || v != std::floor(v)) throw Error("d must be a positive integer");
        ds.push_back(static_cast<std::size_t>(v));
      }
      const auto rows = net_cardinality_check(ds, parse_list(net_deltas), boundary, guard_override);
      std::string text = netcheck_csv_header() + "\n";
      bool ok = true;
      for (const NetCheckRow& r : rows) {
        text += to_csv_row(r) + "\n";
        ok = ok && r.ok;
      }
      write_out(out, text);
      return ok ? kOk : kAssert;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
