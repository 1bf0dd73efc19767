// Acceptance criteria: one PASS/FAIL line each, exit status 1 if any fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>
#include <variant>
#include <vector>

#include "sdwave/bounds.hpp"
#include "sdwave/convergence.hpp"
#include "sdwave/functionals.hpp"
#include "sdwave/integrator.hpp"
#include "sdwave/mesh.hpp"
#include "sdwave/nonlinearity.hpp"

using namespace sdwave;
namespace fs = std::filesystem;

namespace {

constexpr double pi = std::numbers::pi;

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += (ok ? "" : "FAILED ") + what;
  }
};

std::string num(double x, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

int failures = 0;

void report(int id, const char* title, const std::function<Verdict()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = body();
  } catch (const std::exception& e) {
    v.pass = false;
    v.detail = std::string("exception: ") + e.what();
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!v.pass) ++failures;
  std::printf("%s [%2d] %s (%.2f s): %s\n", v.pass ? "PASS" : "FAIL", id, title, secs,
              v.detail.c_str());
  std::fflush(stdout);
}

Field sample_fn(const Domain& d, const std::function<double(double)>& g) {
  Field f(d);
  for (std::size_t k = 0; k < d.size(); ++k) f[k] = g(d.coordinates(k)[0]);
  return f;
}

Field six_sin(const Domain& d) {
  return sample_fn(d, [](double x) { return 6.0 * std::sin(pi * x); });
}

SolverConfig blowup_solver(double t_end) {
  SolverConfig c;
  c.t_end = t_end;
  return c;
}

SolverConfig fixed_solver(double dt, double t_end) {
  SolverConfig c;
  c.adaptive = false;
  c.dt0 = c.dt_max = dt;
  c.dt_min = 1e-3 * dt;
  c.t_end = t_end;
  return c;
}

template <typename F>
double seconds(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// A blow-up run together with the upper-bound variant it is checked against.
struct BlowupCase {
  std::string label;
  Trace trace;
  UpperBoundVariant variant;
  double t_stop = 0.0;
};

std::vector<BlowupCase> concavity_cases;

// The six-sine scenario is shared by criteria 4, 5, 6 and 9.
struct SixSine {
  Domain domain = Domain::interval(1.0, 2048);
  Field u0 = six_sin(domain);
  Field v0 = Field(domain);
  Nonlinearity nl = power(4.0);
  RunResult result;
  double runtime = 0.0;
  SixSine() {
    runtime = seconds([&] { result = run(blowup_solver(2.0), u0, v0, nl); });
  }
};

const SixSine& six() {
  static const SixSine s;
  return s;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Verdict eigenvalue() {
  Verdict v;
  double lam256 = 0.0;
  const double secs = seconds([&] { lam256 = discrete_lambda1(Domain::interval(1.0, 256)); });
  const double rel = std::abs(lam256 - pi * pi) / (pi * pi);
  v.require(rel < 5e-3, "n=256 lambda1 = " + num(lam256, 10) + ", rel err " + num(rel, 3) + " < 0.5%");
  v.require(secs < 1.0, "runtime " + num(secs, 3) + " s < 1 s");
  double prev = 0.0;
  std::string ratios;
  bool ok = true;
  for (int n : {32, 64, 128, 256}) {
    const double err = std::abs(discrete_lambda1(Domain::interval(1.0, n)) - pi * pi);
    if (prev > 0.0) {
      const double r = prev / err;
      ok = ok && r >= 3.5 && r <= 4.5;
      ratios += (ratios.empty() ? "" : ", ") + num(r, 5);
    }
    prev = err;
  }
  v.require(ok, "error ratios per halving [" + ratios + "] in [3.5, 4.5]");
  return v;
}

Verdict manufactured() {
  Verdict v;
  const Expr exact = parse("exp(-t)*sin(pi*x)");
  const Expr exact_t = parse("-exp(-t)*sin(pi*x)");
  // u*_tt - u*_xx - u*_xxt + u*_t = 0 for this u*, so g = -f(u*).
  const Expr g = parse("-abs(exp(-t)*sin(pi*x))^2*exp(-t)*sin(pi*x)");
  std::vector<ConvergenceLevel> levels;
  const double secs = seconds([&] {
    levels = convergence_study(Domain::interval(1.0, 32), 0.02, 1.0, 3, exact, exact_t, g,
                               power(4.0));
  });
  std::string orders;
  bool ok = true;
  for (std::size_t k = 1; k < levels.size(); ++k) {
    ok = ok && levels[k].order >= 1.9;
    orders += (orders.empty() ? "" : ", ") + num(levels[k].order, 5);
  }
  v.require(ok, "observed orders [" + orders + "] >= 1.9 (n = 32..128, dt = 0.02..0.005, errors " +
                    num(levels.front().error, 3) + " .. " + num(levels.back().error, 3) + ")");
  v.require(secs < 30.0, "runtime " + num(secs, 3) + " s < 30 s");
  return v;
}

Verdict energy_identity() {
  Verdict v;
  const Domain d = Domain::interval(1.0, 128);
  const Field u0 = sample_fn(d, [](double x) { return 2.0 * std::sin(pi * x); });
  const Field v0 = sample_fn(d, [](double x) { return x * (1.0 - x); });
  const Nonlinearity nl = power(4.0);
  const double E0 = energy(u0, v0, nl);
  std::vector<double> residuals;
  bool smooth = true;
  const double secs = seconds([&] {
    for (double dt : {2e-3, 1e-3, 5e-4}) {
      const RunResult r = run(fixed_solver(dt, 1.0), u0, v0, nl);
      smooth = smooth && std::holds_alternative<Completed>(r.outcome);
      residuals.push_back(max_abs_energy_residual(r.trace));
    }
  });
  v.require(smooth, "all runs completed before blow-up");
  std::string ratios;
  bool ok = true;
  for (std::size_t k = 1; k < residuals.size(); ++k) {
    const double q = residuals[k - 1] / residuals[k];
    ok = ok && q >= 3.0 && q <= 5.0;
    ratios += (ratios.empty() ? "" : ", ") + num(q, 5);
  }
  v.require(ok, "residual ratios [" + ratios + "] in [3, 5]");
  const double bound = 1e-6 * (1.0 + std::abs(E0));
  v.require(residuals.back() <= bound,
            "finest max|residual| " + num(residuals.back(), 3) + " <= " + num(bound, 3));
  v.require(secs < 30.0, "runtime " + num(secs, 3) + " s < 30 s");
  return v;
}

Verdict k_monotone() {
  Verdict v;
  const Trace& t = six().result.trace;
  std::size_t pairs = 0;
  for (std::size_t k = 1; k < t.rows.size(); ++k) pairs += std::max(t.rows[k - 1].I, t.rows[k].I) < 0.0;
  const std::size_t bad = count_k_monotonicity_violations(t, 1e-10);
  v.require(bad == 0, std::to_string(bad) + " violations of K increase over " +
                          std::to_string(pairs) + " recorded pairs with I < 0 (tol 1e-10 K)");
  v.require(pairs + 1 == t.rows.size(), "I < 0 at every recorded pair");
  return v;
}

Verdict unstable_set() {
  Verdict v;
  const SixSine& s = six();
  const CriterionResult c = criterion_high_energy(s.u0, s.v0, s.nl);
  const double fixture = 483.52555284152695;
  v.require(c.holds, "criterion holds at t = 0");
  v.require(std::abs(c.margin - fixture) <= 1e-3 * fixture,
            "margin " + num(c.margin, 8) + " vs fixture " + num(fixture, 8));
  double worst = -INFINITY;
  for (const auto& r : s.result.trace.rows) worst = std::max(worst, r.I);
  v.require(worst < 0.0, "max I(u(t)) over " + std::to_string(s.result.trace.rows.size()) +
                             " recorded times = " + num(worst, 4) + " < 0");
  v.require(std::holds_alternative<BlowupDetected>(s.result.outcome),
            "run ends in " + outcome_name(s.result.outcome));
  return v;
}

Verdict sandwich() {
  Verdict v;
  const SixSine& s = six();
  const BoundsReport b = evaluate_bounds(s.u0, s.v0, s.nl);
  if (!b.lower || !b.upper) {
    v.require(false, "bounds unavailable: " + b.lower_error + " " + b.upper_error);
    return v;
  }
  // Closed forms for u0 = 6 sin(πx), u1 = 0: M0 = 18π², C5 = 1/64, and the
  // negative-energy variant with λ = p = 4, b = -2E0, E0 = 9π² - 121.5.
  const double M0 = 18.0 * pi * pi;
  const double T_lower_exact = 32.0 / (M0 * M0);
  const double E0 = 9.0 * pi * pi - 121.5;
  const double bn = -2.0 * E0, a = 2.0 * 18.0 * (1.0 + pi * pi);
  const double T_upper_exact = 4.0 * (std::sqrt(a * a + 4.0 * bn * 18.0) + a) / (4.0 * bn);
  const double rl = std::abs(b.lower->T_lower - T_lower_exact) / T_lower_exact;
  const double ru = std::abs(b.upper->T_upper - T_upper_exact) / T_upper_exact;
  v.require(rl <= 1e-6, "T_lower " + num(b.lower->T_lower, 10) + " vs " + num(T_lower_exact, 10) +
                            " rel " + num(rl, 3));
  v.require(ru <= 1e-3, "T_upper " + num(b.upper->T_upper, 8) + " vs " + num(T_upper_exact, 8) +
                            " rel " + num(ru, 3));
  const auto* bd = std::get_if<BlowupDetected>(&s.result.outcome);
  if (bd == nullptr) {
    v.require(false, "run ended in " + outcome_name(s.result.outcome));
    return v;
  }
  // Convergence of the extrapolated time: half-resolution run.
  const Domain coarse = Domain::interval(1.0, 1024);
  const RunResult rc = run(blowup_solver(2.0), six_sin(coarse), Field(coarse), s.nl);
  const auto* bc = std::get_if<BlowupDetected>(&rc.outcome);
  const double T = bd->T_extrapolated;
  const double drift = bc ? std::abs(bc->T_extrapolated - T) / T : INFINITY;
  v.require(drift < 1e-3, "T_ext(n=2048) = " + num(T, 8) + ", T_ext(n=1024) drift " + num(drift, 3));
  v.require(T >= 1.05 * b.lower->T_lower, "T_ext >= 1.05 T_lower");
  v.require(T <= 0.95 * b.upper->T_upper, "T_ext <= 0.95 T_upper");
  v.require(bd->extrapolation_quality >= 0.9 && !bd->extrapolation_fallback,
            "quality " + num(bd->extrapolation_quality, 6));
  const double total = s.runtime;
  v.require(total < 120.0, "runtime " + num(total, 3) + " s < 120 s");
  concavity_cases.push_back({"six-sine", s.result.trace, b.upper->best(), bd->t_stop});
  return v;
}

Verdict negative_energy_family() {
  Verdict v;
  std::mt19937_64 rng(20261019);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const Domain d = Domain::interval(1.0, 256);
  int ok = 0, samples = 0;
  double worst_ratio = 0.0;
  std::string failures_seen;
  const double secs = seconds([&] {
    for (int k = 0; k < 20; ++k) {
      const Nonlinearity nl = power(k % 2 == 0 ? 4.0 : 3.0);
      // Shape: dominant first mode plus random higher modes; velocity random.
      const double c2 = 0.3 * U(rng), c3 = 0.2 * U(rng), w1 = U(rng), w2 = U(rng);
      const Field shape = sample_fn(d, [&](double x) {
        return std::sin(pi * x) + c2 * std::sin(2 * pi * x) + c3 * std::sin(3 * pi * x);
      });
      const Field vel = sample_fn(d, [&](double x) {
        return w1 * std::sin(pi * x) + w2 * std::sin(2 * pi * x);
      });
      // Smallest amplitude with E(0) < 0 and I(u0) < 0, then a random factor above it.
      double A = 1.0;
      auto admissible = [&](double amp) {
        const Field u0 = amp * shape, v0 = amp * vel;
        return energy(u0, v0, nl) < 0.0 && nehari(u0, nl) < 0.0;
      };
      while (!admissible(A)) A *= 1.1;
      A *= 1.0 + 0.5 * (U(rng) + 1.0);
      const Field u0 = A * shape, v0 = A * vel;
      const UpperBoundReport ub = upper_bound(u0, v0, nl);
      if (!ub.negative_energy) continue;
      ++samples;
      const double T_up = ub.negative_energy->T;
      const RunResult r = run(blowup_solver(1.05 * T_up), u0, v0, nl);
      const bool blew = is_blowup_evidence(r.outcome) && outcome_stop_time(r.outcome) < 1.05 * T_up;
      if (blew) {
        ++ok;
        worst_ratio = std::max(worst_ratio, outcome_stop_time(r.outcome) / T_up);
        concavity_cases.push_back({"negative-energy #" + std::to_string(k), r.trace,
                                   *ub.negative_energy, outcome_stop_time(r.outcome)});
      } else {
        failures_seen += " #" + std::to_string(k) + ":" + outcome_name(r.outcome);
      }
    }
  });
  v.require(samples == 20, std::to_string(samples) + "/20 samples with E(0) < 0 and I(u0) < 0");
  v.require(ok == samples, std::to_string(ok) + "/" + std::to_string(samples) +
                               " blow up before 1.05 T_upper" + failures_seen);
  v.require(true, "max t_stop/T_upper = " + num(worst_ratio, 4));
  v.require(secs < 300.0, "runtime " + num(secs, 3) + " s < 300 s");
  return v;
}

Verdict high_energy() {
  Verdict v;
  const Domain d = Domain::interval(1.0, 256);
  const Nonlinearity nl = power(4.0);
  const Field s = sample_fn(d, [](double x) { return std::sin(pi * x); });
  for (double H : {1.0, 10.0, 100.0}) {
    const HighEnergyData h = construct_high_energy_data(s, s, H, nl);
    const double E0 = energy(h.u0, h.v0, nl);
    const CriterionResult c = criterion_high_energy(h.u0, h.v0, nl);
    const UpperBoundReport ub = upper_bound(h.u0, h.v0, nl);
    const RunResult r = run(blowup_solver(1.05 * ub.T_upper), h.u0, h.v0, nl);
    const double t = outcome_stop_time(r.outcome);
    const std::string tag = "H=" + num(H, 3) + ": ";
    v.require(std::abs(E0 - H) <= 1e-8 * (1.0 + H), tag + "|E0-H| = " + num(std::abs(E0 - H), 3));
    v.require(c.holds && c.margin > 0.0, tag + "margin " + num(c.margin, 5));
    v.require(is_blowup_evidence(r.outcome) && t < 1.05 * ub.T_upper,
              tag + outcome_name(r.outcome) + " at " + num(t, 5) + " vs T_upper " + num(ub.T_upper, 5));
    if (is_blowup_evidence(r.outcome)) {
      concavity_cases.push_back({"high-energy H=" + num(H, 3), r.trace, ub.best(), t});
    }
  }
  return v;
}

Verdict concavity() {
  Verdict v;
  if (concavity_cases.empty()) {
    v.require(false, "no blow-up runs from criteria 6-8");
    return v;
  }
  int ok = 0;
  double worst = INFINITY;
  std::string worst_label, failed;
  for (const auto& c : concavity_cases) {
    const ConcavityResult r =
        concavity_check(c.trace, {c.variant.lambda, c.variant.b0, c.variant.eta0, c.t_stop});
    const double rel = r.min_defect / r.max_scale;
    if (rel < worst) {
      worst = rel;
      worst_label = c.label;
    }
    if (r.min_defect >= -1e-6 * r.max_scale) {
      ++ok;
    } else {
      failed += " " + c.label + "(" + num(rel, 3) + ")";
    }
  }
  v.require(ok == static_cast<int>(concavity_cases.size()),
            std::to_string(ok) + "/" + std::to_string(concavity_cases.size()) +
                " runs with min defect >= -1e-6 max(G|G''|)" + failed);
  v.require(true, "smallest min_defect/max(G|G''|) = " + num(worst, 3) + " (" + worst_label + ")");

  const Domain d = Domain::interval(1.0, 64);
  const RunResult z = run(blowup_solver(1.0), Field(d), Field(d), power(4.0));
  const ConcavityResult zr = concavity_check(z.trace, {3.0, 1.0, 1.0, 1.0});
  v.require(zr.min_defect < 0.0, "zero solution defect " + num(zr.min_defect, 4) + " < 0");
  return v;
}

Verdict hypotheses() {
  Verdict v;
  for (const Nonlinearity& nl : {power(4.0), power(3.0), logpower(4.0), logpower(3.5)}) {
    bool all = true;
    for (const CheckReport& r :
         {check_h1(nl, 100.0, 10000), check_h2(nl, 100.0, 10000), check_h3(nl, 100.0, 10000)}) {
      all = all && r.passed && r.samples == 10000;
    }
    v.require(all, nl.name + " H1-H3");
  }
  for (double p : {4.0, 3.5}) {
    const Nonlinearity nl = logpower(p);
    double worst = 0.0;
    for (double s : hypothesis_sample_grid(100.0, 10000)) {
      const double want = std::pow(std::abs(s), p) / p;
      worst = std::max(worst, std::abs(s * nl.f(s) - p * nl.F(s) - want) / want);
    }
    v.require(worst <= 1e-9, nl.name + " H1 residual vs |s|^p/p max rel " + num(worst, 3));
  }
  return v;
}

Verdict determinism() {
  Verdict v;
  const fs::path root = fs::temp_directory_path() / ("sdwave_accept_" + std::to_string(::getpid()));
  fs::remove_all(root);
  for (const char* name : {"six_sin_power4", "rectangle_2d"}) {
    const std::string cfg = std::string(SDWAVE_CONFIG_DIR) + "/" + name + ".toml";
    std::vector<std::string> traces, reports;
    bool codes = true;
    for (int k = 0; k < 3; ++k) {
      const fs::path out = root / name / std::to_string(k);
      const std::string cmd = std::string(SDWAVE_CLI) + " run -q --seed 42 -c " + cfg + " -o " +
                              out.string() + " >/dev/null 2>&1";
      const int status = std::system(cmd.c_str());
      codes = codes && WIFEXITED(status) && WEXITSTATUS(status) == 2;
      traces.push_back(slurp(out / "trace.csv"));
      reports.push_back(slurp(out / "report.json"));
    }
    const bool same = !traces[0].empty() && traces[0] == traces[1] && traces[1] == traces[2] &&
                      reports[0] == reports[1] && reports[1] == reports[2];
    v.require(codes && same, std::string(name) + ": 3 runs, exit 2, byte-identical trace.csv (" +
                                 std::to_string(traces[0].size()) + " B) and report.json");
  }
  fs::remove_all(root);
  return v;
}

}  // namespace

int main() {
  report(1, "eigenvalue fidelity", eigenvalue);
  report(2, "solver verification (manufactured solution)", manufactured);
  report(3, "energy identity", energy_identity);
  report(4, "monotonicity of K in the unstable set", k_monotone);
  report(5, "invariance of the unstable set", unstable_set);
  report(6, "sandwich of the blow-up time", sandwich);
  report(7, "negative-energy blow-up", negative_energy_family);
  report(8, "high-energy construction", high_energy);
  report(9, "concavity inequality", concavity);
  report(10, "hypothesis checkers", hypotheses);
  report(11, "determinism", determinism);
  std::printf("%d of 11 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
