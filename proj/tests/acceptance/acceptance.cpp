// Acceptance suite: one PASS/FAIL line per criterion, tolerances pinned here.
// Exit status is 0 iff every criterion passes.

#include <cstdio>
#include <string>
#include <vector>

#include "langevin/experiments.hpp"

namespace {

using namespace langevin;

struct Line {
  int id;
  std::string title;
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

RunConfig base(double dt, std::size_t paths) {
  RunConfig c;
  c.dt = dt;
  c.t_max = 1.0;
  c.paths = paths;
  c.seed = 0;
  return c;
}

Line time_change() {
  const auto g = lemma1_gate(base(1e-3, 100));
  const bool fast = g.seconds <= 60.0;
  return {1, "Time-change identity", g.pass && fast,
          "max |T - t - sigma'(A)| = " + fmt("%.3g", g.report["max"]) + " (tol 2e-3), " +
              fmt("%.2f s", g.seconds) + " (limit 60 s)"};
}

Line reconstruction() {
  const auto g = prop2_gate(base(1e-3, 100));
  return {2, "Reconstruction of W", g.pass,
          "max |W - (B o tau + B' o tau')| = " + fmt("%.3g", g.report["max"]) + " (tol 1e-12)"};
}

Line round_trip() {
  const auto g = prop3_gate(base(1e-3, 100));
  return {3, "Recovery round trip", g.pass,
          "max (ii) = " + fmt("%.3g", g.report["residual_ii"]["max"]) +
              ", max (iii) = " + fmt("%.3g", g.report["residual_iii"]["max"]) + " (tol 2e-3)"};
}

Line weak_uniqueness() {
  RunConfig c = base(1e-4, 200);
  c.method = "sde";
  const auto bm = bm_gate(c);
  RunConfig x = base(1e-4, 10000);
  const auto cc = crosscheck_gate(x, 1e-3);
  const double secs = bm.seconds + cc.seconds;
  const bool pass = bm.pass && cc.pass && secs <= 600.0;
  return {4, "Weak uniqueness cross-check", pass,
          "battery pass fraction = " + fmt("%.3f", bm.report["pass_fraction"]) +
              " (need >= 0.95), KS p(X_1) = " + fmt("%.4g", cc.report["ks"]["p_value"]) +
              " (need > 1e-3), excluded " + std::to_string(cc.report["excluded_at_cap"].get<std::size_t>()) +
              ", " + fmt("%.1f s", secs) + " (limit 600 s)"};
}

Line zero_set() {
  const auto g = zero_set_gate(base(1e-3, 100), {1e-2, 1e-3, 1e-4});
  auto m = [&](const char* k) {
    const auto& v = g.report[k]["medians"];
    return fmt("%.3g", v[0]) + " > " + fmt("%.3g", v[1]) + " > " + fmt("%.3g", v[2]);
  };
  return {5, "Zero-set measure", g.pass,
          "median construction " + m("construction") + ", integrator " + m("sde")};
}

Line inelastic() {
  const auto g = inelastic_gate(base(1e-4, 100));
  return {6, "Inelastic constraint audit", g.pass,
          std::to_string(g.report["clamped_steps"].get<std::size_t>()) + " clamped steps in " +
              std::to_string(g.report["traces"].get<std::size_t>()) + " traces, " +
              std::to_string(g.report["violations"].get<std::size_t>()) + " violations"};
}

Line scaling() {
  const auto g = scaling_gate(base(1e-3, 10000), 4.0, 1e-3);
  return {7, "Scaling X_4 vs 8 X_1", g.pass,
          "KS D = " + fmt("%.4g", g.report["ks"]["statistic"]) + ", p = " +
              fmt("%.4g", g.report["ks"]["p_value"]) + " (need > 1e-3)"};
}

Line counterexample() {
  RunConfig c;
  c.k = 1;
  c.tol = 1e-6;
  const auto g = counterexample_gate(c);
  const bool fast = g.seconds <= 5.0;
  return {8, "Counterexample k = 1", g.pass && fast,
          "X_alpha " + std::string(g.report["X_alpha"]["pass"] ? "ok" : "FAILED") + ", X_beta " +
              std::string(g.report["X_beta"]["pass"] ? "ok" : "FAILED") +
              ", divergence(2) = " + fmt("%.12g", g.report["divergence_at_2"]) + " (want 70), " +
              fmt("%.2f s", g.seconds) + " (limit 5 s)"};
}

Line splice() {
  const auto g = splice_gate(base(1e-3, 20), {0.5, 0.1, 0.02});
  return {9, "Epsilon splicing", g.pass,
          std::to_string(g.report["nonmonotone_paths"].get<std::size_t>()) +
              " of 20 paths with sup|W_eps - W| increasing as eps decreases"};
}

Line calibration() {
  const auto g = calibration_gate(0);
  return {10, "Calibration at alpha = 0.01", g.pass,
          "rejections out of 100: one-sample " +
              std::to_string(g.report["ks_one_sample_rejections"].get<std::size_t>()) +
              ", two-sample " + std::to_string(g.report["ks_two_sample_rejections"].get<std::size_t>()) +
              " (band 0.5 to 2 per 100)"};
}

}  // namespace

int main() {
  std::vector<Line (*)()> criteria = {time_change, reconstruction, round_trip, weak_uniqueness, zero_set,
                                      inelastic, scaling, counterexample, splice, calibration};
  int failed = 0;
  for (auto* c : criteria) {
    Line l;
    try {
      l = c();
    } catch (const std::exception& e) {
      l = {0, "criterion threw", false, e.what()};
    }
    std::printf("[%s] %2d %s: %s\n", l.pass ? "PASS" : "FAIL", l.id, l.title.c_str(),
                l.detail.c_str());
    std::fflush(stdout);
    failed += l.pass ? 0 : 1;
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
