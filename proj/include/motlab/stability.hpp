#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "motlab/adapted.hpp"
#include "motlab/costexpr.hpp"
#include "motlab/errors.hpp"
#include "motlab/measures.hpp"
#include "motlab/mot.hpp"

namespace motlab {

enum class SchemeKind { quantile_resolution, mean_preserving_noise, mixture_shift };

inline const char* to_string(SchemeKind k) {
  switch (k) {
    case SchemeKind::quantile_resolution: return "quantile_resolution";
    case SchemeKind::mean_preserving_noise: return "mean_preserving_noise";
    case SchemeKind::mixture_shift: return "mixture_shift";
  }
  return "?";
}

inline SchemeKind scheme_kind_from_string(const std::string& s) {
  if (s == "quantile_resolution") return SchemeKind::quantile_resolution;
  if (s == "mean_preserving_noise") return SchemeKind::mean_preserving_noise;
  if (s == "mixture_shift") return SchemeKind::mixture_shift;
  throw Error("unknown scheme kind '" + s + "'");
}

/// Marginal perturbation schedule. Levels are resolutions n for
/// quantile_resolution and scale parameters sigma otherwise. The seed
/// feeds per-level derived seeds (seed + level index) so concurrent
/// execution cannot change results.
struct PerturbationScheme {
  SchemeKind kind = SchemeKind::quantile_resolution;
  std::vector<double> levels;
  std::uint64_t seed = 0;
};

struct StabilityRow {
  double level = 0;
  double w_oplus_gap = 0;
  double value_gap = 0;
  double lower_hemi_dist = 0;
  /// Upper sweeps: distance to the eps-optimal face of the base problem.
  double upper_hemi_dist = 0;
  /// Upper sweeps: plain distance to M(base); carried in JSON reports.
  double upper_set_dist = 0;
};

struct StabilityVerdicts {
  bool final_gap_ok = true;
  bool band_ok = true;
  bool w_oplus_monotone = true;
  bool pass = true;
};

struct StabilityReport {
  SchemeKind kind = SchemeKind::quantile_resolution;
  std::uint64_t seed = 0;
  double reference_value = 0;
  std::vector<StabilityRow> rows;
  StabilityVerdicts verdicts;
  long rejected_draws = 0;
};

/// A convergent sequence in the graph of the martingale-coupling
/// correspondence, for hand-built hemicontinuity experiments.
struct HemiTestCase {
  MeasurePair limit_pair;
  std::vector<MeasurePair> sequence_pairs;
  std::vector<Coupling> couplings;           // one per sequence pair (upper)
  std::optional<Coupling> target_coupling;   // lower direction

  void validate() const {
    auto check_pair = [](const MeasurePair& p) {
      if (!check_convex_order(p.mu1, p.mu2).holds())
        throw NotInConvexOrderError(check_convex_order(p.mu1, p.mu2));
    };
    check_pair(limit_pair);
    for (const auto& p : sequence_pairs) check_pair(p);
    if (!couplings.empty() && couplings.size() != sequence_pairs.size())
      throw DimensionMismatchError("one coupling per sequence pair expected");
    for (std::size_t i = 0; i < couplings.size(); ++i) {
      if (w1(couplings[i].first_marginal(), sequence_pairs[i].mu1) > 1e-8 ||
          w1(couplings[i].second_marginal(), sequence_pairs[i].mu2) > 1e-8)
        throw Error("coupling marginals do not match their pair");
    }
    if (target_coupling) {
      if (w1(target_coupling->first_marginal(), limit_pair.mu1) > 1e-8 ||
          w1(target_coupling->second_marginal(), limit_pair.mu2) > 1e-8 ||
          martingale_residual(*target_coupling) >
              martingale_tol(*target_coupling))
        throw NotInMartingaleSetError(
            "target coupling is not a martingale coupling of the limit pair");
    }
  }
};

namespace stability_detail {

template <typename Fn>
void for_each_level(std::size_t n, unsigned threads, Fn&& fn) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  unsigned count = std::min<unsigned>(threads, static_cast<unsigned>(n));
  pool.reserve(count);
  for (unsigned t = 0; t < count; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

inline bool within_band(const std::vector<double>& gaps) {
  // Factor-2 monotonicity band: each gap may exceed the running
  // minimum by at most a factor of two (plus an absolute slack that
  // forgives exact-zero jitter).
  double running = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < gaps.size(); ++k) {
    if (k > 0 && gaps[k] > 2.0 * running + 1e-12) return false;
    running = std::min(running, gaps[k]);
  }
  return true;
}

inline bool nonincreasing(const std::vector<double>& v) {
  for (std::size_t k = 1; k < v.size(); ++k)
    if (v[k] > v[k - 1] + 1e-12) return false;
  return true;
}

}  // namespace stability_detail

/// Generates the perturbed marginal pairs for a scheme. Every output
/// pair is re-verified for convex order; a violation means the scheme
/// itself is broken and raises SchemeViolationError.
inline std::vector<MeasurePair> generate_sequence(
    const MeasurePair& base, const PerturbationScheme& scheme) {
  OrderVerdict base_verdict = check_convex_order(base.mu1, base.mu2);
  if (!base_verdict.holds()) throw NotInConvexOrderError(base_verdict);

  std::vector<MeasurePair> out;
  out.reserve(scheme.levels.size());
  for (double level : scheme.levels) {
    switch (scheme.kind) {
      case SchemeKind::quantile_resolution: {
        long n = std::llround(level);
        if (n < 1) throw Error("quantile_resolution level must be >= 1");
        out.push_back({quantize(base.mu1, static_cast<std::size_t>(n)),
                       quantize(base.mu2, static_cast<std::size_t>(n))});
        break;
      }
      case SchemeKind::mean_preserving_noise: {
        double sigma = level;
        if (sigma < 0) throw Error("noise scale must be nonnegative");
        // Mean-preserving spread of mu2 only: each atom x splits into
        // x +- sigma with half its weight, so mu1 <= mu2 <= spread(mu2).
        std::vector<double> atoms, weights;
        atoms.reserve(2 * base.mu2.size());
        for (std::size_t i = 0; i < base.mu2.size(); ++i) {
          atoms.push_back(base.mu2.atoms()[i] - sigma);
          weights.push_back(0.5 * base.mu2.weights()[i]);
          atoms.push_back(base.mu2.atoms()[i] + sigma);
          weights.push_back(0.5 * base.mu2.weights()[i]);
        }
        out.push_back(
            {base.mu1, DiscreteMeasure(std::move(atoms), std::move(weights))});
        break;
      }
      case SchemeKind::mixture_shift: {
        double sigma = level;
        if (sigma < 0 || sigma > 1) throw Error("mixture weight must lie in [0, 1]");
        // Shrinks mu1 toward its mean: (1-sigma) mu1 + sigma delta_mean
        // stays below mu1 (hence below mu2) in convex order.
        std::vector<double> atoms = base.mu1.atoms();
        std::vector<double> weights = base.mu1.weights();
        for (double& w : weights) w *= 1.0 - sigma;
        atoms.push_back(base.mu1.mean());
        weights.push_back(sigma);
        out.push_back(
            {DiscreteMeasure(std::move(atoms), std::move(weights)), base.mu2});
        break;
      }
    }
    const MeasurePair& p = out.back();
    if (!check_convex_order(p.mu1, p.mu2).holds())
      throw SchemeViolationError("perturbation scheme produced a pair out of convex order at level " +
                                 format_double(level));
  }
  return out;
}

/// Value-continuity experiment: m(pair_n) against m(base) along the
/// schedule, with the W-oplus gap of each level.
inline StabilityReport value_continuity_sweep(
    const MeasurePair& base, const PayoffExpr& payoff,
    const PerturbationScheme& scheme, LpSense sense = LpSense::maximize,
    unsigned threads = 1, double final_tol = 1e-6) {
  std::vector<MeasurePair> pairs = generate_sequence(base, scheme);
  SolveReport ref = solve_mot({base, payoff, sense});

  StabilityReport report;
  report.kind = scheme.kind;
  report.seed = scheme.seed;
  report.reference_value = ref.value;
  report.rows.resize(pairs.size());
  stability_detail::for_each_level(
      pairs.size(), threads, [&](std::size_t i) {
        SolveReport rn = solve_mot({pairs[i], payoff, sense});
        report.rows[i] = StabilityRow{scheme.levels[i], w_oplus(pairs[i], base),
                                      std::abs(rn.value - ref.value), 0, 0, 0};
      });

  std::vector<double> gaps, wgaps;
  for (const auto& r : report.rows) {
    gaps.push_back(r.value_gap);
    wgaps.push_back(r.w_oplus_gap);
  }
  double threshold = std::max(1e-6, final_tol);
  report.verdicts.final_gap_ok = !gaps.empty() && gaps.back() <= threshold;
  report.verdicts.band_ok = stability_detail::within_band(gaps);
  report.verdicts.w_oplus_monotone =
      scheme.kind != SchemeKind::quantile_resolution ||
      stability_detail::nonincreasing(wgaps);
  report.verdicts.pass =
      report.verdicts.final_gap_ok && report.verdicts.band_ok;
  return report;
}

/// Lower-hemicontinuity experiment: distance from a fixed martingale
/// coupling of the base pair to M(pair_n) along the schedule.
inline StabilityReport lower_hemi_sweep(const MeasurePair& base,
                                        const Coupling& target,
                                        const PerturbationScheme& scheme,
                                        unsigned threads = 1,
                                        double final_tol = 1e-6) {
  if (w1(target.first_marginal(), base.mu1) > 1e-8 ||
      w1(target.second_marginal(), base.mu2) > 1e-8)
    throw NotInMartingaleSetError("target marginals do not match the base pair");
  if (martingale_residual(target) > martingale_tol(target))
    throw NotInMartingaleSetError("target violates the barycenter constraints");

  std::vector<MeasurePair> pairs = generate_sequence(base, scheme);
  StabilityReport report;
  report.kind = scheme.kind;
  report.seed = scheme.seed;
  report.reference_value = 0;
  report.rows.resize(pairs.size());
  stability_detail::for_each_level(
      pairs.size(), threads, [&](std::size_t i) {
        double d = project_to_martingale_set(target, pairs[i]).distance;
        report.rows[i] = StabilityRow{scheme.levels[i], w_oplus(pairs[i], base),
                                      0, d, 0, 0};
      });

  std::vector<double> gaps;
  for (const auto& r : report.rows) gaps.push_back(r.lower_hemi_dist);
  double threshold = std::max(1e-6, final_tol);
  report.verdicts.final_gap_ok = !gaps.empty() && gaps.back() <= threshold;
  report.verdicts.band_ok = stability_detail::within_band(gaps);
  report.verdicts.w_oplus_monotone =
      scheme.kind != SchemeKind::quantile_resolution || [&] {
        std::vector<double> w;
        for (const auto& r : report.rows) w.push_back(r.w_oplus_gap);
        return stability_detail::nonincreasing(w);
      }();
  report.verdicts.pass = report.verdicts.final_gap_ok;
  return report;
}

/// Upper-hemicontinuity experiment: solve each perturbed pair and
/// measure how far its optimizer is from M(base) (set approach) and
/// from the eps-optimal face of the base problem (optimizer approach).
inline StabilityReport upper_hemi_sweep(
    const MeasurePair& base, const PayoffExpr& payoff,
    const PerturbationScheme& scheme, LpSense sense = LpSense::maximize,
    unsigned threads = 1, double final_tol = 1e-6) {
  std::vector<MeasurePair> pairs = generate_sequence(base, scheme);
  SolveReport ref = solve_mot({base, payoff, sense});
  const double eps = 1e-6 * (1.0 + std::abs(ref.value));
  MotProblem base_problem{base, payoff, sense};

  StabilityReport report;
  report.kind = scheme.kind;
  report.seed = scheme.seed;
  report.reference_value = ref.value;
  report.rows.resize(pairs.size());
  stability_detail::for_each_level(
      pairs.size(), threads, [&](std::size_t i) {
        SolveReport rn = solve_mot({pairs[i], payoff, sense});
        double set_d =
            project_to_martingale_set(rn.optimizer, base).distance;
        double face_d = project_to_eps_face(rn.optimizer, base_problem,
                                            ref.value, eps, ref.optimizer)
                            .distance;
        report.rows[i] =
            StabilityRow{scheme.levels[i], w_oplus(pairs[i], base),
                         std::abs(rn.value - ref.value), 0, face_d, set_d};
      });

  double threshold = std::max(1e-6, final_tol);
  std::vector<double> faces;
  for (const auto& r : report.rows) faces.push_back(r.upper_hemi_dist);
  report.verdicts.final_gap_ok =
      !report.rows.empty() &&
      report.rows.back().upper_hemi_dist <= threshold &&
      report.rows.back().upper_set_dist <= threshold;
  report.verdicts.band_ok = stability_detail::within_band(faces);
  report.verdicts.w_oplus_monotone = true;
  report.verdicts.pass = report.verdicts.final_gap_ok;
  return report;
}

enum class ReportFormat { json, csv };

/// Serializes a report. The CSV header is fixed:
/// level,w_oplus_gap,value_gap,lower_hemi_dist,upper_hemi_dist
inline std::string emit_report(const StabilityReport& r, ReportFormat format) {
  std::string out;
  if (format == ReportFormat::csv) {
    out += "level,w_oplus_gap,value_gap,lower_hemi_dist,upper_hemi_dist\n";
    for (const auto& row : r.rows) {
      out += format_double(row.level);
      out += ',';
      out += format_double(row.w_oplus_gap);
      out += ',';
      out += format_double(row.value_gap);
      out += ',';
      out += format_double(row.lower_hemi_dist);
      out += ',';
      out += format_double(row.upper_hemi_dist);
      out += '\n';
    }
    return out;
  }
  out += "{\"kind\":\"";
  out += to_string(r.kind);
  out += "\",\"seed\":" + std::to_string(r.seed);
  out += ",\"reference_value\":" + format_double(r.reference_value);
  out += ",\"rejected_draws\":" + std::to_string(r.rejected_draws);
  out += ",\"rows\":[";
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    const auto& row = r.rows[i];
    if (i) out += ',';
    out += "{\"level\":" + format_double(row.level);
    out += ",\"w_oplus_gap\":" + format_double(row.w_oplus_gap);
    out += ",\"value_gap\":" + format_double(row.value_gap);
    out += ",\"lower_hemi_dist\":" + format_double(row.lower_hemi_dist);
    out += ",\"upper_hemi_dist\":" + format_double(row.upper_hemi_dist);
    out += ",\"upper_set_dist\":" + format_double(row.upper_set_dist);
    out += '}';
  }
  out += "],\"verdicts\":{";
  auto flag = [](bool b) { return b ? "true" : "false"; };
  out += std::string("\"final_gap_ok\":") + flag(r.verdicts.final_gap_ok);
  out += std::string(",\"band_ok\":") + flag(r.verdicts.band_ok);
  out += std::string(",\"w_oplus_monotone\":") + flag(r.verdicts.w_oplus_monotone);
  out += std::string(",\"pass\":") + flag(r.verdicts.pass);
  out += "}}";
  return out;
}

}  // namespace motlab
