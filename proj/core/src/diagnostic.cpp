#include "calibdiag/diagnostic.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "calibdiag/errors.hpp"
#include "calibdiag/rng.hpp"

#ifndef CALIBDIAG_VERSION
#define CALIBDIAG_VERSION "0.0.0"
#endif

namespace calibdiag {

std::string_view to_string(Decision d) {
  switch (d) {
    case Decision::prefer_supervised: return "prefer_supervised";
    case Decision::prefer_soft: return "prefer_soft";
    case Decision::either_acceptable: return "either_acceptable";
    case Decision::collapse: return "collapse";
  }
  return "unknown";
}

Decision decision_from_string(std::string_view s) {
  if (s == "prefer_supervised") return Decision::prefer_supervised;
  if (s == "prefer_soft") return Decision::prefer_soft;
  if (s == "either_acceptable") return Decision::either_acceptable;
  if (s == "collapse") return Decision::collapse;
  throw InvalidArgument("unknown decision '" + std::string(s) + "'");
}

std::string library_version() { return CALIBDIAG_VERSION; }

void DiagnosticConfig::validate() const {
  if (thresholds.empty()) throw InvalidArgument("threshold grid is empty");
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    const double t = thresholds[i];
    if (!(t > 0.0 && t < 1.0)) throw InvalidArgument("thresholds must lie strictly inside (0, 1)");
    if (i > 0 && !(thresholds[i - 1] < t)) throw InvalidArgument("thresholds must be strictly ascending");
  }
  if (folds_k < 2) throw InvalidFoldCount(0, folds_k);
  if (!(kappa_tolerance >= 0.0)) throw InvalidArgument("kappa_tolerance must be nonnegative");
}

bool operator==(const KappaEstimate& a, const KappaEstimate& b) {
  return a.threshold == b.threshold && a.kappa_hat == b.kappa_hat && a.n_effective == b.n_effective;
}

bool operator==(const LabelLeakResult& a, const LabelLeakResult& b) {
  return a.wald_stat == b.wald_stat && a.df == b.df && a.p_value == b.p_value &&
         a.x_coefficients == b.x_coefficients;
}

bool operator==(const DiagnosticReport& a, const DiagnosticReport& b) {
  return a.v_star_hat == b.v_star_hat && a.kappas == b.kappas &&
         a.se_soft_implied == b.se_soft_implied && a.se_supervised == b.se_supervised &&
         a.label_leak == b.label_leak && a.decision == b.decision && a.notes == b.notes &&
         a.seed == b.seed && a.version == b.version;
}

Decision decide(double v_star_hat, double epsilon_vstar, double se_soft_implied,
                std::optional<double> se_supervised, const std::vector<KappaEstimate>& kappas,
                double kappa_tolerance) {
  if (!(v_star_hat > epsilon_vstar)) return Decision::collapse;
  if (se_supervised && se_soft_implied > *se_supervised) return Decision::prefer_supervised;
  if (kappas.empty()) return Decision::either_acceptable;
  for (const auto& k : kappas) {
    if (!(std::abs(k.kappa_hat - 1.0) > kappa_tolerance)) return Decision::either_acceptable;
  }
  return Decision::prefer_soft;
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

DiagnosticReport run_diagnostic(const UnlabelledSet& u, const std::optional<LabelledSet>& l,
                                const DiagnosticConfig& cfg) {
  cfg.validate();
  if (l && l->x_cols().size() != u.x_cols().size()) {
    throw SchemaError("x_columns", "labelled and unlabelled sets have different control widths");
  }

  DiagnosticReport report;
  report.seed = cfg.seed;
  report.version = library_version();

  const FoldAssignment folds = make_folds(static_cast<std::size_t>(u.size()), cfg.folds_k, cfg.seed);
  EstimatorOptions options;
  options.learner = cfg.learner;
  options.epsilon_vstar = cfg.epsilon_vstar;
  const Nuisances nuisances = fit_nuisances(u, folds, options);

  report.v_star_hat = residual_variance(u.p(), nuisances.r_hat.oof_predictions);
  const bool collapsed = !(report.v_star_hat > cfg.epsilon_vstar);
  if (collapsed) {
    report.se_soft_implied = std::numeric_limits<double>::infinity();
    report.notes.push_back("V*_hat " + fmt(report.v_star_hat) +
                           " is at or below the collapse floor; the score is a deterministic function of X");
  } else {
    report.se_soft_implied = soft_estimator(u, nuisances, cfg.epsilon_vstar).tau.se;
  }

  // Sweep: results land by index, so the report does not depend on scheduling.
  const std::size_t m = cfg.thresholds.size();
  std::vector<std::optional<KappaEstimate>> sweep(m);
  std::vector<std::string> failures(m);
  parallel_for(m, cfg.threads, [&](std::size_t i) {
    const double t = cfg.thresholds[i];
    try {
      sweep[i] = kappa_hat(u, t, folds, nuisances.r_hat.oof_predictions, options);
    } catch (const DegenerateThreshold& e) {
      failures[i] = "threshold " + fmt(t) + " skipped: " + e.what();
    } catch (const SingularDesign& e) {
      failures[i] = "threshold " + fmt(t) + " skipped: " + e.what();
    }
  });
  for (std::size_t i = 0; i < m; ++i) {
    if (sweep[i]) report.kappas.push_back(*sweep[i]);
    if (!failures[i].empty()) report.notes.push_back(failures[i]);
  }
  if (report.kappas.empty()) report.notes.push_back("no threshold produced a usable kappa");

  if (l) {
    const TauEstimate sup = supervised_baseline(*l);
    report.se_supervised = sup.se;
    if (sup.regularized) report.notes.push_back("supervised baseline used the singular-design ridge fallback");
    if (l->p()) {
      try {
        report.label_leak = label_leak_test(*l->p(), extract_controls(*l), l->g());
        if (report.label_leak->p_value < 0.05) {
          report.notes.push_back("label-leak test rejects at 0.05 (p = " + fmt(report.label_leak->p_value) +
                                 "): X predicts G beyond p");
        }
      } catch (const DegenerateTest& e) {
        report.notes.push_back(std::string("label-leak test not run: ") + e.what());
      }
    } else {
      report.notes.push_back("labelled set has no scores; label-leak test not run");
    }
  }

  report.decision = decide(report.v_star_hat, cfg.epsilon_vstar, report.se_soft_implied,
                           report.se_supervised, report.kappas, cfg.kappa_tolerance);
  return report;
}

}  // namespace calibdiag
