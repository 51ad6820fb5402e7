#include "calibdiag/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "calibdiag/calibration.hpp"
#include "calibdiag/errors.hpp"
#include "calibdiag/estimators.hpp"
#include "calibdiag/rng.hpp"
#include "calibdiag/stats.hpp"

namespace calibdiag {

McSummary mc_aggregate(std::span<const TauEstimate> estimates, double true_tau) {
  if (estimates.empty()) throw EmptyInput("mc_aggregate needs at least one estimate");
  const double r = static_cast<double>(estimates.size());
  McSummary s;
  s.replications = estimates.size();
  double sum = 0.0;
  for (const auto& e : estimates) sum += e.tau_hat;
  s.mean_estimate = sum / r;
  double ss = 0.0;
  std::size_t covered = 0;
  for (const auto& e : estimates) {
    const double d = e.tau_hat - s.mean_estimate;
    ss += d * d;
    if (e.ci_lo <= true_tau && true_tau <= e.ci_hi) ++covered;
  }
  s.mc_variance = ss / r;
  s.mc_se_of_mean = std::sqrt(s.mc_variance / r);
  s.bias = s.mean_estimate - true_tau;
  s.mse = s.bias * s.bias + s.mc_variance;
  s.coverage_95 = static_cast<double>(covered) / r;
  return s;
}

BonferroniResult bonferroni_ztest(std::span<const double> observed, std::span<const double> predicted,
                                  std::span<const double> mc_ses, double alpha) {
  const std::size_t m = observed.size();
  if (predicted.size() != m || mc_ses.size() != m) throw InvalidArgument("bonferroni_ztest: length mismatch");
  if (m == 0) throw EmptyInput("bonferroni_ztest needs at least one cell");
  BonferroniResult out;
  out.level = alpha / static_cast<double>(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (!(mc_ses[i] > 0.0)) throw InvalidArgument("bonferroni_ztest: MC standard error must be positive");
    const double z = (observed[i] - predicted[i]) / mc_ses[i];
    const double p = two_sided_normal_p(z);
    out.z.push_back(z);
    out.p_value.push_back(p);
    out.cell_reject.push_back(p < out.level);
    out.family_reject = out.family_reject || p < out.level;
  }
  return out;
}

std::string_view to_string(ExperimentId id) {
  switch (id) {
    case ExperimentId::p1: return "p1";
    case ExperimentId::p2: return "p2";
    case ExperimentId::p3: return "p3";
    case ExperimentId::p4: return "p4";
    case ExperimentId::p5: return "p5";
  }
  return "unknown";
}

ExperimentId experiment_from_string(std::string_view s) {
  if (s == "p1") return ExperimentId::p1;
  if (s == "p2") return ExperimentId::p2;
  if (s == "p3") return ExperimentId::p3;
  if (s == "p4") return ExperimentId::p4;
  if (s == "p5") return ExperimentId::p5;
  throw InvalidArgument("unknown experiment '" + std::string(s) + "'");
}

std::string_view to_string(NuisanceMode m) {
  switch (m) {
    case NuisanceMode::standard: return "standard";
    case NuisanceMode::oracle: return "oracle";
    case NuisanceMode::cross_fit: return "cross_fit";
  }
  return "unknown";
}

NuisanceMode nuisance_mode_from_string(std::string_view s) {
  if (s == "standard") return NuisanceMode::standard;
  if (s == "oracle") return NuisanceMode::oracle;
  if (s == "cross_fit") return NuisanceMode::cross_fit;
  throw InvalidArgument("unknown nuisance mode '" + std::string(s) + "'");
}

std::size_t default_replications(ExperimentId id, bool paper_scale) {
  switch (id) {
    case ExperimentId::p1: return paper_scale ? 400 : 200;
    case ExperimentId::p2: return paper_scale ? 1000 : 500;
    case ExperimentId::p3: return paper_scale ? 400 : 200;
    case ExperimentId::p4: return paper_scale ? 300 : 150;
    case ExperimentId::p5: return paper_scale ? 250 : 100;
  }
  return 0;
}

namespace {

std::size_t reps_for(ExperimentId id, const ExperimentConfig& cfg) {
  return cfg.replications.value_or(default_replications(id, cfg.paper_scale));
}

std::uint64_t cell_id(ExperimentId id, std::size_t cell) {
  return (static_cast<std::uint64_t>(id) + 1) * 1000 + cell;
}

bool use_oracle(const ExperimentConfig& cfg, bool oracle_by_default) {
  if (cfg.nuisance == NuisanceMode::standard) return oracle_by_default;
  return cfg.nuisance == NuisanceMode::oracle;
}

EstimatorOptions options_for(const ExperimentConfig& cfg) {
  EstimatorOptions o;
  o.learner = cfg.learner;
  return o;
}

Nuisances nuisances_for(const SimulatedSample& s, const UnlabelledSet& u, const FoldAssignment& folds,
                        const ExperimentConfig& cfg, double tau, bool oracle_by_default) {
  if (use_oracle(cfg, oracle_by_default)) {
    return Nuisances{NuisanceFit{s.r, folds, "oracle"}, NuisanceFit{s.oracle_m(tau), folds, "oracle"}};
  }
  return fit_nuisances(u, folds, options_for(cfg));
}

FoldAssignment folds_for(std::size_t n, const ExperimentConfig& cfg, Engine& engine) {
  return make_folds(n, cfg.folds_k, engine());
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nan("");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

P1Result run_p1(const ExperimentConfig& cfg, std::uint64_t master_seed) {
  const std::vector<double> thresholds{0.5, 0.6, 0.7, 0.8, 0.9, 0.95};
  const std::size_t reps = reps_for(ExperimentId::p1, cfg);
  DgpParams params;
  params.n = cfg.n_u.value_or(3000);
  const std::size_t m = thresholds.size();

  struct Rep {
    std::optional<TauEstimate> soft;
    std::vector<std::optional<TauEstimate>> hard;
  };
  std::vector<Rep> out(reps);
  parallel_for(reps, cfg.threads, [&](std::size_t rep) {
    Engine engine(stream_seed(master_seed, cell_id(ExperimentId::p1, 0), rep));
    const SimulatedSample s = sample_dgp(params, DriftSpec{}, engine);
    const UnlabelledSet u = s.unlabelled();
    const FoldAssignment folds = folds_for(params.n, cfg, engine);
    Rep r;
    r.hard.resize(m);
    try {
      const Nuisances nu = nuisances_for(s, u, folds, cfg, params.tau, true);
      try {
        r.soft = soft_estimator(u, nu).tau;
      } catch (const Error&) {
      }
      const EstimatorOptions opts = options_for(cfg);
      for (std::size_t i = 0; i < m; ++i) {
        try {
          r.hard[i] = hard_estimator(u, thresholds[i], folds, nu.m_hat.oof_predictions, opts);
        } catch (const Error&) {
        }
      }
    } catch (const Error&) {
    }
    out[rep] = std::move(r);
  });

  P1Result result;
  const std::vector<double> kappas =
      population_kappas(params, thresholds, cfg.n_oracle, splitmix64(master_seed ^ 0x5eedULL), true);
  std::vector<TauEstimate> soft;
  for (const auto& r : out) {
    if (r.soft) soft.push_back(*r.soft);
  }
  if (!soft.empty()) result.soft = mc_aggregate(soft, params.tau);

  std::vector<double> observed, predicted, ses;
  for (std::size_t i = 0; i < m; ++i) {
    std::vector<TauEstimate> hard;
    for (const auto& r : out) {
      if (r.hard[i]) hard.push_back(*r.hard[i]);
    }
    P1Row row;
    row.threshold = thresholds[i];
    row.kappa_pred = kappas[i] * params.tau;
    row.soft_mean = result.soft.mean_estimate;
    row.replications = hard.size();
    row.failures = reps - hard.size();
    if (!hard.empty()) {
      const McSummary h = mc_aggregate(hard, row.kappa_pred);
      row.hard_mean = h.mean_estimate;
      row.mc_se = h.mc_se_of_mean;
    }
    result.rows.push_back(row);
    observed.push_back(row.hard_mean);
    predicted.push_back(row.kappa_pred);
    ses.push_back(row.mc_se);
  }
  if (std::all_of(ses.begin(), ses.end(), [](double v) { return v > 0.0; })) {
    const BonferroniResult b = bonferroni_ztest(observed, predicted, ses, 0.05);
    for (std::size_t i = 0; i < m; ++i) {
      result.rows[i].z = b.z[i];
      result.rows[i].p_value = b.p_value[i];
    }
    result.bonferroni_level = b.level;
    result.family_reject = b.family_reject;
  }
  return result;
}

std::vector<P2Row> run_p2(const ExperimentConfig& cfg, std::uint64_t master_seed,
                          const std::vector<double>& sigmas) {
  const std::size_t reps = reps_for(ExperimentId::p2, cfg);
  const std::size_t n_l = 500;
  std::vector<P2Row> rows;
  for (std::size_t c = 0; c < sigmas.size(); ++c) {
    DgpParams params;
    params.sigma_u = sigmas[c];
    params.n = cfg.n_u.value_or(2000);
    DgpParams lab = params;
    lab.n = n_l;

    struct Rep {
      std::optional<TauEstimate> soft;
      std::optional<TauEstimate> supervised;
      double v_star = 0.0;
    };
    std::vector<Rep> out(reps);
    parallel_for(reps, cfg.threads, [&](std::size_t rep) {
      Engine engine(stream_seed(master_seed, cell_id(ExperimentId::p2, c), rep));
      const SimulatedSample s = sample_dgp(params, DriftSpec{}, engine);
      const SimulatedSample l = sample_dgp(lab, DriftSpec{}, engine);
      const UnlabelledSet u = s.unlabelled();
      const FoldAssignment folds = folds_for(params.n, cfg, engine);
      Rep r;
      r.v_star = residual_variance(s.p, s.r);
      try {
        r.soft = soft_estimator(u, nuisances_for(s, u, folds, cfg, params.tau, true)).tau;
      } catch (const Error&) {
      }
      try {
        r.supervised = supervised_baseline(l.labelled());
      } catch (const Error&) {
      }
      out[rep] = r;
    });

    std::vector<TauEstimate> soft, sup;
    std::vector<double> vstar, se2;
    for (const auto& r : out) {
      vstar.push_back(r.v_star);
      if (r.soft) {
        soft.push_back(*r.soft);
        se2.push_back(r.soft->se * r.soft->se);
      }
      if (r.supervised) sup.push_back(*r.supervised);
    }
    P2Row row;
    row.sigma_u = sigmas[c];
    row.v_star = mean_of(vstar);
    row.failures = reps - soft.size();
    if (!soft.empty()) {
      row.soft = mc_aggregate(soft, params.tau);
      row.sandwich_var = mean_of(se2);
      row.mc_var = row.soft.mc_variance;
      row.coverage_95 = row.soft.coverage_95;
    }
    if (!sup.empty()) {
      row.supervised = mc_aggregate(sup, params.tau);
      row.mse_ratio = row.soft.mse / row.supervised.mse;
    }
    rows.push_back(row);
  }
  return rows;
}

P3Result run_p3(const ExperimentConfig& cfg, std::uint64_t master_seed) {
  const std::vector<double> thresholds{0.55, 0.65, 0.75, 0.85, 0.90, 0.95};
  const std::size_t reps = reps_for(ExperimentId::p3, cfg);
  DgpParams params;
  params.n = cfg.n_u.value_or(3000);
  const std::size_t m = thresholds.size();

  struct Rep {
    std::optional<TauEstimate> soft;
    std::vector<std::optional<ConfidentSubsetResult>> conf;
    std::vector<std::size_t> sizes;
  };
  std::vector<Rep> out(reps);
  parallel_for(reps, cfg.threads, [&](std::size_t rep) {
    Engine engine(stream_seed(master_seed, cell_id(ExperimentId::p3, 0), rep));
    const SimulatedSample s = sample_dgp(params, DriftSpec{}, engine);
    const UnlabelledSet u = s.unlabelled();
    const FoldAssignment folds = folds_for(params.n, cfg, engine);
    Rep r;
    r.conf.resize(m);
    r.sizes.resize(m, 0);
    for (std::size_t i = 0; i < m; ++i) {
      for (Index j = 0; j < s.p.size(); ++j) {
        if (std::max(s.p[j], 1.0 - s.p[j]) > thresholds[i]) ++r.sizes[i];
      }
    }
    try {
      const Nuisances nu = nuisances_for(s, u, folds, cfg, params.tau, true);
      try {
        r.soft = soft_estimator(u, nu).tau;
      } catch (const Error&) {
      }
      const EstimatorOptions opts = options_for(cfg);
      for (std::size_t i = 0; i < m; ++i) {
        try {
          r.conf[i] = confident_subset_estimator(u, thresholds[i], folds, nu, opts);
        } catch (const Error&) {
        }
      }
    } catch (const Error&) {
    }
    out[rep] = std::move(r);
  });

  P3Result result;
  std::vector<TauEstimate> soft;
  for (const auto& r : out) {
    if (r.soft) soft.push_back(*r.soft);
  }
  if (!soft.empty()) result.soft = mc_aggregate(soft, params.tau);
  for (std::size_t i = 0; i < m; ++i) {
    std::vector<TauEstimate> est;
    std::vector<double> kfm, sizes;
    for (const auto& r : out) {
      sizes.push_back(static_cast<double>(r.sizes[i]));
      if (r.conf[i]) {
        est.push_back(r.conf[i]->tau);
        kfm.push_back(r.conf[i]->kappa_fm);
      }
    }
    P3Row row;
    row.threshold = thresholds[i];
    row.mean_subset_size = mean_of(sizes);
    row.kappa_fm = mean_of(kfm);
    row.replications = est.size();
    row.failures = reps - est.size();
    if (!est.empty()) {
      const McSummary sm = mc_aggregate(est, params.tau);
      row.bias2 = sm.bias * sm.bias;
      row.variance = sm.mc_variance;
      row.mse = sm.mse;
      row.mse_ratio = sm.mse / result.soft.mse;
    }
    result.rows.push_back(row);
  }
  return result;
}

std::vector<P4Row> run_p4(const ExperimentConfig& cfg, std::uint64_t master_seed) {
  const std::vector<DriftSpec> cells{
      {DriftShape::worst_case, 0.05}, {DriftShape::worst_case, 0.10}, {DriftShape::worst_case, 0.15},
      {DriftShape::worst_case, 0.20}, {DriftShape::linear, 0.05},     {DriftShape::linear, 0.20},
      {DriftShape::symmetric, 0.05},  {DriftShape::symmetric, 0.20}};
  const std::size_t reps = reps_for(ExperimentId::p4, cfg);
  DgpParams params;
  params.n = cfg.n_u.value_or(3000);

  std::vector<P4Row> rows;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    struct Rep {
      std::optional<TauEstimate> soft;
      double bound = 0.0;
    };
    std::vector<Rep> out(reps);
    parallel_for(reps, cfg.threads, [&](std::size_t rep) {
      Engine engine(stream_seed(master_seed, cell_id(ExperimentId::p4, c), rep));
      const SimulatedSample s = sample_dgp(params, cells[c], engine);
      const UnlabelledSet u = s.unlabelled();
      const FoldAssignment folds = folds_for(params.n, cfg, engine);
      Rep r;
      const double v_star = residual_variance(s.p, s.r);
      const double abs_score = (2.0 * s.p.array() - 1.0).abs().mean();
      r.bound = std::abs(params.tau) * cells[c].delta * abs_score / (2.0 * v_star);
      try {
        r.soft = soft_estimator(u, nuisances_for(s, u, folds, cfg, params.tau, false)).tau;
      } catch (const Error&) {
      }
      out[rep] = r;
    });
    std::vector<TauEstimate> soft;
    std::vector<double> bounds;
    for (const auto& r : out) {
      bounds.push_back(r.bound);
      if (r.soft) soft.push_back(*r.soft);
    }
    P4Row row;
    row.shape = cells[c].shape;
    row.delta = cells[c].delta;
    row.bound = mean_of(bounds);
    row.replications = soft.size();
    row.failures = reps - soft.size();
    if (!soft.empty()) {
      const McSummary sm = mc_aggregate(soft, params.tau);
      row.emp_bias = sm.bias;
      row.mc_se = sm.mc_se_of_mean;
      row.ratio = std::abs(sm.bias) / row.bound;
    }
    rows.push_back(row);
  }
  return rows;
}

Vector fit_and_score_classifier(const Matrix& x_labelled, const Vector& g_labelled, const Matrix& x_score) {
  const Index n = x_labelled.rows();
  if (n < 4) throw InvalidArgument("classifier needs at least four labelled rows");
  const Index h = n / 2;
  const Matrix train = expand_poly2(x_labelled.topRows(h));
  const LogisticModel clf = fit_logistic(train, g_labelled.head(h), 100, 1e-8, Basis::poly2);
  const Vector cal_scores = clf.predict(expand_poly2(x_labelled.bottomRows(n - h)));
  const IsotonicModel iso = fit_isotonic(cal_scores, g_labelled.tail(n - h));
  const Vector p = apply_isotonic(iso, clf.predict(expand_poly2(x_score)));
  return p.unaryExpr([](double v) { return clip_probability(v); });
}

std::vector<P5Row> run_p5(const ExperimentConfig& cfg, std::uint64_t master_seed, double sigma_pp) {
  if (!(sigma_pp > 0.0 && sigma_pp < 1.0)) throw InvalidArgument("sigma_pp must lie in (0, 1)");
  const std::vector<std::size_t> n_ls{200, 500, 1000, 2000};
  const std::size_t reps = reps_for(ExperimentId::p5, cfg);
  const double k_pp = (1.0 - sigma_pp * sigma_pp) / (sigma_pp * sigma_pp);
  DgpParams params;
  params.n = cfg.n_u.value_or(3000);

  std::vector<P5Row> rows;
  for (std::size_t c = 0; c < n_ls.size(); ++c) {
    DgpParams lab = params;
    lab.n = n_ls[c];
    struct Rep {
      std::optional<double> det;
      std::optional<double> pp;
    };
    std::vector<Rep> out(reps);
    parallel_for(reps, cfg.threads, [&](std::size_t rep) {
      Engine engine(stream_seed(master_seed, cell_id(ExperimentId::p5, c), rep));
      const SimulatedSample l = sample_dgp(lab, DriftSpec{}, engine);
      const SimulatedSample s = sample_dgp(params, DriftSpec{}, engine);
      const FoldAssignment folds = folds_for(params.n, cfg, engine);
      Rep r;
      try {
        const Vector p_det = fit_and_score_classifier(l.x, l.g, s.x);
        Vector p_pp(p_det.size());
        for (Index i = 0; i < p_det.size(); ++i) {
          p_pp[i] = sample_beta(engine, p_det[i] * k_pp, (1.0 - p_det[i]) * k_pp);
        }
        const Vector r_det = cross_fit_predict(s.x, p_det, folds, cfg.learner).oof_predictions;
        r.det = residual_variance(p_det, r_det);
        const Vector r_pp = cross_fit_predict(s.x, p_pp, folds, cfg.learner).oof_predictions;
        r.pp = residual_variance(p_pp, r_pp);
      } catch (const Error&) {
      }
      out[rep] = r;
    });
    std::vector<double> det, pp;
    for (const auto& r : out) {
      if (r.det && r.pp) {
        det.push_back(*r.det);
        pp.push_back(*r.pp);
      }
    }
    P5Row row;
    row.n_l = n_ls[c];
    row.v_star_deterministic = mean_of(det);
    row.v_star_posterior_predictive = mean_of(pp);
    row.replications = det.size();
    row.failures = reps - det.size();
    rows.push_back(row);
  }
  return rows;
}

namespace {

Cell num(double v) { return Cell{v}; }
Cell count(std::size_t v) { return Cell{static_cast<double>(v)}; }

void add_failure_note(Table& t, const std::string& cell, std::size_t failures) {
  if (failures > 0) {
    t.notes.push_back(cell + ": " + std::to_string(failures) + " replication(s) failed and were excluded");
  }
}

std::string fmt_cell(double v) {
  std::string s = std::to_string(v);
  s.erase(s.find_last_not_of('0') + 1);
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

}  // namespace

Table to_table(const P1Result& r) {
  Table t;
  t.columns = {"tau_thr", "kappa", "mean_tau_soft", "mean_tau_hard", "mc_se", "z", "p_value", "replications"};
  for (const auto& row : r.rows) {
    t.rows.push_back({num(row.threshold), num(row.kappa_pred), num(row.soft_mean), num(row.hard_mean),
                      num(row.mc_se), num(row.z), num(row.p_value), count(row.replications)});
    add_failure_note(t, "tau_thr=" + fmt_cell(row.threshold), row.failures);
  }
  t.notes.push_back("bonferroni level " + fmt_cell(r.bonferroni_level) +
                    (r.family_reject ? ": family test rejects" : ": family test does not reject"));
  return t;
}

Table to_table(const std::vector<P2Row>& rows) {
  Table t;
  t.columns = {"sigma_u", "v_star", "sandwich_var", "mc_var", "coverage_95", "mse_ratio"};
  for (const auto& row : rows) {
    t.rows.push_back({num(row.sigma_u), num(row.v_star), num(row.sandwich_var), num(row.mc_var),
                      num(row.coverage_95), num(row.mse_ratio)});
    add_failure_note(t, "sigma_u=" + fmt_cell(row.sigma_u), row.failures);
  }
  return t;
}

Table to_table(const P3Result& r) {
  Table t;
  t.columns = {"tau_thr", "kappa_fm", "subset_size", "bias2", "variance", "mse", "mse_ratio"};
  for (const auto& row : r.rows) {
    t.rows.push_back({num(row.threshold), num(row.kappa_fm), num(row.mean_subset_size), num(row.bias2),
                      num(row.variance), num(row.mse), num(row.mse_ratio)});
    add_failure_note(t, "tau_thr=" + fmt_cell(row.threshold), row.failures);
  }
  t.notes.push_back("soft baseline mse " + fmt_cell(r.soft.mse));
  return t;
}

Table to_table(const std::vector<P4Row>& rows) {
  Table t;
  t.columns = {"shape", "delta", "emp_bias", "bound", "ratio"};
  for (const auto& row : rows) {
    t.rows.push_back({Cell{std::string(to_string(row.shape))}, num(row.delta), num(row.emp_bias),
                      num(row.bound), num(row.ratio)});
    add_failure_note(t, std::string(to_string(row.shape)) + " delta=" + fmt_cell(row.delta), row.failures);
  }
  return t;
}

Table to_table(const std::vector<P5Row>& rows) {
  Table t;
  t.columns = {"n_l", "v_star_deterministic", "v_star_posterior_predictive"};
  for (const auto& row : rows) {
    t.rows.push_back({count(row.n_l), num(row.v_star_deterministic), num(row.v_star_posterior_predictive)});
    add_failure_note(t, "n_l=" + std::to_string(row.n_l), row.failures);
  }
  return t;
}

Table run_experiment(ExperimentId id, const ExperimentConfig& cfg, std::uint64_t master_seed) {
  switch (id) {
    case ExperimentId::p1: return to_table(run_p1(cfg, master_seed));
    case ExperimentId::p2: return to_table(run_p2(cfg, master_seed));
    case ExperimentId::p3: return to_table(run_p3(cfg, master_seed));
    case ExperimentId::p4: return to_table(run_p4(cfg, master_seed));
    case ExperimentId::p5: return to_table(run_p5(cfg, master_seed));
  }
  throw InvalidArgument("unknown experiment");
}

}  // namespace calibdiag
