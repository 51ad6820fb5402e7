#include "calibdiag/adult.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "calibdiag/calibration.hpp"
#include "calibdiag/errors.hpp"
#include "calibdiag/estimators.hpp"
#include "calibdiag/rng.hpp"
#include "calibdiag/table_io.hpp"

namespace calibdiag {

const std::vector<std::string>& adult_columns() {
  static const std::vector<std::string> cols{
      "age",          "workclass",    "fnlwgt",       "education",      "education-num",
      "marital-status", "occupation", "relationship", "race",           "sex",
      "capital-gain", "capital-loss", "hours-per-week", "native-country", "income"};
  return cols;
}

namespace {

const std::vector<std::string> kContinuous{"age", "hours-per-week", "capital-gain", "capital-loss"};
const std::vector<std::string> kCategorical{"occupation",   "marital-status", "workclass",
                                            "relationship", "race",           "native-country"};

bool looks_numeric(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

}  // namespace

AdultData adult_from_text(const std::string& text) {
  // The UCI file has no header; a first field that is a number means data.
  RawTable raw = parse_csv(text, false);
  if (raw.rows.empty()) throw EmptyInput("Adult file has no rows");
  if (!looks_numeric(raw.rows.front().front())) {
    raw.header = raw.rows.front();
    raw.rows.erase(raw.rows.begin());
    raw.line_numbers.erase(raw.line_numbers.begin());
  } else {
    raw.header = adult_columns();
  }
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < raw.header.size(); ++i) index.emplace(raw.header[i], i);
  auto col = [&](const std::string& name) {
    const auto it = index.find(name);
    if (it == index.end()) throw SchemaError(name, "column not found in Adult file");
    return it->second;
  };
  for (const auto& name : adult_columns()) col(name);

  AdultData out;
  std::vector<std::size_t> keep;
  for (std::size_t r = 0; r < raw.rows.size(); ++r) {
    const auto& row = raw.rows[r];
    // Comment lines such as the "|1x3 Cross validator" header of adult.test.
    if (row.size() == 1 && row[0].rfind("|", 0) == 0) continue;
    const bool complete = row.size() >= adult_columns().size() &&
                          std::none_of(row.begin(), row.end(), [](const std::string& c) { return is_missing(c); });
    if (complete) {
      keep.push_back(r);
    } else {
      ++out.dropped_rows;
    }
  }
  if (keep.empty()) throw EmptyInput("no complete Adult rows");
  const auto n = static_cast<Index>(keep.size());
  auto cell = [&](Index i, const std::string& name) -> const std::string& {
    return raw.rows[keep[static_cast<std::size_t>(i)]][col(name)];
  };
  auto number = [&](Index i, const std::string& name) {
    const std::string& s = cell(i, name);
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ValidationError(raw.line_numbers[keep[static_cast<std::size_t>(i)]],
                            "column '" + name + "': '" + s + "' is not a number");
    }
  };

  Matrix cont(n, static_cast<Index>(kContinuous.size()));
  for (std::size_t j = 0; j < kContinuous.size(); ++j) {
    for (Index i = 0; i < n; ++i) cont(i, static_cast<Index>(j)) = number(i, kContinuous[j]);
    auto c = cont.col(static_cast<Index>(j));
    const double mu = c.mean();
    const double sd = std::sqrt((c.array() - mu).square().mean());
    c.array() -= mu;
    if (sd > 0.0) c /= sd;
  }
  const Matrix cont2 = expand_poly2(cont);

  std::vector<Vector> extra;
  std::vector<std::string> extra_names;
  Vector sex(n);
  for (Index i = 0; i < n; ++i) sex[i] = cell(i, "sex") == "Male" ? 1.0 : 0.0;
  extra.push_back(sex);
  extra_names.push_back("sex=Male");
  for (const auto& name : kCategorical) {
    std::vector<std::string> vals;
    for (Index i = 0; i < n; ++i) vals.push_back(cell(i, name));
    const auto levels = category_levels(vals);
    for (std::size_t l = 1; l < levels.size(); ++l) {
      Vector v(n);
      for (Index i = 0; i < n; ++i) v[i] = vals[static_cast<std::size_t>(i)] == levels[l] ? 1.0 : 0.0;
      extra.push_back(std::move(v));
      extra_names.push_back(name + "=" + levels[l]);
    }
  }

  out.w.resize(n, cont2.cols() + static_cast<Index>(extra.size()));
  out.w.leftCols(cont2.cols()) = cont2;
  for (std::size_t j = 0; j < extra.size(); ++j) out.w.col(cont2.cols() + static_cast<Index>(j)) = extra[j];
  const std::size_t d = kContinuous.size();
  for (std::size_t j = 0; j < d; ++j) out.w_names.push_back(kContinuous[j]);
  for (std::size_t j = 0; j < d; ++j) out.w_names.push_back(kContinuous[j] + "^2");
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = a + 1; b < d; ++b) out.w_names.push_back(kContinuous[a] + "*" + kContinuous[b]);
  }
  out.w_names.insert(out.w_names.end(), extra_names.begin(), extra_names.end());
  out.x_cols = {0, 1, cont2.cols()};

  out.g.resize(n);
  out.y.resize(n);
  for (Index i = 0; i < n; ++i) {
    std::string inc = cell(i, "income");
    if (!inc.empty() && inc.back() == '.') inc.pop_back();
    out.g[i] = inc == ">50K" ? 1.0 : 0.0;
    out.y[i] = number(i, "education-num");
  }
  return out;
}

AdultData load_adult(const std::string& path) { return adult_from_text(read_text_file(path)); }

Decision AdultRow::modal_decision() const {
  const std::size_t counts[] = {prefer_supervised, prefer_soft, either_acceptable, collapse};
  const auto it = std::max_element(std::begin(counts), std::end(counts));
  return static_cast<Decision>(it - std::begin(counts));
}

namespace {

struct SplitOutcome {
  bool ok = false;
  double v_star = 0.0;
  double tau_sup = 0.0;
  double tau_soft = 0.0;
  double tau_hard = 0.0;
  Decision decision = Decision::either_acceptable;
};

SplitOutcome run_split(const AdultData& data, std::size_t n_l, const AdultConfig& cfg, std::uint64_t seed) {
  const std::size_t n = data.size();
  std::vector<Index> perm(n);
  std::iota(perm.begin(), perm.end(), Index{0});
  Engine engine(seed);
  std::shuffle(perm.begin(), perm.end(), engine);
  const std::vector<Index> l_rows(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_l));
  const std::vector<Index> u_rows(perm.begin() + static_cast<std::ptrdiff_t>(n_l), perm.end());
  const std::size_t half = n_l / 2;
  const std::vector<Index> fit_rows(l_rows.begin(), l_rows.begin() + static_cast<std::ptrdiff_t>(half));
  const std::vector<Index> cal_rows(l_rows.begin() + static_cast<std::ptrdiff_t>(half), l_rows.end());

  const LogisticModel clf = fit_logistic(take_rows(data.w, fit_rows), take_rows(data.g, fit_rows));
  const IsotonicModel iso = fit_isotonic(clf.predict(take_rows(data.w, cal_rows)), take_rows(data.g, cal_rows));
  auto score = [&](const std::vector<Index>& rows) {
    return apply_isotonic(iso, clf.predict(take_rows(data.w, rows))).unaryExpr([](double v) {
      return clip_probability(v);
    });
  };

  const Matrix x_u = take_rows(extract_controls(data.w, data.x_cols), u_rows);
  const Matrix x_l = take_rows(extract_controls(data.w, data.x_cols), l_rows);
  const std::vector<Index> x_cols{0, 1, 2};
  const UnlabelledSet u(x_u, x_cols, score(u_rows), take_rows(data.y, u_rows));
  const LabelledSet l(x_l, x_cols, take_rows(data.g, l_rows), take_rows(data.y, l_rows), score(l_rows));

  SplitOutcome out;
  DiagnosticConfig dcfg;
  dcfg.folds_k = cfg.folds_k;
  dcfg.seed = splitmix64(seed);
  const DiagnosticReport report = run_diagnostic(u, l, dcfg);
  out.decision = report.decision;
  out.v_star = report.v_star_hat;

  const FoldAssignment folds = make_folds(u_rows.size(), cfg.folds_k, dcfg.seed);
  const Nuisances nu = fit_nuisances(u, folds);
  out.tau_sup = supervised_baseline(l).tau_hat;
  out.tau_soft = soft_estimator(u, nu).tau.tau_hat;
  out.tau_hard = hard_estimator(u, cfg.threshold, folds, nu.m_hat.oof_predictions).tau_hat;
  out.ok = true;
  return out;
}

}  // namespace

AdultResult run_adult(const AdultData& data, const AdultConfig& cfg) {
  AdultResult result;
  result.rows = data.size();
  result.dropped_rows = data.dropped_rows;
  const LabelledSet full(data.w, data.x_cols, data.g, data.y);
  result.tau_full = supervised_baseline(full).tau_hat;

  for (std::size_t c = 0; c < cfg.n_l.size(); ++c) {
    const std::size_t n_l = cfg.n_l[c];
    if (n_l < 8 || n_l + 2 * cfg.folds_k >= data.size()) {
      throw InvalidArgument("n_l must be at least 8 and leave enough unlabelled rows");
    }
    std::vector<SplitOutcome> out(cfg.splits);
    parallel_for(cfg.splits, cfg.threads, [&](std::size_t s) {
      try {
        out[s] = run_split(data, n_l, cfg, stream_seed(cfg.seed, n_l, s));
      } catch (const Error&) {
        out[s] = SplitOutcome{};
      }
    });
    AdultRow row;
    row.n_l = n_l;
    row.v_star_min = std::numeric_limits<double>::infinity();
    std::size_t ok = 0;
    for (const auto& o : out) {
      if (!o.ok) {
        ++row.failures;
        continue;
      }
      ++ok;
      row.v_star += o.v_star;
      row.v_star_min = std::min(row.v_star_min, o.v_star);
      row.mse_supervised += std::pow(o.tau_sup - result.tau_full, 2);
      row.bias_soft += o.tau_soft - result.tau_full;
      row.mse_soft += std::pow(o.tau_soft - result.tau_full, 2);
      row.bias_hard += o.tau_hard - result.tau_full;
      row.mse_hard += std::pow(o.tau_hard - result.tau_full, 2);
      switch (o.decision) {
        case Decision::prefer_supervised: ++row.prefer_supervised; break;
        case Decision::prefer_soft: ++row.prefer_soft; break;
        case Decision::either_acceptable: ++row.either_acceptable; break;
        case Decision::collapse: ++row.collapse; break;
      }
    }
    if (ok > 0) {
      const double k = static_cast<double>(ok);
      row.v_star /= k;
      row.mse_supervised /= k;
      row.bias_soft /= k;
      row.mse_soft /= k;
      row.bias_hard /= k;
      row.mse_hard /= k;
    }
    result.table.push_back(row);
  }
  return result;
}

AdultResult run_adult(const AdultConfig& cfg) { return run_adult(load_adult(cfg.csv_path), cfg); }

Table to_table(const AdultResult& r) {
  Table t;
  t.columns = {"n_l", "v_star", "mse_supervised", "bias_soft", "mse_soft", "bias_hard", "mse_hard", "decision"};
  for (const auto& row : r.table) {
    t.rows.push_back({Cell{static_cast<double>(row.n_l)}, Cell{row.v_star}, Cell{row.mse_supervised},
                      Cell{row.bias_soft}, Cell{row.mse_soft}, Cell{row.bias_hard}, Cell{row.mse_hard},
                      Cell{std::string(to_string(row.modal_decision()))}});
    if (row.failures > 0) {
      t.notes.push_back("n_l=" + std::to_string(row.n_l) + ": " + std::to_string(row.failures) +
                        " split(s) failed and were excluded");
    }
  }
  t.notes.push_back("rows " + std::to_string(r.rows) + ", dropped " + std::to_string(r.dropped_rows) +
                    ", full-sample target " + std::to_string(r.tau_full));
  return t;
}

}  // namespace calibdiag
