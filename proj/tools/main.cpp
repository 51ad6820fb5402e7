// calibdiag command-line tool: diagnose, estimate, simulate, adult.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "calibdiag/adult.hpp"
#include "calibdiag/diagnostic.hpp"
#include "calibdiag/errors.hpp"
#include "calibdiag/estimators.hpp"
#include "calibdiag/experiments.hpp"
#include "calibdiag/report_io.hpp"
#include "calibdiag/table_io.hpp"

namespace cd = calibdiag;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitCollapse = 3;
constexpr int kExitIo = 4;

std::vector<double> parse_doubles(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw cd::InvalidArgument("'" + item + "' is not a number");
    }
  }
  return out;
}

std::vector<std::size_t> parse_counts(const std::string& csv) {
  std::vector<std::size_t> out;
  for (double v : parse_doubles(csv)) {
    if (!(v >= 1.0) || v != static_cast<double>(static_cast<std::size_t>(v))) {
      throw cd::InvalidArgument("expected positive integers, got " + csv);
    }
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

void write_or_print(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    cd::write_text_file(path, text);
  }
}

struct DiagnoseArgs {
  std::string data, schema, labelled, labelled_schema, thresholds = "0.5,0.6,0.7,0.8,0.9,0.95", out, format = "json";
  std::string basis = "poly2";
  std::size_t folds = 5;
  std::uint64_t seed = 0;
  double kappa_tolerance = 0.10;
};

int run_diagnose(const DiagnoseArgs& a) {
  const cd::TableSchema schema = cd::load_schema(a.schema);
  const cd::LoadedTable u = cd::load_table(a.data, schema, cd::TableMode::unlabelled);
  if (u.dropped_rows) std::cerr << "dropped " << u.dropped_rows << " row(s) with missing values\n";
  std::optional<cd::LabelledSet> l;
  if (!a.labelled.empty()) {
    const cd::TableSchema ls = a.labelled_schema.empty() ? schema : cd::load_schema(a.labelled_schema);
    l = cd::load_table(a.labelled, ls, cd::TableMode::labelled).labelled();
  }
  cd::DiagnosticConfig cfg;
  cfg.thresholds = parse_doubles(a.thresholds);
  cfg.folds_k = a.folds;
  cfg.seed = a.seed;
  cfg.kappa_tolerance = a.kappa_tolerance;
  cfg.learner = cd::LearnerConfig::ridge_gcv(cd::basis_from_string(a.basis));
  const cd::DiagnosticReport report = cd::run_diagnostic(u.unlabelled(), l, cfg);
  const auto format = cd::output_format_from_string(a.format);
  if (a.out.empty() || a.out == "-") {
    std::cout << cd::format_report(report, format);
  } else {
    cd::emit_report(report, format, a.out);
  }
  std::cerr << "decision: " << cd::to_string(report.decision) << "\n";
  return report.decision == cd::Decision::collapse ? kExitCollapse : kExitOk;
}

struct EstimateArgs {
  std::string data, schema, method = "soft", out, basis = "poly2";
  double threshold = 0.5;
  std::size_t folds = 5;
  std::uint64_t seed = 0;
};

int run_estimate(const EstimateArgs& a) {
  const cd::TableSchema schema = cd::load_schema(a.schema);
  const cd::Method method = cd::method_from_string(a.method);
  cd::TauEstimate est;
  if (method == cd::Method::supervised) {
    est = cd::supervised_baseline(cd::load_table(a.data, schema, cd::TableMode::labelled).labelled());
  } else {
    const cd::UnlabelledSet u = cd::load_table(a.data, schema, cd::TableMode::unlabelled).unlabelled();
    const cd::FoldAssignment folds = cd::make_folds(static_cast<std::size_t>(u.size()), a.folds, a.seed);
    cd::EstimatorOptions opts;
    opts.learner = cd::LearnerConfig::ridge_gcv(cd::basis_from_string(a.basis));
    switch (method) {
      case cd::Method::soft: est = cd::soft_estimator(u, folds, opts).tau; break;
      case cd::Method::hard: est = cd::hard_estimator(u, a.threshold, folds, opts); break;
      case cd::Method::confident: est = cd::confident_subset_estimator(u, a.threshold, folds, opts).tau; break;
      case cd::Method::supervised: break;
    }
  }
  write_or_print(a.out, cd::estimate_to_json(est));
  return kExitOk;
}

struct SimulateArgs {
  std::string experiment, out, format = "csv", nuisance = "standard";
  bool paper_scale = false;
  std::optional<std::size_t> replications;
  std::size_t threads = 0;
  std::uint64_t seed = 20240501;
};

int run_simulate(const SimulateArgs& a) {
  cd::ExperimentConfig cfg;
  cfg.paper_scale = a.paper_scale;
  cfg.replications = a.replications;
  cfg.threads = a.threads;
  cfg.nuisance = cd::nuisance_mode_from_string(a.nuisance);
  const cd::Table table = cd::run_experiment(cd::experiment_from_string(a.experiment), cfg, a.seed);
  const auto format = cd::output_format_from_string(a.format);
  if (a.out.empty() || a.out == "-") {
    std::cout << (format == cd::OutputFormat::json ? cd::table_to_json(table) : cd::table_to_csv(table));
  } else {
    cd::emit_table(table, format, a.out);
  }
  for (const auto& note : table.notes) std::cerr << note << "\n";
  return kExitOk;
}

struct AdultArgs {
  std::string csv, nl = "500,1000,2000", out, format = "csv";
  std::size_t splits = 30;
  std::size_t threads = 0;
  std::uint64_t seed = 0;
  double threshold = 0.5;
};

int run_adult_cmd(const AdultArgs& a) {
  cd::AdultConfig cfg;
  cfg.csv_path = a.csv;
  cfg.n_l = parse_counts(a.nl);
  cfg.splits = a.splits;
  cfg.seed = a.seed;
  cfg.threshold = a.threshold;
  cfg.threads = a.threads;
  const cd::AdultResult r = cd::run_adult(cfg);
  const cd::Table table = cd::to_table(r);
  const auto format = cd::output_format_from_string(a.format);
  if (a.out.empty() || a.out == "-") {
    std::cout << (format == cd::OutputFormat::json ? cd::table_to_json(table) : cd::table_to_csv(table));
  } else {
    cd::emit_table(table, format, a.out);
  }
  for (const auto& note : table.notes) std::cerr << note << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Diagnostics and estimators for regressions on calibrated classifier scores"};
  app.set_version_flag("--version", cd::library_version());
  app.require_subcommand(1);

  DiagnoseArgs da;
  auto* diagnose = app.add_subcommand("diagnose", "Run the estimator-choice diagnostic on unlabelled data");
  diagnose->add_option("--data", da.data, "Unlabelled CSV (needs the p column)")->required();
  diagnose->add_option("--schema", da.schema, "JSON schema for the CSV")->required();
  diagnose->add_option("--labelled", da.labelled, "Labelled CSV (needs the g column)");
  diagnose->add_option("--labelled-schema", da.labelled_schema, "Schema for the labelled CSV (default: --schema)");
  diagnose->add_option("--thresholds", da.thresholds, "Comma-separated threshold grid");
  diagnose->add_option("--folds", da.folds, "Cross-fitting folds");
  diagnose->add_option("--seed", da.seed, "Fold seed");
  diagnose->add_option("--kappa-tolerance", da.kappa_tolerance, "Tolerance for |kappa - 1|");
  diagnose->add_option("--basis", da.basis, "Nuisance basis: linear or poly2");
  diagnose->add_option("--out", da.out, "Report path (stdout when omitted)");
  diagnose->add_option("--format", da.format, "json or csv");

  EstimateArgs ea;
  auto* estimate = app.add_subcommand("estimate", "Compute one estimator");
  estimate->add_option("--data", ea.data, "Input CSV")->required();
  estimate->add_option("--schema", ea.schema, "JSON schema for the CSV")->required();
  estimate->add_option("--method", ea.method, "soft, hard, supervised or confident");
  estimate->add_option("--threshold", ea.threshold, "Threshold for hard and confident");
  estimate->add_option("--folds", ea.folds, "Cross-fitting folds");
  estimate->add_option("--seed", ea.seed, "Fold seed");
  estimate->add_option("--basis", ea.basis, "Nuisance basis: linear or poly2");
  estimate->add_option("--out", ea.out, "Output JSON path (stdout when omitted)");

  SimulateArgs sa;
  auto* simulate = app.add_subcommand("simulate", "Run a Monte Carlo experiment");
  simulate->add_option("--experiment", sa.experiment, "p1, p2, p3, p4 or p5")->required();
  simulate->add_flag("--paper-scale", sa.paper_scale, "Use the larger replication counts");
  simulate->add_option("--replications", sa.replications, "Override the replication count");
  simulate->add_option("--nuisance", sa.nuisance, "standard, oracle or cross_fit");
  simulate->add_option("--threads", sa.threads, "Worker threads (0 = all cores)");
  simulate->add_option("--seed", sa.seed, "Master seed");
  simulate->add_option("--out", sa.out, "Output path (stdout when omitted)");
  simulate->add_option("--format", sa.format, "csv or json");

  AdultArgs aa;
  auto* adult = app.add_subcommand("adult", "Run the UCI Adult pipeline on a user-supplied file");
  adult->add_option("--csv", aa.csv, "Path to adult.data or an equivalent CSV")->required();
  adult->add_option("--nl", aa.nl, "Comma-separated labelled-set sizes");
  adult->add_option("--splits", aa.splits, "Random splits per size");
  adult->add_option("--seed", aa.seed, "Master seed");
  adult->add_option("--threshold", aa.threshold, "Hard-label threshold");
  adult->add_option("--threads", aa.threads, "Worker threads (0 = all cores)");
  adult->add_option("--out", aa.out, "Output path (stdout when omitted)");
  adult->add_option("--format", aa.format, "csv or json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*diagnose) return run_diagnose(da);
    if (*estimate) return run_estimate(ea);
    if (*simulate) return run_simulate(sa);
    if (*adult) return run_adult_cmd(aa);
  } catch (const cd::VStarCollapse& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCollapse;
  } catch (const cd::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const cd::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitOk;
}
