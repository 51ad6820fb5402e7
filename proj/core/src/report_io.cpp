#include "calibdiag/report_io.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "calibdiag/errors.hpp"
#include "calibdiag/table_io.hpp"

namespace calibdiag {

using nlohmann::json;

std::string format_number(double v) {
  if (!std::isfinite(v)) return "null";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::string quote(const std::string& s) { return json(s).dump(); }

// Appends "key": value pairs in insertion order.
class ObjectWriter {
 public:
  ObjectWriter& raw(const std::string& key, const std::string& value) {
    out_ << (first_ ? "" : ",") << "\n" << indent_ << "  " << quote(key) << ": " << value;
    first_ = false;
    return *this;
  }
  ObjectWriter& num(const std::string& key, double v) { return raw(key, format_number(v)); }
  std::string str() const { return "{" + out_.str() + "\n" + indent_ + "}"; }
  explicit ObjectWriter(std::string indent = "") : indent_(std::move(indent)) {}

 private:
  std::ostringstream out_;
  std::string indent_;
  bool first_ = true;
};

double number_or_inf(const json& j) {
  if (j.is_null()) return std::numeric_limits<double>::infinity();
  return j.get<double>();
}

const json& field(const json& j, const char* key) {
  if (!j.contains(key)) throw SchemaError(key, "missing from report JSON");
  return j.at(key);
}

json parse(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw SchemaError("<json>", e.what());
  }
}

std::string csv_cell(const Cell& c) {
  if (const double* d = std::get_if<double>(&c)) return std::isfinite(*d) ? format_number(*d) : "";
  const std::string& s = std::get<std::string>(c);
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return q + "\"";
}

}  // namespace

std::string report_to_json(const DiagnosticReport& r) {
  std::string kappas = "[";
  for (std::size_t i = 0; i < r.kappas.size(); ++i) {
    ObjectWriter k("    ");
    k.num("threshold", r.kappas[i].threshold)
        .num("kappa_hat", r.kappas[i].kappa_hat)
        .raw("n_effective", std::to_string(r.kappas[i].n_effective));
    kappas += (i ? ",\n    " : "\n    ") + k.str();
  }
  kappas += r.kappas.empty() ? "]" : "\n  ]";

  std::string leak = "null";
  if (r.label_leak) {
    std::string coefs = "[";
    for (std::size_t i = 0; i < r.label_leak->x_coefficients.size(); ++i) {
      coefs += (i ? ", " : "") + format_number(r.label_leak->x_coefficients[i]);
    }
    coefs += "]";
    ObjectWriter l("  ");
    l.num("wald_stat", r.label_leak->wald_stat)
        .raw("df", std::to_string(r.label_leak->df))
        .num("p_value", r.label_leak->p_value)
        .raw("x_coefficients", coefs);
    leak = l.str();
  }

  std::string notes = "[";
  for (std::size_t i = 0; i < r.notes.size(); ++i) notes += (i ? ",\n    " : "\n    ") + quote(r.notes[i]);
  notes += r.notes.empty() ? "]" : "\n  ]";

  ObjectWriter w;
  w.num("v_star_hat", r.v_star_hat)
      .raw("kappas", kappas)
      .num("se_soft_implied", r.se_soft_implied)
      .raw("se_supervised", r.se_supervised ? format_number(*r.se_supervised) : "null")
      .raw("decision", quote(std::string(to_string(r.decision))))
      .raw("label_leak", leak)
      .raw("notes", notes)
      .raw("seed", std::to_string(r.seed))
      .raw("version", quote(r.version));
  return w.str() + "\n";
}

DiagnosticReport report_from_json(const std::string& text) {
  const json j = parse(text);
  DiagnosticReport r;
  try {
    r.v_star_hat = field(j, "v_star_hat").get<double>();
    for (const auto& k : field(j, "kappas")) {
      KappaEstimate e;
      e.threshold = k.at("threshold").get<double>();
      e.kappa_hat = number_or_inf(k.at("kappa_hat"));
      e.n_effective = k.value("n_effective", std::size_t{0});
      r.kappas.push_back(e);
    }
    r.se_soft_implied = number_or_inf(field(j, "se_soft_implied"));
    if (!field(j, "se_supervised").is_null()) {
      r.se_supervised = number_or_inf(j.at("se_supervised"));
    }
    r.decision = decision_from_string(field(j, "decision").get<std::string>());
    const json& leak = field(j, "label_leak");
    if (!leak.is_null()) {
      LabelLeakResult l;
      l.wald_stat = leak.at("wald_stat").get<double>();
      l.df = leak.at("df").get<std::size_t>();
      l.p_value = leak.at("p_value").get<double>();
      if (leak.contains("x_coefficients")) l.x_coefficients = leak.at("x_coefficients").get<std::vector<double>>();
      r.label_leak = l;
    }
    r.notes = field(j, "notes").get<std::vector<std::string>>();
    r.seed = field(j, "seed").get<std::uint64_t>();
    r.version = field(j, "version").get<std::string>();
  } catch (const json::exception& e) {
    throw SchemaError("<report>", e.what());
  }
  return r;
}

std::string estimate_to_json(const TauEstimate& e) {
  ObjectWriter w;
  w.raw("method", quote(std::string(to_string(e.method))))
      .num("tau_hat", e.tau_hat)
      .num("se", e.se)
      .num("ci_lo", e.ci_lo)
      .num("ci_hi", e.ci_hi)
      .raw("n_used", std::to_string(e.n_used))
      .raw("regularized", e.regularized ? "true" : "false");
  return w.str() + "\n";
}

TauEstimate estimate_from_json(const std::string& text) {
  const json j = parse(text);
  try {
    TauEstimate e;
    e.method = method_from_string(field(j, "method").get<std::string>());
    e.tau_hat = field(j, "tau_hat").get<double>();
    e.se = number_or_inf(field(j, "se"));
    e.ci_lo = j.at("ci_lo").is_null() ? -std::numeric_limits<double>::infinity() : j.at("ci_lo").get<double>();
    e.ci_hi = number_or_inf(field(j, "ci_hi"));
    e.n_used = field(j, "n_used").get<std::size_t>();
    e.regularized = field(j, "regularized").get<bool>();
    return e;
  } catch (const json::exception& ex) {
    throw SchemaError("<estimate>", ex.what());
  }
}

std::string table_to_csv(const Table& t) {
  std::string out;
  for (std::size_t i = 0; i < t.columns.size(); ++i) out += (i ? "," : "") + t.columns[i];
  out += "\n";
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + csv_cell(row[i]);
    out += "\n";
  }
  return out;
}

std::string table_to_json(const Table& t) {
  std::string rows = "[";
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    ObjectWriter w("    ");
    for (std::size_t c = 0; c < t.columns.size() && c < t.rows[r].size(); ++c) {
      const Cell& cell = t.rows[r][c];
      if (const double* d = std::get_if<double>(&cell)) {
        w.num(t.columns[c], *d);
      } else {
        w.raw(t.columns[c], quote(std::get<std::string>(cell)));
      }
    }
    rows += (r ? ",\n    " : "\n    ") + w.str();
  }
  rows += t.rows.empty() ? "]" : "\n  ]";
  std::string notes = "[";
  for (std::size_t i = 0; i < t.notes.size(); ++i) notes += (i ? ", " : "") + quote(t.notes[i]);
  notes += "]";
  ObjectWriter w;
  w.raw("columns", json(t.columns).dump()).raw("rows", rows).raw("notes", notes);
  return w.str() + "\n";
}

OutputFormat output_format_from_string(std::string_view s) {
  if (s == "json") return OutputFormat::json;
  if (s == "csv") return OutputFormat::csv;
  throw InvalidArgument("unknown output format '" + std::string(s) + "'");
}

std::string format_report(const DiagnosticReport& report, OutputFormat format) {
  if (format == OutputFormat::json) return report_to_json(report);
  Table t;
  t.columns = {"field", "threshold", "value"};
  auto add = [&](const std::string& f, double thr, double v) {
    t.rows.push_back({Cell{f}, Cell{thr}, Cell{v}});
  };
  const double none = std::numeric_limits<double>::quiet_NaN();
  add("v_star_hat", none, report.v_star_hat);
  for (const auto& k : report.kappas) add("kappa_hat", k.threshold, k.kappa_hat);
  add("se_soft_implied", none, report.se_soft_implied);
  add("se_supervised", none, report.se_supervised.value_or(none));
  if (report.label_leak) add("label_leak_p_value", none, report.label_leak->p_value);
  t.rows.push_back({Cell{std::string("decision")}, Cell{none}, Cell{std::string(to_string(report.decision))}});
  return table_to_csv(t);
}

void emit_report(const DiagnosticReport& report, OutputFormat format, const std::string& path) {
  write_text_file(path, format_report(report, format));
}

void emit_table(const Table& table, OutputFormat format, const std::string& path) {
  write_text_file(path, format == OutputFormat::json ? table_to_json(table) : table_to_csv(table));
}

}  // namespace calibdiag
