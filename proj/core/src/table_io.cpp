#include "calibdiag/table_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "calibdiag/errors.hpp"

namespace calibdiag {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  cells.push_back(trim(cur));
  return cells;
}

std::vector<std::string> string_list(const nlohmann::json& j, const char* key, bool required) {
  if (!j.contains(key) || j[key].is_null()) {
    if (required) throw SchemaError(key, "missing from schema");
    return {};
  }
  if (!j[key].is_array()) throw SchemaError(key, "must be an array of column names");
  std::vector<std::string> out;
  for (const auto& v : j[key]) {
    if (!v.is_string()) throw SchemaError(key, "must contain only strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

std::optional<std::string> optional_string(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  if (!j[key].is_string()) throw SchemaError(key, "must be a column name");
  return j[key].get<std::string>();
}

double parse_number(const std::string& cell, std::size_t line, const std::string& column) {
  double v = 0.0;
  const char* b = cell.data();
  const char* e = b + cell.size();
  if (!cell.empty() && *b == '+') ++b;
  const auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || ptr != e) {
    throw ValidationError(line, "column '" + column + "': '" + cell + "' is not a number");
  }
  return v;
}

}  // namespace

void TableSchema::validate() const {
  if (y_column.empty()) throw SchemaError("y_column", "must be set");
  const std::set<std::string> w(w_columns.begin(), w_columns.end());
  if (w.size() != w_columns.size()) throw SchemaError("w_columns", "contains duplicate names");
  for (const auto& x : x_columns) {
    if (!w.count(x)) throw SchemaError(x, "x column is not among w_columns");
  }
  for (const auto& c : categorical_columns) {
    if (!w.count(c)) throw SchemaError(c, "categorical column is not among w_columns");
  }
}

TableSchema schema_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("<schema>", std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw SchemaError("<schema>", "must be a JSON object");
  TableSchema s;
  s.w_columns = string_list(j, "w_columns", true);
  s.x_columns = string_list(j, "x_columns", true);
  s.p_column = optional_string(j, "p_column");
  const auto y = optional_string(j, "y_column");
  if (!y) throw SchemaError("y_column", "missing from schema");
  s.y_column = *y;
  s.g_column = optional_string(j, "g_column");
  s.categorical_columns = string_list(j, "categorical_columns", false);
  s.validate();
  return s;
}

TableSchema load_schema(const std::string& path) { return schema_from_json(read_text_file(path)); }

RawTable parse_csv(const std::string& text, bool has_header) {
  RawTable t;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool header_done = !has_header;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split_line(line);
    if (!header_done) {
      if (!cells.empty() && cells[0].size() >= 3 && cells[0].compare(0, 3, "\xEF\xBB\xBF") == 0) {
        cells[0] = cells[0].substr(3);
      }
      t.header = std::move(cells);
      header_done = true;
      continue;
    }
    t.rows.push_back(std::move(cells));
    t.line_numbers.push_back(line_no);
  }
  if (has_header && t.header.empty()) throw EmptyInput("CSV has no header row");
  return t;
}

RawTable read_csv(const std::string& path, bool has_header) {
  return parse_csv(read_text_file(path), has_header);
}

bool is_missing(const std::string& cell) { return cell.empty() || cell == "?"; }

std::vector<std::string> category_levels(const std::vector<std::string>& values) {
  std::set<std::string> s(values.begin(), values.end());
  return {s.begin(), s.end()};
}

LabelledSet LoadedTable::labelled() const {
  if (!g) throw SchemaError("g_column", "labelled mode needs a g column");
  return LabelledSet(w, x_cols, *g, y, p);
}

UnlabelledSet LoadedTable::unlabelled() const {
  if (!p) throw SchemaError("p_column", "unlabelled mode needs a p column");
  return UnlabelledSet(w, x_cols, *p, y);
}

LoadedTable load_table(const RawTable& raw, const TableSchema& schema, TableMode mode) {
  schema.validate();
  if (mode == TableMode::unlabelled && !schema.p_column) throw SchemaError("p_column", "required for unlabelled data");
  if (mode == TableMode::labelled && !schema.g_column) throw SchemaError("g_column", "required for labelled data");

  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < raw.header.size(); ++i) index.emplace(raw.header[i], i);
  auto column = [&](const std::string& name) {
    const auto it = index.find(name);
    if (it == index.end()) throw SchemaError(name, "column not found in header");
    return it->second;
  };

  // p and g are required only when the mode needs them; otherwise they are
  // read when present in the header.
  auto wanted = [&](const std::optional<std::string>& name, bool required) -> std::optional<std::string> {
    if (!name) return std::nullopt;
    if (required || index.count(*name)) return name;
    return std::nullopt;
  };
  const auto p_name = wanted(schema.p_column, mode == TableMode::unlabelled);
  const auto g_name = wanted(schema.g_column, mode == TableMode::labelled);

  std::vector<std::string> used = schema.w_columns;
  used.push_back(schema.y_column);
  if (p_name) used.push_back(*p_name);
  if (g_name) used.push_back(*g_name);
  std::vector<std::size_t> used_idx;
  for (const auto& u : used) used_idx.push_back(column(u));

  std::vector<std::size_t> keep;
  LoadedTable out;
  for (std::size_t r = 0; r < raw.rows.size(); ++r) {
    const auto& row = raw.rows[r];
    bool missing = false;
    for (std::size_t c : used_idx) {
      if (c >= row.size() || is_missing(row[c])) {
        missing = true;
        break;
      }
    }
    if (missing) {
      ++out.dropped_rows;
    } else {
      keep.push_back(r);
    }
  }
  if (keep.empty()) throw EmptyInput("no complete rows after dropping missing values");
  const auto n = static_cast<Index>(keep.size());
  auto line_of = [&](std::size_t k) { return raw.line_numbers.empty() ? keep[k] + 1 : raw.line_numbers[keep[k]]; };

  const std::set<std::string> categorical(schema.categorical_columns.begin(), schema.categorical_columns.end());
  std::vector<Vector> cols;
  std::map<std::string, std::vector<Index>> expanded_of;
  for (const auto& name : schema.w_columns) {
    const std::size_t c = column(name);
    if (categorical.count(name)) {
      std::vector<std::string> vals;
      for (std::size_t r : keep) vals.push_back(raw.rows[r][c]);
      const auto levels = category_levels(vals);
      for (std::size_t l = 1; l < levels.size(); ++l) {
        Vector v(n);
        for (Index i = 0; i < n; ++i) v[i] = vals[static_cast<std::size_t>(i)] == levels[l] ? 1.0 : 0.0;
        expanded_of[name].push_back(static_cast<Index>(cols.size()));
        out.w_names.push_back(name + "=" + levels[l]);
        cols.push_back(std::move(v));
      }
    } else {
      Vector v(n);
      for (Index i = 0; i < n; ++i) {
        v[i] = parse_number(raw.rows[keep[static_cast<std::size_t>(i)]][c], line_of(static_cast<std::size_t>(i)), name);
      }
      expanded_of[name].push_back(static_cast<Index>(cols.size()));
      out.w_names.push_back(name);
      cols.push_back(std::move(v));
    }
  }
  out.w.resize(n, static_cast<Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.w.col(static_cast<Index>(j)) = cols[j];
  for (const auto& x : schema.x_columns) {
    for (Index j : expanded_of[x]) out.x_cols.push_back(j);
  }

  auto numeric = [&](const std::string& name) {
    const std::size_t c = column(name);
    Vector v(n);
    for (Index i = 0; i < n; ++i) {
      v[i] = parse_number(raw.rows[keep[static_cast<std::size_t>(i)]][c], line_of(static_cast<std::size_t>(i)), name);
    }
    return v;
  };
  out.y = numeric(schema.y_column);
  if (p_name) {
    out.p = numeric(*p_name);
    for (Index i = 0; i < n; ++i) {
      const double v = (*out.p)[i];
      if (!(v >= 0.0 && v <= 1.0)) {
        throw ValidationError(line_of(static_cast<std::size_t>(i)), "p = " + std::to_string(v) + " outside [0,1]");
      }
    }
  }
  if (g_name) {
    out.g = numeric(*g_name);
    for (Index i = 0; i < n; ++i) {
      const double v = (*out.g)[i];
      if (v != 0.0 && v != 1.0) throw ValidationError(line_of(static_cast<std::size_t>(i)), "g must be 0 or 1");
    }
  }
  return out;
}

LoadedTable load_table(const std::string& path, const TableSchema& schema, TableMode mode) {
  return load_table(read_csv(path), schema, mode);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError(path, "read failed");
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path, "cannot open for writing");
  out << text;
  out.flush();
  if (!out) throw IoError(path, "write failed");
}

}  // namespace calibdiag
