#pragma once

// CSV ingestion into labelled and unlabelled sets.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "calibdiag/data.hpp"

namespace calibdiag {

struct TableSchema {
  std::vector<std::string> w_columns;
  std::vector<std::string> x_columns;
  std::optional<std::string> p_column;
  std::string y_column;
  std::optional<std::string> g_column;
  std::vector<std::string> categorical_columns;

  // x_columns must be a subset of w_columns and categorical columns must be
  // named in w_columns. Throws SchemaError.
  void validate() const;
};

TableSchema schema_from_json(const std::string& text);
TableSchema load_schema(const std::string& path);

// Header plus string cells, surrounding whitespace trimmed. Quoted fields
// with embedded commas and doubled quotes are supported.
struct RawTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;  // 1-based file line of each row
};

RawTable parse_csv(const std::string& text, bool has_header = true);
RawTable read_csv(const std::string& path, bool has_header = true);

// "?" and empty cells count as missing.
bool is_missing(const std::string& cell);

// Sorted distinct levels; the first one is the dropped reference level.
std::vector<std::string> category_levels(const std::vector<std::string>& values);

struct LoadedTable {
  Matrix w;
  std::vector<std::string> w_names;  // after one-hot expansion
  std::vector<Index> x_cols;
  Vector y;
  std::optional<Vector> p;
  std::optional<Vector> g;
  std::size_t dropped_rows = 0;

  LabelledSet labelled() const;
  UnlabelledSet unlabelled() const;
};

enum class TableMode { labelled, unlabelled, any };

// Rows with a missing value in any used column are dropped and counted.
// The p column is required in unlabelled mode and g in labelled mode; in
// other modes each is read only when the header has it.
// Categorical columns are one-hot encoded with the lexicographically first
// level dropped. Errors: SchemaError for an absent column, ValidationError
// (with the file line) for unparseable numbers, p outside [0, 1] or g not 0/1.
LoadedTable load_table(const RawTable& raw, const TableSchema& schema, TableMode mode = TableMode::any);
LoadedTable load_table(const std::string& path, const TableSchema& schema, TableMode mode = TableMode::any);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace calibdiag
