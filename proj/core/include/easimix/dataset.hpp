#pragma once

#include "easimix/easi.hpp"

#include <string>
#include <vector>

namespace easimix {

/// Column names in the delimited data file. Vector blocks may be empty;
/// `weight` and `coordinates` are optional.
struct ColumnMap {
  std::vector<std::string> shares;
  std::vector<std::string> prices;
  std::string expenditure;
  std::vector<std::string> h;
  std::vector<std::string> h_p;
  std::vector<std::string> h_y;
  std::vector<std::string> z;
  std::string weight;
  std::vector<std::string> coordinates;  // projected x, y in meters
};

/// One unit per good; the conversion between goods is left to the analyst.
struct Units {
  std::string currency = "currency";
  std::string price = "currency per unit";
  std::vector<std::string> quantities;
  double price_scale = 1.0;  // currency per price unit
};

/// JSON manifest next to a data file. `log_prices` / `log_expenditure` say
/// whether the loader takes logs (raw levels) or reads the columns as logs.
struct DatasetManifest {
  std::string data_path;
  std::vector<std::string> goods;
  std::string base_good;
  ColumnMap columns;
  Units units;
  int degree = 1;
  int clusters = 1;
  bool symmetric = true;
  bool log_prices = true;
  bool log_expenditure = true;

  /// Dimensions implied by the column map and model block (in input good
  /// order; the base good is moved last at load time).
  Dimensions dimensions() const;
  void validate() const;
};

/// Relative `data` paths resolve against `base_dir`.
DatasetManifest parse_manifest(const std::string& text, const std::string& base_dir = "");
DatasetManifest read_manifest(const std::string& path);
std::string manifest_to_json(const DatasetManifest& manifest);

struct LoadReport {
  int rows_read = 0;
  int rows_kept = 0;
  int missing_instrument_rows = 0;
  int renormalized_rows = 0;
  Mat coordinates;  // rows_kept x 2 when declared, else empty
};

inline constexpr double kShareSumTolerance = 1e-3;

/// Parses and validates every row. Rows with a missing instrument value are
/// dropped and counted; every other problem is collected and reported in a
/// single DataError with 1-based data row numbers.
Dataset load_dataset(const std::string& data_path, const DatasetManifest& manifest, LoadReport* report = nullptr);
Dataset load_dataset(const DatasetManifest& manifest, LoadReport* report = nullptr);

/// Canonical form: log prices and log expenditure, base good last. Writes
/// `<stem>.csv` and `<stem>.json`; loading them gives identical observations.
void write_dataset(const Dataset& data, const std::string& stem, const Units& units = {});

}  // namespace easimix
