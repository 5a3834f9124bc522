#include "easimix/dataset.hpp"

#include "easimix/config.hpp"
#include "json_util.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace easimix {

namespace {

using detail::json;
namespace fs = std::filesystem;

constexpr std::size_t kMaxListedErrors = 25;
constexpr double kRenormalizeThreshold = 1e-12;

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cell.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cell.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cell));
      cell.clear();
    } else if (c != '\r') {
      cell.push_back(c);
    }
  }
  out.push_back(std::move(cell));
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

bool is_missing(const std::string& cell) {
  const std::string t = trim(cell);
  return t.empty() || t == "NA" || t == "NaN" || t == "nan" || t == ".";
}

bool parse_double(const std::string& cell, double& out) {
  const std::string t = trim(cell);
  if (t.empty()) return false;
  const char* first = t.data();
  if (*first == '+') ++first;
  const auto res = std::from_chars(first, t.data() + t.size(), out);
  return res.ec == std::errc() && res.ptr == t.data() + t.size() && std::isfinite(out);
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> strings_from(const json& j, const char* key) {
  if (!j.contains(key)) return {};
  return j.at(key).get<std::vector<std::string>>();
}

}  // namespace

Dimensions DatasetManifest::dimensions() const {
  Dimensions d;
  d.goods = static_cast<int>(goods.size());
  d.degree = degree;
  d.demographics = static_cast<int>(columns.h.size());
  d.price_covariates = static_cast<int>(columns.h_p.size());
  d.utility_covariates = static_cast<int>(columns.h_y.size());
  d.instruments = static_cast<int>(columns.z.size());
  d.clusters = clusters;
  d.symmetric = symmetric;
  return d;
}

void DatasetManifest::validate() const {
  const std::size_t S = goods.size();
  if (S < 2) throw DataError("manifest: at least two goods are required");
  if (columns.shares.size() != S) throw DataError("manifest: one share column per good is required");
  if (columns.prices.size() != S) throw DataError("manifest: one price column per good is required");
  if (columns.expenditure.empty()) throw DataError("manifest: expenditure column is required");
  if (!columns.coordinates.empty() && columns.coordinates.size() != 2)
    throw DataError("manifest: coordinates need exactly two columns");
  if (!units.quantities.empty() && units.quantities.size() != S)
    throw DataError("manifest: one quantity unit per good is required");
  if (!(units.price_scale > 0.0)) throw DataError("manifest: price_scale must be positive");
  if (!base_good.empty() && std::find(goods.begin(), goods.end(), base_good) == goods.end())
    throw DataError("manifest: base good '" + base_good + "' is not among the goods");
  dimensions().validate();
}

DatasetManifest parse_manifest(const std::string& text, const std::string& base_dir) {
  DatasetManifest m;
  try {
    const json doc = json::parse(text);
    m.data_path = doc.value("data", std::string());
    if (!m.data_path.empty() && !base_dir.empty() && fs::path(m.data_path).is_relative())
      m.data_path = (fs::path(base_dir) / m.data_path).string();
    m.goods = doc.at("goods").get<std::vector<std::string>>();
    m.base_good = doc.value("base_good", std::string());
    const json& c = doc.at("columns");
    m.columns.shares = strings_from(c, "shares");
    m.columns.prices = strings_from(c, "prices");
    m.columns.expenditure = c.value("expenditure", std::string());
    m.columns.h = strings_from(c, "h");
    m.columns.h_p = strings_from(c, "h_p");
    m.columns.h_y = strings_from(c, "h_y");
    m.columns.z = strings_from(c, "z");
    m.columns.weight = c.value("weight", std::string());
    m.columns.coordinates = strings_from(c, "coordinates");
    if (doc.contains("units")) {
      const json& u = doc.at("units");
      m.units.currency = u.value("currency", m.units.currency);
      m.units.price = u.value("price", m.units.price);
      m.units.quantities = strings_from(u, "quantities");
      m.units.price_scale = u.value("price_scale", 1.0);
    }
    if (doc.contains("dimensions")) {
      const json& d = doc.at("dimensions");
      m.degree = d.value("degree", 1);
      m.clusters = d.value("clusters", 1);
      m.symmetric = d.value("symmetric", true);
    }
    if (doc.contains("transform")) {
      const json& t = doc.at("transform");
      m.log_prices = t.value("log_prices", true);
      m.log_expenditure = t.value("log_expenditure", true);
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("manifest: ") + e.what());
  }
  m.validate();
  return m;
}

DatasetManifest read_manifest(const std::string& path) {
  return parse_manifest(read_text_file(path), fs::path(path).parent_path().string());
}

std::string manifest_to_json(const DatasetManifest& m) {
  json doc{{"data", m.data_path},
           {"goods", m.goods},
           {"base_good", m.base_good},
           {"columns",
            {{"shares", m.columns.shares},
             {"prices", m.columns.prices},
             {"expenditure", m.columns.expenditure},
             {"h", m.columns.h},
             {"h_p", m.columns.h_p},
             {"h_y", m.columns.h_y},
             {"z", m.columns.z},
             {"weight", m.columns.weight},
             {"coordinates", m.columns.coordinates}}},
           {"units",
            {{"currency", m.units.currency},
             {"price", m.units.price},
             {"quantities", m.units.quantities},
             {"price_scale", m.units.price_scale}}},
           {"dimensions", {{"degree", m.degree}, {"clusters", m.clusters}, {"symmetric", m.symmetric}}},
           {"transform", {{"log_prices", m.log_prices}, {"log_expenditure", m.log_expenditure}}}};
  return doc.dump(2);
}

Dataset load_dataset(const DatasetManifest& manifest, LoadReport* report) {
  return load_dataset(manifest.data_path, manifest, report);
}

Dataset load_dataset(const std::string& data_path, const DatasetManifest& manifest, LoadReport* report) {
  manifest.validate();
  std::ifstream in(data_path);
  if (!in) throw IoError("cannot open data file " + data_path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(data_path + ": empty file");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // UTF-8 BOM
  const std::vector<std::string> header = split_csv_line(line);
  std::map<std::string, int> index;
  for (std::size_t c = 0; c < header.size(); ++c) index[trim(header[c])] = static_cast<int>(c);

  const ColumnMap& cm = manifest.columns;
  std::vector<std::string> missing_columns;
  auto locate = [&](const std::vector<std::string>& names) {
    std::vector<int> out;
    for (const auto& n : names) {
      auto it = index.find(n);
      if (it == index.end()) missing_columns.push_back(n);
      out.push_back(it == index.end() ? -1 : it->second);
    }
    return out;
  };
  const auto c_shares = locate(cm.shares);
  const auto c_prices = locate(cm.prices);
  const auto c_exp = locate({cm.expenditure});
  const auto c_h = locate(cm.h);
  const auto c_hp = locate(cm.h_p);
  const auto c_hy = locate(cm.h_y);
  const auto c_z = locate(cm.z);
  const auto c_w = cm.weight.empty() ? std::vector<int>{} : locate({cm.weight});
  const auto c_xy = locate(cm.coordinates);
  if (!missing_columns.empty()) {
    std::string msg = data_path + ": missing required column(s):";
    for (const auto& n : missing_columns) msg += " " + n;
    throw DataError(msg);
  }

  // Input order -> output order with the base good last.
  const int S = static_cast<int>(manifest.goods.size());
  std::vector<int> order(S);
  for (int l = 0; l < S; ++l) order[l] = l;
  if (!manifest.base_good.empty()) {
    const int b = static_cast<int>(std::find(manifest.goods.begin(), manifest.goods.end(), manifest.base_good) -
                                   manifest.goods.begin());
    order.erase(order.begin() + b);
    order.push_back(b);
  }

  Dataset data;
  data.dims = manifest.dimensions();
  for (int l : order) data.goods.push_back(manifest.goods[l]);
  LoadReport rep;
  std::vector<std::string> errors;
  std::size_t error_count = 0;
  std::vector<std::array<double, 2>> coords;
  int row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty() || line == "\r") continue;
    ++row;
    ++rep.rows_read;
    const std::vector<std::string> cells = split_csv_line(line);
    std::vector<std::string> row_errors;
    auto fail = [&](const std::string& what) { row_errors.push_back(what); };
    auto value = [&](int col, const std::string& name, double& out) {
      if (col >= static_cast<int>(cells.size()) || is_missing(cells[col])) {
        fail("missing value in column " + name);
        return false;
      }
      if (!parse_double(cells[col], out)) {
        fail("non-numeric value '" + trim(cells[col]) + "' in column " + name);
        return false;
      }
      return true;
    };
    auto block = [&](const std::vector<int>& cols, const std::vector<std::string>& names) {
      Vec v(static_cast<Eigen::Index>(cols.size()));
      for (std::size_t k = 0; k < cols.size(); ++k) value(cols[k], names[k], v(static_cast<Eigen::Index>(k)));
      return v;
    };

    bool instrument_missing = false;
    for (int col : c_z)
      if (col >= static_cast<int>(cells.size()) || is_missing(cells[col])) instrument_missing = true;
    if (instrument_missing) {
      ++rep.missing_instrument_rows;
      continue;
    }

    Vec raw_shares = block(c_shares, cm.shares);
    Vec raw_prices = block(c_prices, cm.prices);
    double expenditure = 0.0;
    value(c_exp[0], cm.expenditure, expenditure);
    Vec h = block(c_h, cm.h), h_p = block(c_hp, cm.h_p), h_y = block(c_hy, cm.h_y), z = block(c_z, cm.z);
    double weight = 1.0;
    if (!c_w.empty()) {
      value(c_w[0], cm.weight, weight);
      if (row_errors.empty() && !(weight > 0.0)) fail("nonpositive weight");
    }
    std::array<double, 2> xy{0.0, 0.0};
    if (!c_xy.empty()) {
      value(c_xy[0], cm.coordinates[0], xy[0]);
      value(c_xy[1], cm.coordinates[1], xy[1]);
    }

    Vec shares(S), log_prices(S);
    if (row_errors.empty()) {
      for (int l = 0; l < S; ++l) {
        const int src = order[l];
        shares(l) = raw_shares(src);
        if (shares(l) < 0.0) fail("negative share for " + manifest.goods[src]);
        const double p = raw_prices(src);
        if (manifest.log_prices) {
          if (p < 0.0) fail("negative price for " + manifest.goods[src]);
          else if (p == 0.0) fail("zero price for " + manifest.goods[src]);
          else log_prices(l) = std::log(p);
        } else {
          log_prices(l) = p;
        }
      }
      if (manifest.log_expenditure && !(expenditure > 0.0))
        fail(expenditure == 0.0 ? "zero expenditure" : "negative expenditure");
      const double sum = shares.sum();
      if (std::abs(sum - 1.0) > kShareSumTolerance) fail("shares sum to " + fmt17(sum));
      if (row_errors.empty() && std::abs(sum - 1.0) > kRenormalizeThreshold) {
        shares /= sum;
        ++rep.renormalized_rows;
      }
    }
    if (!row_errors.empty()) {
      for (const auto& e : row_errors) {
        ++error_count;
        if (errors.size() < kMaxListedErrors) errors.push_back("row " + std::to_string(row) + ": " + e);
      }
      continue;
    }
    const double e = manifest.log_expenditure ? std::log(expenditure) : expenditure;
    data.observations.push_back(make_observation(std::move(shares), std::move(log_prices), e, std::move(h),
                                                 std::move(h_p), std::move(h_y), std::move(z), weight));
    coords.push_back(xy);
  }
  if (error_count > 0) {
    std::string msg = data_path + ": " + std::to_string(error_count) + " invalid value(s)";
    for (const auto& e : errors) msg += "\n  " + e;
    if (error_count > errors.size()) msg += "\n  ...";
    throw DataError(msg);
  }
  rep.rows_kept = data.size();
  if (!c_xy.empty()) {
    rep.coordinates.resize(rep.rows_kept, 2);
    for (int i = 0; i < rep.rows_kept; ++i) rep.coordinates.row(i) << coords[i][0], coords[i][1];
  }
  if (report) *report = rep;
  return data;
}

void write_dataset(const Dataset& data, const std::string& stem, const Units& units) {
  const Dimensions& d = data.dims;
  const int S = d.goods;
  std::vector<std::string> goods = data.goods;
  if (goods.empty())
    for (int l = 0; l < S; ++l) goods.push_back("good" + std::to_string(l + 1));
  if (static_cast<int>(goods.size()) != S) throw DimensionError("write_dataset: goods list length");

  DatasetManifest m;
  m.data_path = fs::path(stem + ".csv").filename().string();
  m.goods = goods;
  m.base_good = goods.back();
  m.units = units;
  m.degree = d.degree;
  m.clusters = d.clusters;
  m.symmetric = d.symmetric;
  m.log_prices = false;
  m.log_expenditure = false;
  auto names = [](const std::string& prefix, int count) {
    std::vector<std::string> out;
    for (int k = 0; k < count; ++k) out.push_back(prefix + std::to_string(k + 1));
    return out;
  };
  for (const auto& g : goods) {
    m.columns.shares.push_back("share_" + g);
    m.columns.prices.push_back("log_price_" + g);
  }
  m.columns.expenditure = "log_expenditure";
  m.columns.h = names("h", d.demographics);
  m.columns.h_p = names("hp", d.price_covariates);
  m.columns.h_y = names("hy", d.utility_covariates);
  m.columns.z = names("z", d.instruments);
  m.columns.weight = "weight";

  std::ostringstream csv;
  std::vector<std::string> header;
  for (const auto* block : {&m.columns.shares, &m.columns.prices}) header.insert(header.end(), block->begin(), block->end());
  header.push_back(m.columns.expenditure);
  for (const auto* block : {&m.columns.h, &m.columns.h_p, &m.columns.h_y, &m.columns.z})
    header.insert(header.end(), block->begin(), block->end());
  header.push_back(m.columns.weight);
  for (std::size_t c = 0; c < header.size(); ++c) csv << (c ? "," : "") << header[c];
  csv << '\n';
  for (const auto& obs : data.observations) {
    check_observation(obs, d);
    std::vector<double> row;
    for (const Vec* v : {&obs.shares, &obs.log_prices}) row.insert(row.end(), v->data(), v->data() + v->size());
    row.push_back(obs.log_expenditure);
    for (const Vec* v : {&obs.h, &obs.h_p, &obs.h_y, &obs.z}) row.insert(row.end(), v->data(), v->data() + v->size());
    row.push_back(obs.weight);
    for (std::size_t c = 0; c < row.size(); ++c) csv << (c ? "," : "") << fmt17(row[c]);
    csv << '\n';
  }
  write_text_file(stem + ".csv", csv.str());
  write_text_file(stem + ".json", manifest_to_json(m));
}

}  // namespace easimix
