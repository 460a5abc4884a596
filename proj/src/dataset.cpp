#include "tnt/dataset.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "tnt/rng.hpp"

namespace tnt {

namespace {

std::string read_file_maybe_gzip(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  std::string raw((std::istreambuf_iterator<char>(in)),
                  std::istreambuf_iterator<char>());
  if (raw.size() >= 2 && static_cast<unsigned char>(raw[0]) == 0x1f &&
      static_cast<unsigned char>(raw[1]) == 0x8b) {
    z_stream zs{};
    if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK)
      throw DataError("zlib init failed for " + path);
    std::string out;
    out.resize(std::max<std::size_t>(raw.size() * 4, 1 << 16));
    zs.next_in = reinterpret_cast<Bytef*>(raw.data());
    zs.avail_in = static_cast<uInt>(raw.size());
    std::size_t written = 0;
    int rc = Z_OK;
    while (rc != Z_STREAM_END) {
      if (written == out.size()) out.resize(out.size() * 2);
      zs.next_out = reinterpret_cast<Bytef*>(out.data() + written);
      zs.avail_out = static_cast<uInt>(out.size() - written);
      rc = inflate(&zs, Z_NO_FLUSH);
      if (rc != Z_OK && rc != Z_STREAM_END) {
        inflateEnd(&zs);
        throw DataError("corrupt gzip stream: " + path);
      }
      written = out.size() - zs.avail_out;
    }
    inflateEnd(&zs);
    out.resize(written);
    return out;
  }
  return raw;
}

bool parse_double(const std::string& s, double& out) {
  const char* begin = s.c_str();
  char* end = nullptr;
  out = std::strtod(begin, &end);
  return end != begin && *end == '\0';
}

// Assign dense 0-based class indices. Numeric label sets sort numerically,
// anything else lexicographically.
void remap_labels(const std::vector<std::string>& raw, Dataset& ds) {
  std::vector<std::string> distinct = raw;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()),
                 distinct.end());
  bool numeric = true;
  std::vector<std::pair<double, std::string>> keyed;
  keyed.reserve(distinct.size());
  for (const auto& s : distinct) {
    double v;
    if (!parse_double(s, v)) {
      numeric = false;
      break;
    }
    keyed.emplace_back(v, s);
  }
  if (numeric) {
    std::sort(keyed.begin(), keyed.end());
    distinct.clear();
    for (auto& [v, s] : keyed) distinct.push_back(s);
  }
  std::map<std::string, int> index;
  for (int i = 0; i < static_cast<int>(distinct.size()); ++i)
    index[distinct[i]] = i;
  ds.class_names = distinct;
  ds.n_classes = static_cast<int>(distinct.size());
  ds.labels.reserve(raw.size());
  for (const auto& s : raw) ds.labels.push_back(index.at(s));
}

}  // namespace

void Dataset::validate() const {
  const std::size_t m = labels.size();
  if (n_features <= 0) throw DataError("dataset has no features");
  if (values.size() != m * static_cast<std::size_t>(n_features))
    throw DataError("feature matrix size does not match row count");
  if (n_classes < 2)
    throw DataError("InsufficientClasses: need at least 2 classes, got " +
                    std::to_string(n_classes));
  for (double v : values)
    if (!std::isfinite(v))
      throw DataError("NonFiniteFeature: feature matrix contains NaN/Inf");
  for (int y : labels)
    if (y < 0 || y >= n_classes)
      throw DataError("label out of range [0, n_classes)");
  if (!weights.empty()) {
    if (weights.size() != m) throw DataError("weight vector length mismatch");
    double total = 0;
    for (double w : weights) {
      if (!(w >= 0)) throw DataError("negative or NaN sample weight");
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-9)
      throw DataError("sample weights must sum to 1");
  }
}

Dataset load_libsvm(const std::string& path, int n_features) {
  const std::string text = read_file_maybe_gzip(path);
  Dataset ds;
  std::vector<std::string> raw_labels;
  std::vector<std::vector<std::pair<int, double>>> sparse_rows;
  int max_index = 0;
  std::istringstream lines(text);
  std::string line;
  int line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    // Strip trailing comments, allow blank lines.
    if (auto hash = line.find('#'); hash != std::string::npos)
      line.resize(hash);
    std::istringstream fields(line);
    std::string label;
    if (!(fields >> label)) continue;
    std::vector<std::pair<int, double>> row;
    std::string item;
    int prev_index = 0;
    while (fields >> item) {
      auto colon = item.find(':');
      if (colon == std::string::npos)
        throw DataError("malformed line " + std::to_string(line_no) +
                        ": expected idx:val, got '" + item + "'");
      double idx_val, value;
      if (!parse_double(item.substr(0, colon), idx_val) ||
          idx_val != std::floor(idx_val) || idx_val < 1)
        throw DataError("malformed line " + std::to_string(line_no) +
                        ": bad feature index in '" + item + "'");
      int idx = static_cast<int>(idx_val);
      if (idx <= prev_index)
        throw DataError("malformed line " + std::to_string(line_no) +
                        ": feature indices must be strictly increasing");
      if (!parse_double(item.substr(colon + 1), value))
        throw DataError("malformed line " + std::to_string(line_no) +
                        ": bad feature value in '" + item + "'");
      prev_index = idx;
      row.emplace_back(idx, value);
      max_index = std::max(max_index, idx);
    }
    raw_labels.push_back(label);
    sparse_rows.push_back(std::move(row));
  }
  if (raw_labels.empty()) throw DataError("empty LIBSVM file: " + path);
  if (n_features > 0 && max_index > n_features)
    throw DataError("feature index " + std::to_string(max_index) +
                    " exceeds declared n_features " +
                    std::to_string(n_features));
  ds.n_features = n_features > 0 ? n_features : max_index;
  if (ds.n_features == 0)
    throw DataError("no features found in " + path);
  ds.values.assign(sparse_rows.size() * static_cast<std::size_t>(ds.n_features),
                   0.0);
  for (std::size_t r = 0; r < sparse_rows.size(); ++r)
    for (auto& [idx, v] : sparse_rows[r])
      ds.values[r * ds.n_features + (idx - 1)] = v;
  remap_labels(raw_labels, ds);
  ds.validate();
  return ds;
}

namespace {

// RFC 4180 line splitter; returns false when the record is malformed.
bool split_csv_record(const std::string& line, std::vector<std::string>& out) {
  out.clear();
  std::string field;
  bool quoted = false;
  std::size_t i = 0;
  while (i < line.size()) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          i += 2;
          continue;
        }
        quoted = false;
        ++i;
      } else {
        field += c;
        ++i;
      }
    } else if (c == '"') {
      if (!field.empty()) return false;
      quoted = true;
      ++i;
    } else if (c == ',') {
      out.push_back(std::move(field));
      field.clear();
      ++i;
    } else {
      field += c;
      ++i;
    }
  }
  if (quoted) return false;
  out.push_back(std::move(field));
  return true;
}

}  // namespace

Dataset load_csv(const std::string& path, const std::string& label_column,
                 bool header) {
  const std::string text = read_file_maybe_gzip(path);
  std::istringstream lines(text);
  std::string line;
  std::vector<std::string> fields;
  int n_cols = -1;
  int label_idx = -1;
  std::vector<std::string> header_names;

  if (header) {
    if (!std::getline(lines, line)) throw DataError("empty CSV file: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!split_csv_record(line, header_names))
      throw DataError("malformed CSV header");
    n_cols = static_cast<int>(header_names.size());
    for (int i = 0; i < n_cols; ++i)
      if (header_names[i] == label_column) label_idx = i;
  }

  Dataset ds;
  std::vector<std::string> raw_labels;
  std::vector<double> matrix;
  int line_no = header ? 1 : 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!split_csv_record(line, fields))
      throw DataError("malformed CSV record at line " +
                      std::to_string(line_no));
    if (n_cols < 0) n_cols = static_cast<int>(fields.size());
    if (static_cast<int>(fields.size()) != n_cols)
      throw DataError("ragged CSV row at line " + std::to_string(line_no) +
                      ": expected " + std::to_string(n_cols) + " fields");
    if (label_idx < 0) {
      // Resolve a positional label column on first data row.
      double pos;
      if (!parse_double(label_column, pos) || pos != std::floor(pos))
        throw DataError("MissingLabelColumn: no column named '" +
                        label_column + "'");
      label_idx = static_cast<int>(pos);
      if (label_idx < 0) label_idx += n_cols;
      if (label_idx < 0 || label_idx >= n_cols)
        throw DataError("MissingLabelColumn: index " + label_column +
                        " out of range for " + std::to_string(n_cols) +
                        " columns");
    }
    raw_labels.push_back(fields[label_idx]);
    for (int c = 0; c < n_cols; ++c) {
      if (c == label_idx) continue;
      double v;
      if (!parse_double(fields[c], v))
        throw DataError("non-numeric feature cell at line " +
                        std::to_string(line_no) + ", column " +
                        std::to_string(c));
      if (!std::isfinite(v))
        throw DataError("NonFiniteFeature at line " + std::to_string(line_no) +
                        ", column " + std::to_string(c));
      matrix.push_back(v);
    }
  }
  if (raw_labels.empty()) throw DataError("CSV file has no data rows: " + path);
  if (label_idx < 0)
    throw DataError("MissingLabelColumn: no column named '" + label_column +
                    "'");
  ds.n_features = n_cols - 1;
  if (ds.n_features <= 0) throw DataError("CSV has no feature columns");
  ds.values = std::move(matrix);
  remap_labels(raw_labels, ds);
  ds.validate();
  return ds;
}

void save_libsvm(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open file for writing: " + path);
  char buf[64];
  for (int r = 0; r < ds.n_rows(); ++r) {
    out << ds.class_names.at(ds.labels[r]);
    int last_written = 0;
    for (int c = 0; c < ds.n_features; ++c) {
      double v = ds.at(r, c);
      if (v != 0.0) {
        std::snprintf(buf, sizeof buf, " %d:%.17g", c + 1, v);
        out << buf;
        last_written = c + 1;
      }
    }
    // Pin the dimensionality on the first row so a reload recovers k.
    if (r == 0 && last_written < ds.n_features) {
      std::snprintf(buf, sizeof buf, " %d:%.17g", ds.n_features,
                    ds.at(r, ds.n_features - 1));
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw DataError("write failed: " + path);
}

Dataset take_rows(const Dataset& ds, std::span<const int> rows) {
  Dataset out;
  out.n_features = ds.n_features;
  out.n_classes = ds.n_classes;
  out.class_names = ds.class_names;
  out.values.reserve(rows.size() * static_cast<std::size_t>(ds.n_features));
  out.labels.reserve(rows.size());
  for (int r : rows) {
    auto row = ds.row(r);
    out.values.insert(out.values.end(), row.begin(), row.end());
    out.labels.push_back(ds.labels[r]);
  }
  if (ds.has_weights()) {
    double total = 0;
    for (int r : rows) total += ds.weights[r];
    if (total <= 0) throw DataError("selected rows carry zero total weight");
    out.weights.reserve(rows.size());
    for (int r : rows) out.weights.push_back(ds.weights[r] / total);
  }
  return out;
}

std::pair<Dataset, Dataset> train_test_split(const Dataset& ds,
                                             double test_fraction,
                                             std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw DataError("test_fraction must lie in (0, 1)");
  const int m = ds.n_rows();
  if (m < 2) throw DataError("need at least 2 samples to split");
  std::vector<int> order(m);
  for (int i = 0; i < m; ++i) order[i] = i;
  Rng rng(seed);
  shuffle_indices(order, rng);
  const int n_test = static_cast<int>(std::lround(test_fraction * m));
  std::vector<int> test_rows(order.begin(), order.begin() + n_test);
  std::vector<int> train_rows(order.begin() + n_test, order.end());
  std::sort(test_rows.begin(), test_rows.end());
  std::sort(train_rows.begin(), train_rows.end());
  return {take_rows(ds, train_rows), take_rows(ds, test_rows)};
}

std::vector<int> bootstrap_indices(int n_rows, std::uint64_t seed) {
  if (n_rows < 1) throw DataError("cannot bootstrap an empty dataset");
  Rng rng(seed);
  std::vector<int> rows(n_rows);
  for (int i = 0; i < n_rows; ++i)
    rows[i] =
        static_cast<int>(next_below(rng, static_cast<std::uint64_t>(n_rows)));
  return rows;
}

Dataset bootstrap_sample(const Dataset& ds, std::uint64_t seed) {
  return take_rows(ds, bootstrap_indices(ds.n_rows(), seed));
}

Dataset make_corners_synthetic(int samples_per_cell,
                               const std::array<double, 4>& t,
                               std::uint64_t seed) {
  const auto [t1, t2, t3, t4] = t;
  if (!(t1 < t2) || !(t3 < t4) || !(t1 > 0 && t4 < 1 && t2 < 1 && t3 > 0))
    throw DataError("corner thresholds must satisfy 0 < t1 < t2 < 1 and "
                    "0 < t3 < t4 < 1");
  if (samples_per_cell < 1) throw DataError("samples_per_cell must be >= 1");

  auto cell_of = [&](double x1, double x2) {
    int col = x1 < t1 ? 0 : (x1 < t2 ? 1 : 2);
    int row = x2 < t3 ? 0 : (x2 < t4 ? 1 : 2);
    return 3 * row + col;
  };
  auto label_of = [&](double x1, double x2) {
    bool corner_x1 = x1 < t1 || x1 >= t2;
    bool corner_x2 = x2 < t3 || x2 >= t4;
    return (corner_x1 && corner_x2) ? 1 : 0;
  };

  Dataset ds;
  ds.n_features = 2;
  ds.n_classes = 2;
  ds.class_names = {"0", "1"};
  Rng rng(seed);
  std::array<int, 9> cell_counts{};
  const int target = 9 * samples_per_cell;
  auto draw = [&] {
    double x1 = next_unit(rng), x2 = next_unit(rng);
    ds.values.push_back(x1);
    ds.values.push_back(x2);
    ds.labels.push_back(label_of(x1, x2));
    ++cell_counts[cell_of(x1, x2)];
  };
  for (int i = 0; i < target; ++i) draw();
  auto all_covered = [&] {
    return std::all_of(cell_counts.begin(), cell_counts.end(),
                       [](int c) { return c > 0; });
  };
  while (!all_covered()) draw();
  ds.validate();
  return ds;
}

}  // namespace tnt
