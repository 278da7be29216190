#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <zlib.h>

#include "seeded_rng.hpp"
#include "smb/problems.hpp"

namespace smb {

namespace {

class GzReader {
 public:
  explicit GzReader(const std::string& path) : path_(path), file_(gzopen(path.c_str(), "rb")) {
    if (!file_) throw Error(ErrorKind::kParse, path + ": cannot open");
  }
  ~GzReader() { gzclose(file_); }
  GzReader(const GzReader&) = delete;
  GzReader& operator=(const GzReader&) = delete;

  void read(void* dst, std::size_t n) {
    auto* out = static_cast<unsigned char*>(dst);
    while (n > 0) {
      const unsigned chunk = static_cast<unsigned>(std::min<std::size_t>(n, 1u << 30));
      const int got = gzread(file_, out, chunk);
      if (got <= 0) {
        throw Error(ErrorKind::kParse, path_ + ": truncated at byte " + std::to_string(offset_));
      }
      out += got;
      n -= static_cast<std::size_t>(got);
      offset_ += static_cast<std::size_t>(got);
    }
  }

  std::uint32_t read_be32() {
    std::array<unsigned char, 4> b{};
    read(b.data(), b.size());
    return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | b[3];
  }

  std::size_t offset() const { return offset_; }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  gzFile file_;
  std::size_t offset_ = 0;
};

void check_magic(GzReader& in, std::uint32_t expected) {
  const std::uint32_t magic = in.read_be32();
  if (magic != expected) {
    std::ostringstream msg;
    msg << in.path() << ": bad magic 0x" << std::hex << magic << " at byte 0 (expected 0x" << expected << ")";
    throw Error(ErrorKind::kParse, msg.str());
  }
}

void finalize_labels(Dataset& ds) {
  const int max_label = ds.labels.empty() ? -1 : *std::max_element(ds.labels.begin(), ds.labels.end());
  ds.num_classes = max_label + 1;
  ds.train.resize(ds.rows());
  std::iota(ds.train.begin(), ds.train.end(), std::size_t{0});
  ds.test.clear();
}

// Integral labels; a {-1, +1} label set is mapped to {0, 1}.
std::vector<int> convert_labels(const std::vector<double>& raw, const std::string& where) {
  bool plus_minus = !raw.empty();
  for (double v : raw) {
    if (v != std::floor(v)) throw Error(ErrorKind::kParse, where + ": label " + std::to_string(v) + " is not integral");
    if (v != -1.0 && v != 1.0) plus_minus = false;
  }
  std::vector<int> out;
  out.reserve(raw.size());
  for (double v : raw) {
    if (plus_minus) {
      out.push_back(v > 0 ? 1 : 0);
    } else {
      if (v < 0) throw Error(ErrorKind::kParse, where + ": negative label " + std::to_string(v));
      out.push_back(static_cast<int>(v));
    }
  }
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no, const std::string& path) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  if (quoted) throw Error(ErrorKind::kParse, path + ":" + std::to_string(line_no) + ": unterminated quote");
  fields.push_back(std::move(cur));
  return fields;
}

double parse_number(const std::string& text, const std::string& where) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw Error(ErrorKind::kParse, where + ": '" + text + "' is not a number");
  }
  while (used < text.size() && std::isspace(static_cast<unsigned char>(text[used]))) ++used;
  if (used != text.size()) throw Error(ErrorKind::kParse, where + ": '" + text + "' is not a number");
  return v;
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
  GzReader images(images_path);
  check_magic(images, 0x00000803);
  const std::uint32_t n = images.read_be32();
  const std::uint32_t rows = images.read_be32();
  const std::uint32_t cols = images.read_be32();
  std::vector<unsigned char> pixels(static_cast<std::size_t>(n) * rows * cols);
  images.read(pixels.data(), pixels.size());

  GzReader labels(labels_path);
  check_magic(labels, 0x00000801);
  const std::uint32_t n_labels = labels.read_be32();
  if (n_labels != n) {
    throw Error(ErrorKind::kParse, labels_path + ": byte 4: " + std::to_string(n_labels) +
                                       " labels for " + std::to_string(n) + " images");
  }
  std::vector<unsigned char> raw_labels(n);
  labels.read(raw_labels.data(), raw_labels.size());

  Dataset ds;
  const std::size_t d = static_cast<std::size_t>(rows) * cols;
  ds.features.resize(n, static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) ds.features(i, j) = pixels[i * d + j] / 255.0;
  }
  ds.labels.assign(raw_labels.begin(), raw_labels.end());
  ds.normalization = "pixel/255";
  ds.feature_offset.assign(d, 0.0);
  ds.feature_scale.assign(d, 1.0 / 255.0);
  finalize_labels(ds);
  return ds;
}

Dataset load_csv(const std::string& path, const std::string& label_column) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kParse, path + ": cannot open");
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line != "\r") {
      header = split_csv_line(line, line_no, path);
      break;
    }
  }
  if (header.empty()) throw Error(ErrorKind::kParse, path + ": empty file, header row required");
  const auto label_it = std::find(header.begin(), header.end(), label_column);
  if (label_it == header.end()) {
    throw Error(ErrorKind::kParse, path + ":" + std::to_string(line_no) + ": no column named '" + label_column + "'");
  }
  const auto label_idx = static_cast<std::size_t>(label_it - header.begin());

  std::vector<double> values;
  std::vector<double> raw_labels;
  const std::size_t d = header.size() - 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line, line_no, path);
    const std::string where = path + ":" + std::to_string(line_no);
    if (fields.size() != header.size()) {
      throw Error(ErrorKind::kParse, where + ": expected " + std::to_string(header.size()) + " fields, got " +
                                         std::to_string(fields.size()));
    }
    for (std::size_t j = 0; j < fields.size(); ++j) {
      const double v = parse_number(fields[j], where);
      if (j == label_idx) {
        raw_labels.push_back(v);
      } else {
        values.push_back(v);
      }
    }
  }
  if (raw_labels.empty()) throw Error(ErrorKind::kParse, path + ": no data rows");

  Dataset ds;
  ds.features = Eigen::Map<RowMatrix>(values.data(), static_cast<Eigen::Index>(raw_labels.size()),
                                      static_cast<Eigen::Index>(d));
  ds.labels = convert_labels(raw_labels, path);
  finalize_labels(ds);
  return ds;
}

Dataset load_libsvm(const std::string& path, std::size_t dim) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kParse, path + ": cannot open");
  std::vector<std::vector<std::pair<std::size_t, double>>> rows;
  std::vector<double> raw_labels;
  std::size_t max_index = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream tokens(line);
    std::string tok;
    if (!(tokens >> tok)) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    raw_labels.push_back(parse_number(tok, where));
    auto& row = rows.emplace_back();
    while (tokens >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos) throw Error(ErrorKind::kParse, where + ": expected index:value, got '" + tok + "'");
      const double idx = parse_number(tok.substr(0, colon), where);
      if (idx < 1 || idx != std::floor(idx)) throw Error(ErrorKind::kParse, where + ": bad feature index '" + tok + "'");
      const auto i = static_cast<std::size_t>(idx);
      row.emplace_back(i - 1, parse_number(tok.substr(colon + 1), where));
      max_index = std::max(max_index, i);
    }
  }
  if (rows.empty()) throw Error(ErrorKind::kParse, path + ": no data rows");
  if (dim == 0) dim = max_index;
  if (max_index > dim) {
    throw Error(ErrorKind::kParse, path + ": feature index " + std::to_string(max_index) + " exceeds dimension " +
                                       std::to_string(dim));
  }

  Dataset ds;
  ds.features = RowMatrix::Zero(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (const auto& [j, v] : rows[r]) ds.features(r, j) = v;
  }
  ds.labels = convert_labels(raw_labels, path);
  finalize_labels(ds);
  return ds;
}

void take_subset(Dataset& ds, std::size_t n) {
  if (n == 0 || n >= ds.rows()) return;
  ds.features.conservativeResize(static_cast<Eigen::Index>(n), Eigen::NoChange);
  ds.labels.resize(n);
  finalize_labels(ds);
}

void split_train_test(Dataset& ds, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) {
    throw Error(ErrorKind::kConfig, "test_fraction: must lie in [0, 1)");
  }
  std::vector<std::size_t> order(ds.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  detail::SeededRng rng(seed, RngStream::kData, 1);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  const auto n_test = static_cast<std::size_t>(std::floor(test_fraction * static_cast<double>(order.size())));
  ds.train.assign(order.begin(), order.end() - static_cast<std::ptrdiff_t>(n_test));
  ds.test.assign(order.end() - static_cast<std::ptrdiff_t>(n_test), order.end());
  std::sort(ds.train.begin(), ds.train.end());
  std::sort(ds.test.begin(), ds.test.end());
}

void standardize(Dataset& ds) {
  const std::size_t d = ds.dim();
  if (ds.train.empty()) throw Error(ErrorKind::kPrecondition, "standardize needs a non-empty train split");
  ds.feature_offset.assign(d, 0.0);
  ds.feature_scale.assign(d, 1.0);
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0;
    for (std::size_t r : ds.train) mean += ds.features(r, j);
    mean /= static_cast<double>(ds.train.size());
    double var = 0.0;
    for (std::size_t r : ds.train) var += (ds.features(r, j) - mean) * (ds.features(r, j) - mean);
    var /= static_cast<double>(ds.train.size());
    const double sd = var > 0.0 ? std::sqrt(var) : 1.0;
    ds.feature_offset[j] = mean;
    ds.feature_scale[j] = 1.0 / sd;
    ds.features.col(static_cast<Eigen::Index>(j)).array() -= mean;
    ds.features.col(static_cast<Eigen::Index>(j)).array() /= sd;
  }
  ds.normalization = "standardize(train)";
}

Dataset make_synthetic_logistic(std::size_t n, std::size_t d, std::uint64_t seed, double max_scale) {
  detail::SeededRng rng(seed, RngStream::kData, 0);
  Eigen::VectorXd w_true(d);
  for (std::size_t j = 0; j < d; ++j) w_true[j] = rng.normal();
  std::vector<double> scales(d, 1.0);
  for (std::size_t j = 0; j < d; ++j) {
    scales[j] = d > 1 ? std::pow(max_scale, static_cast<double>(j) / static_cast<double>(d - 1)) : 1.0;
    w_true[j] /= scales[j];
  }
  Dataset ds;
  ds.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  ds.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double z = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      ds.features(i, j) = scales[j] * rng.normal();
      z += ds.features(i, j) * w_true[j];
    }
    const double p = 1.0 / (1.0 + std::exp(-2.0 * z));
    ds.labels[i] = rng.uniform() < p ? 1 : 0;
  }
  ds.normalization = "none";
  finalize_labels(ds);
  ds.num_classes = 2;
  return ds;
}

Dataset make_synthetic_blobs(std::size_t n, std::size_t d, int classes, std::uint64_t seed) {
  detail::SeededRng rng(seed, RngStream::kData, 2);
  RowMatrix centers(classes, static_cast<Eigen::Index>(d));
  for (Eigen::Index c = 0; c < centers.rows(); ++c) {
    for (Eigen::Index j = 0; j < centers.cols(); ++j) centers(c, j) = 2.0 * rng.normal();
  }
  Dataset ds;
  ds.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  ds.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int c = static_cast<int>(i % static_cast<std::size_t>(classes));
    ds.labels[i] = c;
    for (std::size_t j = 0; j < d; ++j) ds.features(i, j) = centers(c, j) + rng.normal();
  }
  finalize_labels(ds);
  ds.num_classes = classes;
  return ds;
}

double accuracy(const Classifier& model, const ParamGroups& x, std::span<const std::size_t> rows) {
  if (rows.empty()) throw Error(ErrorKind::kPrecondition, "accuracy of an empty split");
  const std::vector<int> pred = model.predict(x, rows);
  const Dataset& ds = model.dataset();
  std::size_t correct = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) correct += pred[i] == ds.labels[rows[i]] ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(rows.size());
}

}  // namespace smb
