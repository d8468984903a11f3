#include "mpgd/dataset.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "mpgd/rng.hpp"

namespace mpgd {

namespace {

[[noreturn]] void parse_fail(const std::string& origin, std::size_t line, std::size_t col,
                             const std::string& what) {
  std::ostringstream os;
  os << origin << ":" << line << ":" << col << ": " << what;
  throw std::runtime_error(os.str());
}

std::vector<double> parse_line(const std::string& line, const std::string& origin,
                               std::size_t line_no) {
  const bool comma = line.find(',') != std::string::npos;
  std::vector<double> fields;
  std::size_t pos = 0, col = 0;
  while (pos <= line.size()) {
    std::size_t end;
    if (comma) {
      end = line.find(',', pos);
      if (end == std::string::npos) end = line.size();
    } else {
      while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
      if (pos == line.size()) break;
      end = pos;
      while (end < line.size() && !std::isspace(static_cast<unsigned char>(line[end]))) ++end;
    }
    ++col;
    const std::string tok = line.substr(pos, end - pos);
    if (tok.empty() || tok.find_first_not_of(" \t\r") == std::string::npos) {
      if (comma) parse_fail(origin, line_no, col, "empty field");
      break;
    }
    char* tail = nullptr;
    const double v = std::strtod(tok.c_str(), &tail);
    while (tail && *tail != '\0' && std::isspace(static_cast<unsigned char>(*tail))) ++tail;
    if (!tail || *tail != '\0' || !std::isfinite(v))
      parse_fail(origin, line_no, col, "not a finite number: '" + tok + "'");
    fields.push_back(v);
    pos = end + (comma ? 1 : 0);
    if (!comma) pos = end;
    if (comma && end == line.size()) break;
  }
  return fields;
}

}  // namespace

Dataset ingest_csv_text(const std::string& text, std::size_t target_column,
                        const std::string& origin) {
  Dataset out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0, width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fields = parse_line(line, origin, line_no);
    if (width == 0) {
      width = fields.size();
      if (width < 2) parse_fail(origin, line_no, 1, "need at least one feature and a target");
      if (target_column >= width)
        parse_fail(origin, line_no, 1, "target column out of range");
      out.n_features = width - 1;
    } else if (fields.size() != width) {
      parse_fail(origin, line_no, fields.size(),
                 "expected " + std::to_string(width) + " columns, found " +
                     std::to_string(fields.size()));
    }
    out.targets.push_back(fields[target_column]);
    fields.erase(fields.begin() + static_cast<long>(target_column));
    out.rows.push_back(std::move(fields));
  }
  if (out.rows.empty()) throw std::runtime_error(origin + ": no data rows");
  return out;
}

Dataset ingest_csv(const std::string& path, std::size_t target_column) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return ingest_csv_text(buf.str(), target_column, path);
}

StandardizedSplit split_standardize(const Dataset& data, std::size_t train_count,
                                    std::size_t test_count, std::uint64_t seed) {
  if (train_count < 2) throw std::invalid_argument("split: need at least two training rows");
  if (train_count + test_count > data.size())
    throw std::invalid_argument("split: train + test exceeds dataset size");

  std::vector<std::size_t> idx(data.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Rng rng(seed);
  for (std::size_t i = idx.size(); i > 1; --i)
    std::swap(idx[i - 1], idx[rng.next_u64() % i]);

  StandardizedSplit out;
  const std::size_t p = data.n_features;
  out.feature_mean.assign(p, 0.0);
  out.feature_sd.assign(p, 0.0);
  for (std::size_t r = 0; r < train_count; ++r) {
    const auto& row = data.rows[idx[r]];
    for (std::size_t j = 0; j < p; ++j) out.feature_mean[j] += row[j];
    out.target_mean += data.targets[idx[r]];
  }
  const double n = static_cast<double>(train_count);
  for (auto& m : out.feature_mean) m /= n;
  out.target_mean /= n;
  double ty = 0.0;
  for (std::size_t r = 0; r < train_count; ++r) {
    const auto& row = data.rows[idx[r]];
    for (std::size_t j = 0; j < p; ++j) {
      const double d = row[j] - out.feature_mean[j];
      out.feature_sd[j] += d * d;
    }
    const double dy = data.targets[idx[r]] - out.target_mean;
    ty += dy * dy;
  }
  for (std::size_t j = 0; j < p; ++j) {
    out.feature_sd[j] = std::sqrt(out.feature_sd[j] / (n - 1.0));
    if (out.feature_sd[j] == 0.0)
      throw std::runtime_error("split: feature " + std::to_string(j) + " is constant on the training set");
  }
  out.target_sd = std::sqrt(ty / (n - 1.0));
  if (out.target_sd == 0.0) throw std::runtime_error("split: target is constant on the training set");

  auto take = [&](std::size_t from, std::size_t count) {
    Dataset d;
    d.n_features = p;
    d.rows.reserve(count);
    d.targets.reserve(count);
    for (std::size_t r = from; r < from + count; ++r) {
      auto row = data.rows[idx[r]];
      for (std::size_t j = 0; j < p; ++j)
        row[j] = (row[j] - out.feature_mean[j]) / out.feature_sd[j];
      d.rows.push_back(std::move(row));
      d.targets.push_back((data.targets[idx[r]] - out.target_mean) / out.target_sd);
    }
    return d;
  };
  out.train = take(0, train_count);
  out.test = take(train_count, test_count);
  return out;
}

Dataset synthetic_airfoil_like(std::size_t n_rows, std::uint64_t seed) {
  if (n_rows == 0) throw std::invalid_argument("synthetic dataset: n_rows must be positive");
  static const double kChords[] = {0.0254, 0.0508, 0.1016, 0.1524, 0.2286, 0.3048};
  static const double kSpeeds[] = {31.7, 39.6, 55.5, 71.3};
  Rng rng(seed);
  Dataset out;
  out.n_features = 5;
  out.rows.reserve(n_rows);
  out.targets.reserve(n_rows);
  for (std::size_t i = 0; i < n_rows; ++i) {
    const double freq = 200.0 * std::pow(100.0, rng.uniform01());
    const double angle = 22.2 * std::pow(rng.uniform01(), 1.5);
    const double chord = kChords[rng.next_u64() % 6];
    const double speed = kSpeeds[rng.next_u64() % 4];
    const double thickness = chord * (0.002 + 0.02 * std::pow(angle / 22.2, 2)) *
                             std::exp(0.25 * rng.normal());
    const double strouhal = freq * thickness / speed;
    const double response = 127.0
        - 7.5 * std::pow(std::log10(strouhal) + 0.9, 2)
        + 14.0 * std::log10(speed / 50.0)
        - 0.32 * angle
        + (0.9 + 0.11 * angle) * rng.normal();
    out.rows.push_back({freq, angle, chord, speed, thickness});
    out.targets.push_back(response);
  }
  return out;
}

}  // namespace mpgd
