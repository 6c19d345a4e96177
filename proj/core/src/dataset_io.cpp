#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include "cseal/data.hpp"

namespace cseal::data {
namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::string format_real(double v) {
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

}  // namespace

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  const std::size_t d = dataset.num_features();
  const std::size_t k = dataset.num_classes();
  for (std::size_t j = 0; j < d; ++j) out << 'f' << j << ',';
  for (std::size_t j = 0; j < k; ++j) out << 'y' << j << ',';
  out << "split\n";
  std::string line;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    line.clear();
    for (std::size_t j = 0; j < d; ++j) {
      line += format_real(dataset.features.at(i, j));
      line += ',';
    }
    for (std::size_t j = 0; j < k; ++j) {
      line += dataset.labels.at(i, j) > 0.5 ? '1' : '0';
      line += ',';
    }
    line += to_string(dataset.split[i]);
    line += '\n';
    out << line;
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.empty()) throw DatasetParseError(0, "no header");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const std::vector<std::string_view> header = split_commas(line);
  std::size_t d = 0;
  std::size_t k = 0;
  for (std::size_t j = 0; j < header.size(); ++j) {
    const std::string_view h = header[j];
    const std::string expect_f = "f" + std::to_string(d);
    const std::string expect_y = "y" + std::to_string(k);
    if (k == 0 && h == expect_f) {
      ++d;
    } else if (h == expect_y) {
      ++k;
    } else if (h == "split" && j + 1 == header.size()) {
      break;
    } else {
      throw DatasetParseError(1, "unexpected header column '" + std::string(h) + "'");
    }
  }
  if (header.back() != "split" || d == 0 || k == 0) {
    throw DatasetParseError(1, "header must be f0..f{d-1}, y0..y{K-1}, split");
  }

  std::vector<double> features;
  std::vector<double> labels;
  std::vector<Split> splits;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string_view> fields = split_commas(line);
    if (fields.size() != d + k + 1) {
      throw DatasetParseError(line_no, "expected " + std::to_string(d + k + 1) + " fields, found " +
                                           std::to_string(fields.size()));
    }
    for (std::size_t j = 0; j < d; ++j) {
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(fields[j].data(), fields[j].data() + fields[j].size(), v);
      if (ec != std::errc() || ptr != fields[j].data() + fields[j].size()) {
        throw DatasetParseError(line_no, "malformed feature value '" + std::string(fields[j]) + "'");
      }
      features.push_back(v);
    }
    for (std::size_t j = 0; j < k; ++j) {
      const std::string_view f = fields[d + j];
      if (f != "0" && f != "1") {
        throw DatasetParseError(line_no, "non-binary label '" + std::string(f) + "'");
      }
      labels.push_back(f == "1" ? 1.0 : 0.0);
    }
    try {
      splits.push_back(parse_split(fields.back()));
    } catch (const std::invalid_argument& e) {
      throw DatasetParseError(line_no, e.what());
    }
  }

  Dataset ds;
  const std::size_t n = splits.size();
  ds.features = Tensor({n, d}, std::move(features));
  ds.labels = Tensor({n, k}, std::move(labels));
  ds.split = std::move(splits);
  return ds;
}

}  // namespace cseal::data
