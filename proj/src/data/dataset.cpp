// Copyright (c) 2026 the mptp authors
// SPDX-License-Identifier: Apache-2.0
#include "mptp/data/dataset.hpp"

#include <fstream>
#include <stdexcept>

#include "mptp/core/rng.hpp"
#include "mptp/data/image_io.hpp"

namespace mptp::data {

namespace {

std::string dirname_of(const std::string& path) {
  const size_t slash = path.find_last_of('/');
  return slash == std::string::npos ? std::string(".") : path.substr(0, slash);
}

std::string resolve(const std::string& base_dir, const std::string& p) {
  if (p.empty() || p.front() == '/') return p;
  return base_dir + "/" + p;
}

// One CSV record honoring quoted fields; returns false at end of input.
bool read_record(std::istream& in, std::vector<std::string>& fields) {
  fields.clear();
  std::string field;
  bool in_quotes = false, any = false;
  int c;
  while ((c = in.get()) != EOF) {
    any = true;
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          field.push_back('"');
          in.get();
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(static_cast<char>(c));
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      fields.push_back(field);
      field.clear();
    } else if (c == '\n') {
      break;
    } else if (c != '\r') {
      field.push_back(static_cast<char>(c));
    }
  }
  if (!any) return false;
  fields.push_back(field);
  return true;
}

std::string trimmed(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

}  // namespace

Manifest load_manifest(const std::string& path, bool require_mask) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("manifest " + path + ": cannot open");
  const std::string base = dirname_of(path);
  std::vector<std::string> fields;
  if (!read_record(in, fields)) throw std::runtime_error("manifest " + path + ": empty file");
  if (fields.size() != 3 || trimmed(fields[0]) != "image_path" || trimmed(fields[1]) != "caption" ||
      trimmed(fields[2]) != "mask_path")
    throw std::runtime_error("manifest " + path + ": header must be exactly 'image_path,caption,mask_path'");

  Manifest m;
  m.source_path = path;
  std::vector<std::string> problems;
  size_t line = 1;
  while (read_record(in, fields)) {
    ++line;
    if (fields.size() == 1 && trimmed(fields[0]).empty()) continue;  // blank line
    if (fields.size() != 3) {
      problems.push_back("line " + std::to_string(line) + ": expected 3 fields, got " +
                         std::to_string(fields.size()));
      continue;
    }
    ManifestRow row;
    row.image_path = resolve(base, trimmed(fields[0]));
    row.caption = fields[1];
    row.mask_path = trimmed(fields[2]).empty() ? std::string() : resolve(base, trimmed(fields[2]));
    if (row.image_path.empty()) problems.push_back("line " + std::to_string(line) + ": empty image_path");
    if (trimmed(row.caption).empty()) problems.push_back("line " + std::to_string(line) + ": empty caption");
    if (require_mask && row.mask_path.empty())
      problems.push_back("line " + std::to_string(line) + ": mask_path required but missing");
    m.rows.push_back(std::move(row));
  }
  if (!problems.empty()) {
    std::string msg = "manifest " + path + " has invalid rows:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw std::runtime_error(msg);
  }
  if (m.rows.empty()) throw std::runtime_error("manifest " + path + ": no data rows");
  return m;
}

Sample load_sample(const ManifestRow& row, int64_t out_h, int64_t out_w) {
  Sample s;
  s.image = image_to_tensor(read_image(row.image_path), out_h, out_w);
  s.caption = row.caption;
  if (!row.mask_path.empty()) {
    s.mask = mask_to_tensor(read_image(row.mask_path), out_h, out_w);
    s.has_mask = true;
  }
  return s;
}

std::vector<std::vector<size_t>> batch_indices(size_t n_rows, size_t batch_size, uint64_t seed, int64_t epoch,
                                               bool drop_last) {
  if (batch_size == 0) throw std::invalid_argument("batch_size must be positive");
  std::vector<size_t> order(n_rows);
  for (size_t i = 0; i < n_rows; ++i) order[i] = i;
  Rng rng(hash_combine(seed, static_cast<uint64_t>(epoch)));
  for (size_t i = n_rows; i > 1; --i) {  // Fisher–Yates
    const size_t j = static_cast<size_t>(rng.uniform_int(static_cast<int64_t>(i)));
    std::swap(order[i - 1], order[j]);
  }
  std::vector<std::vector<size_t>> batches;
  for (size_t at = 0; at < n_rows; at += batch_size) {
    const size_t take = std::min(batch_size, n_rows - at);
    if (take < batch_size && drop_last) break;
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(at),
                         order.begin() + static_cast<std::ptrdiff_t>(at + take));
  }
  return batches;
}

}  // namespace mptp::data
