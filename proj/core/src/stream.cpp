#include "dupsketch/stream.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <unordered_map>

namespace dupsketch {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

[[noreturn]] void parse_fail(std::size_t line_no, const std::string& what) {
  throw Error("line " + std::to_string(line_no) + ": " + what);
}

double parse_double(std::string_view field, std::size_t line_no) {
  // std::from_chars for double is available in libstdc++ 11.
  double value = 0.0;
  const auto* first = field.data();
  const auto* last = field.data() + field.size();
  if (!field.empty() && field.front() == '+') ++first;
  const auto result = std::from_chars(first, last, value);
  if (result.ec != std::errc() || result.ptr != last) {
    parse_fail(line_no, "bad number '" + std::string(field) + "'");
  }
  if (!std::isfinite(value)) parse_fail(line_no, "non-finite entry");
  return value;
}

std::int64_t parse_int(std::string_view field, std::size_t line_no) {
  std::int64_t value = 0;
  const auto* first = field.data();
  const auto* last = field.data() + field.size();
  if (!field.empty() && field.front() == '+') ++first;
  const auto result = std::from_chars(first, last, value);
  if (result.ec != std::errc() || result.ptr != last) {
    parse_fail(line_no, "bad integer '" + std::string(field) + "'");
  }
  return value;
}

bool skip_line(std::string_view line) {
  const auto t = trim(line);
  return t.empty() || t.front() == '#';
}

}  // namespace

bool rows_bitwise_equal(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) return false;
  // Exact comparison; +0.0 and -0.0 are treated as the same canonical value.
  for (Eigen::Index j = 0; j < a.size(); ++j) {
    if (!(a[j] == b[j])) return false;
  }
  return true;
}

void check_tag_consistency(const std::vector<TaggedRow>& stream) {
  std::unordered_map<Tag, std::size_t> first;
  for (std::size_t i = 0; i < stream.size(); ++i) {
    const auto [it, inserted] = first.emplace(stream[i].tag, i);
    if (!inserted && !rows_bitwise_equal(stream[it->second].row, stream[i].row)) {
      throw Error("tag " + std::to_string(stream[i].tag) + " at position " +
                  std::to_string(i) + " carries a different row than at position " +
                  std::to_string(it->second));
    }
  }
}

Matrix dedup(const std::vector<TaggedRow>& stream, Eigen::Index dim) {
  std::unordered_map<Tag, std::size_t> first;
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < stream.size(); ++i) {
    if (stream[i].row.size() != dim) {
      throw Error("dedup: row " + std::to_string(i) + " has dimension " +
                  std::to_string(stream[i].row.size()) + ", expected " + std::to_string(dim));
    }
    const auto [it, inserted] = first.emplace(stream[i].tag, i);
    if (inserted) {
      order.push_back(i);
    } else if (!rows_bitwise_equal(stream[it->second].row, stream[i].row)) {
      throw Error("dedup: tag " + std::to_string(stream[i].tag) + " at position " +
                  std::to_string(i) + " carries a different row than at position " +
                  std::to_string(it->second));
    }
  }
  Matrix out(static_cast<Eigen::Index>(order.size()), dim);
  for (std::size_t r = 0; r < order.size(); ++r) {
    out.row(static_cast<Eigen::Index>(r)) = stream[order[r]].row.transpose();
  }
  return out;
}

std::vector<Tag> dedup_tags(const std::vector<TaggedRow>& stream) {
  std::unordered_map<Tag, bool> seen;
  std::vector<Tag> tags;
  for (const auto& e : stream) {
    if (seen.emplace(e.tag, true).second) tags.push_back(e.tag);
  }
  return tags;
}

std::vector<std::pair<std::vector<std::int64_t>, std::int64_t>> turnstile_frequencies(
    const std::vector<TurnstileUpdate>& stream) {
  std::map<std::vector<std::int64_t>, std::int64_t> freq;
  for (std::size_t i = 0; i < stream.size(); ++i) {
    const auto& u = stream[i];
    if (u.sign != 1 && u.sign != -1) throw Error("turnstile update with sign not in {+1,-1}");
    auto& f = freq[u.row];
    f += u.sign;
    if (f < 0) {
      throw Error("dedup_turnstile: frequency of a row became negative at update " +
                  std::to_string(i));
    }
  }
  return {freq.begin(), freq.end()};
}

Matrix dedup_turnstile(const std::vector<TurnstileUpdate>& stream, Eigen::Index dim) {
  const auto freq = turnstile_frequencies(stream);
  std::vector<const std::vector<std::int64_t>*> live;
  for (const auto& [row, f] : freq) {
    if (static_cast<Eigen::Index>(row.size()) != dim) {
      throw Error("dedup_turnstile: row dimension mismatch");
    }
    if (f > 0) live.push_back(&row);
  }
  Matrix out(static_cast<Eigen::Index>(live.size()), dim);
  for (std::size_t r = 0; r < live.size(); ++r) {
    for (Eigen::Index j = 0; j < dim; ++j) {
      out(static_cast<Eigen::Index>(r), j) = static_cast<double>((*live[r])[static_cast<std::size_t>(j)]);
    }
  }
  return out;
}

std::vector<TaggedRow> read_tagged_csv(std::istream& in) {
  std::vector<TaggedRow> stream;
  std::string line;
  std::size_t line_no = 0;
  Eigen::Index dim = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (skip_line(line)) continue;
    const auto fields = split_fields(line);
    if (fields.size() < 2) parse_fail(line_no, "expected tag and at least one value");
    const auto tag = parse_int(fields[0], line_no);
    if (tag < 1) parse_fail(line_no, "tags must be positive integers");
    TaggedRow entry;
    entry.tag = static_cast<Tag>(tag);
    entry.row.resize(static_cast<Eigen::Index>(fields.size() - 1));
    for (std::size_t j = 1; j < fields.size(); ++j) {
      entry.row[static_cast<Eigen::Index>(j - 1)] = parse_double(fields[j], line_no);
    }
    if (dim < 0) dim = entry.row.size();
    if (entry.row.size() != dim) parse_fail(line_no, "inconsistent row length");
    stream.push_back(std::move(entry));
  }
  return stream;
}

std::vector<TurnstileUpdate> read_turnstile_csv(std::istream& in) {
  std::vector<TurnstileUpdate> stream;
  std::string line;
  std::size_t line_no = 0;
  std::size_t dim = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (skip_line(line)) continue;
    const auto fields = split_fields(line);
    if (fields.size() < 2) parse_fail(line_no, "expected sign and at least one value");
    TurnstileUpdate u;
    if (fields[0] == "+") {
      u.sign = 1;
    } else if (fields[0] == "-") {
      u.sign = -1;
    } else {
      parse_fail(line_no, "sign must be '+' or '-'");
    }
    for (std::size_t j = 1; j < fields.size(); ++j) u.row.push_back(parse_int(fields[j], line_no));
    if (dim == 0) dim = u.row.size();
    if (u.row.size() != dim) parse_fail(line_no, "inconsistent row length");
    stream.push_back(std::move(u));
  }
  return stream;
}

std::vector<TaggedRow> read_tagged_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return read_tagged_csv(in);
}

std::vector<TurnstileUpdate> read_turnstile_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return read_turnstile_csv(in);
}

void write_tagged_csv(std::ostream& out, const std::vector<TaggedRow>& stream) {
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& e : stream) {
    out << e.tag;
    for (Eigen::Index j = 0; j < e.row.size(); ++j) out << ',' << e.row[j];
    out << '\n';
  }
}

void write_turnstile_csv(std::ostream& out, const std::vector<TurnstileUpdate>& stream) {
  for (const auto& u : stream) {
    out << (u.sign > 0 ? '+' : '-');
    for (const auto v : u.row) out << ',' << v;
    out << '\n';
  }
}

Eigen::Index stream_dimension(const std::vector<TaggedRow>& stream) {
  if (stream.empty()) return 0;
  const Eigen::Index d = stream.front().row.size();
  for (const auto& e : stream) {
    if (e.row.size() != d) throw Error("stream rows have inconsistent dimension");
  }
  return d;
}

Eigen::Index stream_dimension(const std::vector<TurnstileUpdate>& stream) {
  if (stream.empty()) return 0;
  const std::size_t d = stream.front().row.size();
  for (const auto& u : stream) {
    if (u.row.size() != d) throw Error("stream rows have inconsistent dimension");
  }
  return static_cast<Eigen::Index>(d);
}

std::vector<TaggedRow> tag_rows(const Matrix& a) {
  std::vector<TaggedRow> out;
  out.reserve(static_cast<std::size_t>(a.rows()));
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    out.push_back({static_cast<Tag>(i + 1), a.row(i).transpose()});
  }
  return out;
}

}  // namespace dupsketch
