#include "equibound/data_model.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "equibound/errors.hpp"
#include "equibound/rng.hpp"

namespace equibound {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == delim) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_real(const std::string& s, std::size_t line_no, const std::string& col) {
  const std::string v = trim(s);
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size())
    throw SchemaError("line " + std::to_string(line_no) + ": column '" + col +
                      "' is not a real number: '" + v + "'");
  return out;
}

int parse_int(const std::string& s, std::size_t line_no, const std::string& col) {
  const std::string v = trim(s);
  int out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size())
    throw SchemaError("line " + std::to_string(line_no) + ": column '" + col +
                      "' is not an integer: '" + v + "'");
  return out;
}

}  // namespace

void AuditFrame::validate() const {
  bool any_pre_event = false;
  bool any_post = false;
  for (std::size_t i = 0; i < n_; ++i) {
    if (d_[i] != 0 && d_[i] != 1)
      throw SchemaError("record " + std::to_string(i) + ": d must be 0 or 1");
    if (t_[i] != 0 && t_[i] != 1)
      throw SchemaError("record " + std::to_string(i) + ": t must be 0 or 1");
    if (y_[i] != -1 && y_[i] != 0 && y_[i] != 1)
      throw SchemaError("record " + std::to_string(i) + ": y must be 0, 1 or absent");
    if (g_[i] < 0)
      throw SchemaError("record " + std::to_string(i) + ": group label must be >= 0");
    if (d_[i] == 0) {
      if (t_[i] != 0)
        throw InvariantError("record " + std::to_string(i) +
                             ": treated in the pre-availability era (d=0, t=1)");
      if (y_[i] < 0)
        throw InvariantError("record " + std::to_string(i) +
                             ": missing outcome in the pre-availability era");
      if (y_[i] == 1) any_pre_event = true;
    } else {
      if (y_[i] >= 0)
        throw InvariantError("record " + std::to_string(i) +
                             ": outcome present in the post-availability era");
      any_post = true;
    }
  }
  if (!any_pre_event)
    throw EmptyStratumError("no (d=0, y=1) record; P(Y=1, D=0) would be zero");
  if (!any_post) throw EmptyStratumError("no post-availability (d=1) record");
}

AuditFrame AuditFrame::from_records(const std::vector<UnitRecord>& records) {
  AuditFrame f;
  f.n_ = records.size();
  f.dim_ = records.empty() ? 0 : records.front().x.size();
  f.x_.resize(f.n_ * f.dim_);
  f.d_.resize(f.n_);
  f.t_.resize(f.n_);
  f.y_.resize(f.n_);
  f.g_.resize(f.n_);
  for (std::size_t i = 0; i < f.n_; ++i) {
    const UnitRecord& r = records[i];
    if (r.x.size() != f.dim_)
      throw SchemaError("record " + std::to_string(i) + ": covariate dimension " +
                        std::to_string(r.x.size()) + " != " + std::to_string(f.dim_));
    for (std::size_t j = 0; j < f.dim_; ++j) f.x_[j * f.n_ + i] = r.x[j];
    f.d_[i] = static_cast<std::int8_t>(r.d);
    f.t_[i] = static_cast<std::int8_t>(r.t);
    f.y_[i] = r.y ? static_cast<std::int8_t>(*r.y) : std::int8_t{-1};
    f.g_[i] = r.g;
  }
  f.validate();
  for (std::size_t i = 0; i < f.n_; ++i) {
    f.groups_.insert(f.g_[i]);
    if (f.d_[i] == 0) ++f.n_pre_;
  }
  return f;
}

AuditFrame AuditFrame::from_columns(std::size_t dim, std::vector<double> x_colmajor,
                                    std::vector<std::int8_t> d, std::vector<std::int8_t> t,
                                    std::vector<std::int8_t> y, std::vector<std::int32_t> g) {
  AuditFrame f;
  f.n_ = d.size();
  f.dim_ = dim;
  if (x_colmajor.size() != f.n_ * dim || t.size() != f.n_ || y.size() != f.n_ ||
      g.size() != f.n_)
    throw SchemaError("column length mismatch");
  f.x_ = std::move(x_colmajor);
  f.d_ = std::move(d);
  f.t_ = std::move(t);
  f.y_ = std::move(y);
  f.g_ = std::move(g);
  f.validate();
  for (std::size_t i = 0; i < f.n_; ++i) {
    f.groups_.insert(f.g_[i]);
    if (f.d_[i] == 0) ++f.n_pre_;
  }
  return f;
}

std::vector<double> AuditFrame::x_row(std::size_t i) const {
  std::vector<double> row(dim_);
  for (std::size_t j = 0; j < dim_; ++j) row[j] = x_[j * n_ + i];
  return row;
}

AuditFrame load_frame(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open file: " + path.string());

  std::string header;
  if (!std::getline(in, header)) throw SchemaError("empty file: " + path.string());
  std::vector<std::string> names = split(header, schema.delimiter);
  for (auto& n : names) n = trim(n);

  auto find_col = [&](const std::string& name) {
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end())
      throw SchemaError("missing column '" + name + "' in " + path.string());
    return static_cast<std::size_t>(it - names.begin());
  };
  const std::size_t ci_d = find_col(schema.d);
  const std::size_t ci_t = find_col(schema.t);
  const std::size_t ci_y = find_col(schema.y);
  const std::size_t ci_g = find_col(schema.g);

  // Covariate columns must be x1..xD, contiguous from 1.
  std::vector<std::size_t> x_cols;
  for (std::size_t j = 1;; ++j) {
    auto it = std::find(names.begin(), names.end(), schema.x_prefix + std::to_string(j));
    if (it == names.end()) break;
    x_cols.push_back(static_cast<std::size_t>(it - names.begin()));
  }
  if (x_cols.empty())
    throw SchemaError("no covariate columns '" + schema.x_prefix + "1..' found");
  // a covariate column past a gap would be silently dropped; refuse instead
  for (const std::string& name : names) {
    if (name.size() <= schema.x_prefix.size() ||
        name.compare(0, schema.x_prefix.size(), schema.x_prefix) != 0)
      continue;
    const std::string tail = name.substr(schema.x_prefix.size());
    if (!tail.empty() && std::all_of(tail.begin(), tail.end(),
                                     [](unsigned char c) { return std::isdigit(c); })) {
      const std::size_t idx = std::stoul(tail);
      if (idx == 0 || idx > x_cols.size())
        throw SchemaError("covariate columns must be " + schema.x_prefix + "1.." +
                          schema.x_prefix + std::to_string(x_cols.size()) +
                          " with no gaps; found '" + name + "'");
    }
  }

  std::vector<UnitRecord> records;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<std::string> fields = split(line, schema.delimiter);
    if (fields.size() != names.size())
      throw SchemaError("line " + std::to_string(line_no) + ": expected " +
                        std::to_string(names.size()) + " fields, got " +
                        std::to_string(fields.size()));
    UnitRecord r;
    r.x.resize(x_cols.size());
    for (std::size_t j = 0; j < x_cols.size(); ++j)
      r.x[j] = parse_real(fields[x_cols[j]], line_no, schema.x_prefix + std::to_string(j + 1));
    r.d = parse_int(fields[ci_d], line_no, schema.d);
    r.t = parse_int(fields[ci_t], line_no, schema.t);
    r.g = parse_int(fields[ci_g], line_no, schema.g);
    const std::string ys = trim(fields[ci_y]);
    if (!ys.empty()) r.y = parse_int(ys, line_no, schema.y);
    records.push_back(std::move(r));
  }
  return AuditFrame::from_records(records);
}

void save_frame(const AuditFrame& frame, const std::filesystem::path& path,
                const CsvSchema& schema) {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write file: " + path.string());
  const char sep = schema.delimiter;
  for (std::size_t j = 1; j <= frame.dim(); ++j)
    out << schema.x_prefix << j << sep;
  out << schema.d << sep << schema.t << sep << schema.y << sep << schema.g << '\n';
  char buf[64];
  for (std::size_t i = 0; i < frame.size(); ++i) {
    for (std::size_t j = 0; j < frame.dim(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", frame.x(i, j));
      out << buf << sep;
    }
    out << frame.d(i) << sep << frame.t(i) << sep;
    if (frame.d(i) == 0) out << frame.y(i);
    out << sep << frame.group(i) << '\n';
  }
}

AuditFrame slice_group(const AuditFrame& frame, int g) {
  if (!frame.groups().contains(g))
    throw EmptyStratumError("group " + std::to_string(g) + " not present in frame");
  std::vector<std::int8_t> d, t, y;
  std::vector<std::int32_t> gg;
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < frame.size(); ++i)
    if (frame.group(i) == g) keep.push_back(i);
  const std::size_t m = keep.size();
  std::vector<double> x(m * frame.dim());
  for (std::size_t j = 0; j < frame.dim(); ++j)
    for (std::size_t r = 0; r < m; ++r) x[j * m + r] = frame.x(keep[r], j);
  d.reserve(m); t.reserve(m); y.reserve(m); gg.reserve(m);
  for (std::size_t r : keep) {
    d.push_back(static_cast<std::int8_t>(frame.d(r)));
    t.push_back(static_cast<std::int8_t>(frame.t(r)));
    y.push_back(frame.d(r) == 0 ? static_cast<std::int8_t>(frame.y(r)) : std::int8_t{-1});
    gg.push_back(g);
  }
  try {
    return AuditFrame::from_columns(frame.dim(), std::move(x), std::move(d), std::move(t),
                                    std::move(y), std::move(gg));
  } catch (const EmptyStratumError& e) {
    throw EmptyStratumError("group " + std::to_string(g) + ": " + e.what());
  }
}

FoldAssignment make_folds(const AuditFrame& frame, int k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("fold count must be >= 2");
  std::vector<std::uint32_t> strata[2];
  for (std::size_t i = 0; i < frame.size(); ++i)
    strata[frame.d(i)].push_back(static_cast<std::uint32_t>(i));
  for (int s = 0; s < 2; ++s)
    if (strata[s].size() < static_cast<std::size_t>(k))
      throw TooFewRecords("era stratum d=" + std::to_string(s) + " has " +
                          std::to_string(strata[s].size()) + " records, need >= " +
                          std::to_string(k));

  FoldAssignment fa;
  fa.k = k;
  fa.seed = seed;
  fa.fold.assign(frame.size(), -1);
  for (int s = 0; s < 2; ++s) {
    auto& idx = strata[s];
    rng::Stream rs(seed, static_cast<std::uint64_t>(s));
    for (std::size_t i = idx.size(); i > 1; --i)
      std::swap(idx[i - 1], idx[rs.below(i)]);
    for (std::size_t pos = 0; pos < idx.size(); ++pos)
      fa.fold[idx[pos]] = static_cast<std::int32_t>(pos % static_cast<std::size_t>(k));
  }
  return fa;
}

}  // namespace equibound
