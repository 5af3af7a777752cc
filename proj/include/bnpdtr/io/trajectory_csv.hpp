#ifndef BNPDTR_IO_TRAJECTORY_CSV_HPP
#define BNPDTR_IO_TRAJECTORY_CSV_HPP

#include <charconv>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "bnpdtr/core/types.hpp"

// Long-format trajectory table:
//   subject_id,visit_index,X_1..X_p,A,delta,Y,carried_forward
// One baseline row (visit_index 0, empty A and delta) per subject.

namespace bnpdtr::io {

class CsvError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);  // shortest round-trip form
  return std::string(buf, res.ptr);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

inline double parse_double(const std::string& s, std::size_t line_no) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw CsvError("trajectory csv line " + std::to_string(line_no) + ": bad number '" + s + "'");
  return v;
}

}  // namespace detail

inline std::vector<std::string> trajectory_csv_header(std::size_t p) {
  std::vector<std::string> h{"subject_id", "visit_index"};
  for (std::size_t j = 1; j <= p; ++j) h.push_back("X_" + std::to_string(j));
  for (const char* c : {"A", "delta", "Y", "carried_forward"}) h.emplace_back(c);
  return h;
}

inline void write_trajectories_csv(std::ostream& os, std::span<const Trajectory> data) {
  const std::size_t p = data.empty() ? 0 : data.front().p();
  const auto header = trajectory_csv_header(p);
  for (std::size_t k = 0; k < header.size(); ++k) os << (k ? "," : "") << header[k];
  os << '\n';
  using detail::format_double;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Trajectory& tr = data[i];
    if (tr.p() != p) throw CsvError("write_trajectories_csv: inconsistent covariate count");
    std::string xs;
    for (std::size_t j = 0; j < p; ++j) xs += "," + format_double(tr.X(static_cast<Eigen::Index>(j)));
    os << i << ",0" << xs << ",,," << format_double(tr.Y0) << ",0\n";
    for (std::size_t t = 0; t < tr.visits.size(); ++t) {
      const VisitRecord& v = tr.visits[t];
      os << i << ',' << (t + 1) << xs << ',' << format_double(v.A) << ','
         << format_double(v.delta) << ',' << format_double(v.Y) << ','
         << (v.carried_forward ? 1 : 0) << '\n';
    }
  }
}

inline std::vector<Trajectory> read_trajectories_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw CsvError("trajectory csv: empty input");
  const auto header = detail::split_csv_line(line);
  if (header.size() < 6) throw CsvError("trajectory csv: header too short");
  const std::size_t p = header.size() - 6;
  if (header != trajectory_csv_header(p))
    throw CsvError("trajectory csv: unexpected header '" + line + "'");

  std::vector<Trajectory> out;
  std::map<long long, std::size_t> index_of;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != header.size())
      throw CsvError("trajectory csv line " + std::to_string(line_no) + ": wrong field count");
    const long long sid = static_cast<long long>(detail::parse_double(f[0], line_no));
    const long long visit = static_cast<long long>(detail::parse_double(f[1], line_no));
    if (visit == 0) {
      if (index_of.count(sid))
        throw CsvError("trajectory csv line " + std::to_string(line_no) + ": duplicate baseline");
      Trajectory tr;
      tr.X.resize(static_cast<Eigen::Index>(p));
      for (std::size_t j = 0; j < p; ++j)
        tr.X(static_cast<Eigen::Index>(j)) = detail::parse_double(f[2 + j], line_no);
      tr.Y0 = detail::parse_double(f[2 + p + 2], line_no);
      index_of[sid] = out.size();
      out.push_back(std::move(tr));
      continue;
    }
    auto it = index_of.find(sid);
    if (it == index_of.end())
      throw CsvError("trajectory csv line " + std::to_string(line_no) + ": visit before baseline");
    Trajectory& tr = out[it->second];
    if (static_cast<std::size_t>(visit) != tr.visits.size() + 1)
      throw CsvError("trajectory csv line " + std::to_string(line_no) + ": visits out of order");
    VisitRecord v;
    v.A = detail::parse_double(f[2 + p], line_no);
    v.delta = detail::parse_double(f[3 + p], line_no);
    v.Y = detail::parse_double(f[4 + p], line_no);
    v.carried_forward = f[5 + p] == "1";
    if (!(v.A > 0.0) || !(v.delta > 0.0))
      throw CsvError("trajectory csv line " + std::to_string(line_no) + ": A and delta must be positive");
    tr.visits.push_back(v);
  }
  return out;
}

}  // namespace bnpdtr::io

#endif
