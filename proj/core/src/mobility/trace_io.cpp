#include "dtcell/mobility/trace_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

#include "dtcell/common/binary_io.hpp"
#include "dtcell/common/error.hpp"

namespace dtcell::mobility {

namespace {

constexpr std::string_view kHeader = "traj_id,t_s,x_m,y_m";

std::string_view trim_cr(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_field(std::string_view s, std::size_t line, const char* name) {
  T value{};
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc() || ptr != end) throw ParseError(std::string("trace: bad ") + name + " '" + std::string(s) + "'", line);
  return value;
}

}  // namespace

std::string traces_to_csv(const std::vector<Trajectory>& trajectories) {
  std::string out(kHeader);
  out += '\n';
  char buf[128];
  for (std::size_t id = 0; id < trajectories.size(); ++id) {
    for (const auto& p : trajectories[id].points) {
      const int n = std::snprintf(buf, sizeof buf, "%zu,%.6f,%.6f,%.6f\n", id, p.t, p.x, p.y);
      out.append(buf, static_cast<std::size_t>(n));
    }
  }
  return out;
}

std::vector<Trajectory> traces_from_csv(std::string_view text) {
  std::vector<Trajectory> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool header_seen = false;
  long long current_id = -1;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string_view line = trim_cr(text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos));
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    if (!header_seen) {
      if (line != kHeader) throw ParseError("trace: expected header '" + std::string(kHeader) + "'", line_no);
      header_seen = true;
      continue;
    }
    if (line.empty()) continue;

    std::string_view fields[4];
    std::size_t start = 0;
    for (int f = 0; f < 4; ++f) {
      const std::size_t comma = line.find(',', start);
      if ((f < 3) == (comma == std::string_view::npos)) throw ParseError("trace: expected 4 comma-separated fields", line_no);
      fields[f] = line.substr(start, f < 3 ? comma - start : std::string_view::npos);
      start = comma + 1;
    }
    const auto id = parse_field<long long>(fields[0], line_no, "traj_id");
    TrajPoint p{parse_field<double>(fields[1], line_no, "t_s"), parse_field<double>(fields[2], line_no, "x_m"),
                parse_field<double>(fields[3], line_no, "y_m")};
    if (id < 0) throw ParseError("trace: negative traj_id", line_no);
    if (!std::isfinite(p.t) || !std::isfinite(p.x) || !std::isfinite(p.y))
      throw ParseError("trace: non-finite value", line_no);
    if (id < current_id) throw ParseError("trace: rows not sorted by traj_id", line_no);
    if (id > current_id) {
      out.emplace_back();
      current_id = id;
    } else if (!(p.t > out.back().points.back().t)) {
      throw ParseError("trace: non-increasing timestamp in trajectory " + std::to_string(id), line_no);
    }
    out.back().points.push_back(p);
  }
  if (!header_seen) throw ParseError("trace: missing header", 1);
  return out;
}

std::vector<Trajectory> load_traces(const std::string& path) { return traces_from_csv(read_file_bytes(path)); }

void save_traces(const std::vector<Trajectory>& trajectories, const std::string& path) {
  write_file_bytes(path, traces_to_csv(trajectories));
}

}  // namespace dtcell::mobility
