#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dlsched/csv.hpp"

namespace dlsched {

// One row of the production-trace schema.
struct TraceRow {
  std::int64_t job_id = 0;
  double submit_time = 0.0;  // seconds, normalized to start at 0 on ingest
  double duration = 0.0;     // seconds of pure run time
  int num_gpus = 1;
  std::string user_id;
  std::string group_id;
};

struct IngestResult {
  std::vector<TraceRow> rows;
  std::vector<std::string> rejected;  // "line N: reason" per malformed row
};

inline const std::vector<std::string>& trace_columns() {
  static const std::vector<std::string> cols = {"job_id",   "submit_time", "duration",
                                                "num_gpus", "user_id",     "group_id"};
  return cols;
}

// CSV with a header row naming the six columns (any order). Malformed data
// rows are skipped and reported with their line numbers; a missing column is
// a hard error. Submission times are shifted so the earliest is 0.
inline IngestResult ingest_trace(std::istream& in) {
  IngestResult result;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("trace: empty file, header required");
  const auto header = split_csv_line(line);
  std::vector<int> col(trace_columns().size(), -1);
  for (std::size_t c = 0; c < trace_columns().size(); ++c) {
    for (std::size_t h = 0; h < header.size(); ++h)
      if (trim(header[h]) == trace_columns()[c]) col[c] = static_cast<int>(h);
    if (col[c] < 0) throw std::runtime_error("trace: missing column " + trace_columns()[c]);
  }

  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    auto reject = [&](const std::string& why) {
      result.rejected.push_back("line " + std::to_string(line_no) + ": " + why);
    };
    if (fields.size() < header.size()) {
      reject("expected " + std::to_string(header.size()) + " fields");
      continue;
    }
    TraceRow row;
    std::int64_t gpus = 0;
    if (!parse_int(fields[col[0]], row.job_id)) { reject("non-numeric job_id"); continue; }
    if (!parse_double(fields[col[1]], row.submit_time)) { reject("non-numeric submit_time"); continue; }
    if (!parse_double(fields[col[2]], row.duration)) { reject("non-numeric duration"); continue; }
    if (!parse_int(fields[col[3]], gpus)) { reject("non-numeric num_gpus"); continue; }
    row.num_gpus = static_cast<int>(gpus);
    row.user_id = trim(fields[col[4]]);
    row.group_id = trim(fields[col[5]]);
    if (row.duration <= 0) { reject("duration must be > 0"); continue; }
    if (row.num_gpus < 1) { reject("num_gpus must be >= 1"); continue; }
    result.rows.push_back(std::move(row));
  }

  if (!result.rows.empty()) {
    double base = std::numeric_limits<double>::infinity();
    for (const auto& r : result.rows) base = std::min(base, r.submit_time);
    for (auto& r : result.rows) r.submit_time -= base;
  }
  return result;
}

inline IngestResult ingest_trace_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("trace: cannot open " + path);
  return ingest_trace(in);
}

inline void emit_trace(const std::vector<TraceRow>& rows, std::ostream& out) {
  out << "job_id,submit_time,duration,num_gpus,user_id,group_id\n";
  for (const auto& r : rows)
    out << r.job_id << ',' << fmt_double(r.submit_time) << ',' << fmt_double(r.duration) << ','
        << r.num_gpus << ',' << r.user_id << ',' << r.group_id << '\n';
}

inline void emit_trace_file(const std::vector<TraceRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("trace: cannot write " + path);
  emit_trace(rows, out);
}

}  // namespace dlsched
