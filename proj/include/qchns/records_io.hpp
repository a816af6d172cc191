#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "qchns/diagnostics.hpp"

namespace qchns {

/// Fixed record CSV column order (RFC 4180, CRLF line ends, 17 significant
/// digits so numeric fields round-trip bit exactly).
extern const char* kRecordHeader;

std::string record_to_csv(const DiagnosticsRecord& r);

/// Streaming writer: header on open, one flushed line per record.
class RecordWriter {
 public:
  explicit RecordWriter(const std::string& path);
  void append(const DiagnosticsRecord& r);

 private:
  std::ofstream out_;
};

void write_records(const std::string& path, const std::vector<DiagnosticsRecord>& records);
std::vector<DiagnosticsRecord> read_records(const std::string& path);

}  // namespace qchns
