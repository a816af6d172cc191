#include "qchns/records_io.hpp"

#include <cstdio>
#include <sstream>

#include "qchns/errors.hpp"

namespace qchns {

const char* kRecordHeader =
    "t,E_kin,E_grav,E_int,E_total,D_visc,D_chem,D_fric,mass,phi_mean,phi_min,phi_max,"
    "constraint_res,picard_iters,contraction_factor";

std::string record_to_csv(const DiagnosticsRecord& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,"
                "%.17g,%d,%.17g",
                r.t, r.E_kin, r.E_grav, r.E_int, r.E_total, r.D_visc, r.D_chem, r.D_fric, r.mass,
                r.phi_mean, r.phi_min, r.phi_max, r.constraint_res, r.picard_iters,
                r.contraction_factor);
  return buf;
}

RecordWriter::RecordWriter(const std::string& path) : out_(path, std::ios::binary) {
  if (!out_) throw IoError("RecordWriter: cannot open " + path);
  out_ << kRecordHeader << "\r\n";
  out_.flush();
}

void RecordWriter::append(const DiagnosticsRecord& r) {
  out_ << record_to_csv(r) << "\r\n";
  out_.flush();
  if (!out_) throw IoError("RecordWriter: write failed");
}

void write_records(const std::string& path, const std::vector<DiagnosticsRecord>& records) {
  RecordWriter w(path);
  for (const auto& r : records) w.append(r);
}

std::vector<DiagnosticsRecord> read_records(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("read_records: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoError("read_records: empty file " + path);
  while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
  if (line != kRecordHeader) throw IoError("read_records: unexpected header in " + path);

  std::vector<DiagnosticsRecord> out;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    std::vector<double> vals;
    while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
    if (vals.size() != 15) throw IoError("read_records: malformed row in " + path);
    DiagnosticsRecord r;
    r.t = vals[0];
    r.E_kin = vals[1];
    r.E_grav = vals[2];
    r.E_int = vals[3];
    r.E_total = vals[4];
    r.D_visc = vals[5];
    r.D_chem = vals[6];
    r.D_fric = vals[7];
    r.mass = vals[8];
    r.phi_mean = vals[9];
    r.phi_min = vals[10];
    r.phi_max = vals[11];
    r.constraint_res = vals[12];
    r.picard_iters = static_cast<int>(vals[13]);
    r.contraction_factor = vals[14];
    out.push_back(r);
  }
  return out;
}

}  // namespace qchns
