#include "qchns/field_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "qchns/errors.hpp"

namespace qchns {

namespace {
constexpr char kMagic[8] = {'Q', 'C', 'H', 'N', 'S', 'F', 'L', 'D'};
}

void write_snapshot(const std::string& path, const ScalarField& f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("write_snapshot: cannot open " + path);
  const uint32_t nx = static_cast<uint32_t>(f.grid.nx);
  const uint32_t ny = static_cast<uint32_t>(f.grid.ny);
  out.write(kMagic, 8);
  out.write(reinterpret_cast<const char*>(&nx), 4);
  out.write(reinterpret_cast<const char*>(&ny), 4);
  out.write(reinterpret_cast<const char*>(&f.grid.Lx), 8);
  out.write(reinterpret_cast<const char*>(&f.grid.Ly), 8);
  std::vector<double> row(f.grid.nx);
  for (int j = 0; j < f.grid.ny; ++j) {
    for (int i = 0; i < f.grid.nx; ++i) row[i] = f(i, j);
    out.write(reinterpret_cast<const char*>(row.data()), 8 * row.size());
  }
  if (!out) throw IoError("write_snapshot: write failed for " + path);
}

ScalarField read_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("read_snapshot: cannot open " + path);
  char magic[8];
  uint32_t nx = 0, ny = 0;
  double Lx = 0, Ly = 0;
  in.read(magic, 8);
  in.read(reinterpret_cast<char*>(&nx), 4);
  in.read(reinterpret_cast<char*>(&ny), 4);
  in.read(reinterpret_cast<char*>(&Lx), 8);
  in.read(reinterpret_cast<char*>(&Ly), 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0)
    throw IoError("read_snapshot: bad header in " + path);
  ScalarField f(Grid(static_cast<int>(nx), static_cast<int>(ny), Lx, Ly));
  std::vector<double> row(nx);
  for (uint32_t j = 0; j < ny; ++j) {
    in.read(reinterpret_cast<char*>(row.data()), 8 * row.size());
    for (uint32_t i = 0; i < nx; ++i) f(static_cast<int>(i), static_cast<int>(j)) = row[i];
  }
  if (!in) throw IoError("read_snapshot: truncated data in " + path);
  return f;
}

void write_field_csv(const std::string& path, const ScalarField& f) {
  std::ofstream out(path);
  if (!out) throw IoError("write_field_csv: cannot open " + path);
  out << "x,y,value\n";
  char buf[96];
  for (int j = 0; j < f.grid.ny; ++j)
    for (int i = 0; i < f.grid.nx; ++i) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", f.grid.x(i), f.grid.y(j), f(i, j));
      out << buf;
    }
}

}  // namespace qchns
