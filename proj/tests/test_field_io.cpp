#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "qchns/field_io.hpp"
#include "test_util.hpp"

using namespace qchns;
using namespace qchns::test;

TEST_SUITE_BEGIN("field_io");

TEST_CASE("snapshot round trip is bit exact") {
  Grid g(16, 12, 2.0, 0.75);
  ScalarField f = random_rough(g, 555, false);
  const std::string path = (std::filesystem::temp_directory_path() / "qchns_snap.fld").string();
  write_snapshot(path, f);

  // 32-byte header followed by nx*ny doubles.
  CHECK(std::filesystem::file_size(path) == 32 + 8 * size_t(g.nx) * size_t(g.ny));
  std::ifstream in(path, std::ios::binary);
  char magic[9] = {};
  in.read(magic, 8);
  CHECK(std::string(magic) == "QCHNSFLD");

  ScalarField back = read_snapshot(path);
  CHECK(back.grid.nx == g.nx);
  CHECK(back.grid.ny == g.ny);
  CHECK(back.grid.Lx == g.Lx);
  CHECK(back.grid.Ly == g.Ly);
  CHECK((back.values == f.values).all());
  std::remove(path.c_str());
}

TEST_CASE("csv export carries cell centers") {
  Grid g(8, 8, 1.0, 1.0);
  ScalarField f = sample(g, [](double x, double y) { return x + 10.0 * y; });
  const std::string path = (std::filesystem::temp_directory_path() / "qchns_field.csv").string();
  write_field_csv(path, f);
  std::ifstream in(path);
  std::string header, first;
  std::getline(in, header);
  std::getline(in, first);
  CHECK(header == "x,y,value");
  CHECK(first.substr(0, 7) == "0.0625,");
  std::remove(path.c_str());
}

TEST_SUITE_END();
