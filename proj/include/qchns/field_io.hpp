#pragma once

#include <string>

#include "qchns/grid.hpp"

namespace qchns {

/// Snapshot format: 32-byte header (magic "QCHNSFLD", uint32 nx, uint32 ny,
/// float64 Lx, float64 Ly, little-endian) followed by nx*ny float64 values,
/// row-major with x fastest (rows are y-levels).
void write_snapshot(const std::string& path, const ScalarField& f);
ScalarField read_snapshot(const std::string& path);

/// Plain "x,y,value" CSV of the same field, one cell per line.
void write_field_csv(const std::string& path, const ScalarField& f);

}  // namespace qchns
