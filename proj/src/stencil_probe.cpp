#include "qchns/stencil_probe.hpp"

namespace qchns {

Eigen::SparseMatrix<double> probe_stencil_matrix(const Grid& g, int in_slots, int out_slots,
                                                 int radius, const StackedOp& op) {
  const int nx = g.nx, ny = g.ny, n = nx * ny;
  const int stride = 2 * radius + 2;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<size_t>(out_slots) * n * (2 * radius + 1) * (2 * radius + 1));

  std::vector<Array2d> in(in_slots, Array2d::Zero(nx, ny));
  std::vector<Array2d> out(out_slots, Array2d::Zero(nx, ny));

  for (int slot = 0; slot < in_slots; ++slot) {
    for (int a = 0; a < stride && a < nx; ++a) {
      for (int b = 0; b < stride && b < ny; ++b) {
        for (int i = a; i < nx; i += stride)
          for (int j = b; j < ny; j += stride) in[slot](i, j) = 1.0;
        op(in, out);
        for (int i = a; i < nx; i += stride) {
          for (int j = b; j < ny; j += stride) {
            const int col = slot * n + j * nx + i;
            const int ilo = std::max(0, i - radius), ihi = std::min(nx - 1, i + radius);
            const int jlo = std::max(0, j - radius), jhi = std::min(ny - 1, j + radius);
            for (int os = 0; os < out_slots; ++os)
              for (int jj = jlo; jj <= jhi; ++jj)
                for (int ii = ilo; ii <= ihi; ++ii)
                  if (out[os](ii, jj) != 0.0)
                    trip.emplace_back(os * n + jj * nx + ii, col, out[os](ii, jj));
          }
        }
        for (int i = a; i < nx; i += stride)
          for (int j = b; j < ny; j += stride) in[slot](i, j) = 0.0;
      }
    }
  }

  Eigen::SparseMatrix<double> m(out_slots * n, in_slots * n);
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

}  // namespace qchns
