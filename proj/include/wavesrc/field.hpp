#pragma once
#include <cstdint>
#include <vector>

namespace wavesrc {

// Dense 2D array, 0-based storage, row index is the x direction.
struct Field2D {
    int nx = 0, ny = 0;
    std::vector<double> v;

    Field2D() = default;
    Field2D(int nx_, int ny_) : nx(nx_), ny(ny_), v(std::size_t(nx_) * ny_, 0.0) {}

    double& at(int i, int j) { return v[std::size_t(i) * ny + j]; }
    double at(int i, int j) const { return v[std::size_t(i) * ny + j]; }
};

// Dense space-time array laid out to match the index linearization:
// entry (i,j,k) lives at flat position (i*ny + j)*nt + k (all 0-based), so a
// solution vector reshapes into a Field3D without copying semantics changes.
struct Field3D {
    int nx = 0, ny = 0, nt = 0;
    std::vector<double> v;

    Field3D() = default;
    Field3D(int nx_, int ny_, int nt_)
        : nx(nx_), ny(ny_), nt(nt_), v(std::size_t(nx_) * ny_ * nt_, 0.0) {}

    double& at(int i, int j, int k) { return v[(std::size_t(i) * ny + j) * nt + k]; }
    double at(int i, int j, int k) const { return v[(std::size_t(i) * ny + j) * nt + k]; }

    // Time slice as a copy.
    Field2D slice(int k) const {
        Field2D s(nx, ny);
        for (int i = 0; i < nx; ++i)
            for (int j = 0; j < ny; ++j) s.at(i, j) = at(i, j, k);
        return s;
    }
};

// Rectangular trace array (boundary node count x time levels).
struct TraceArray {
    int n_nodes = 0, n_t = 0;
    std::vector<double> v;

    TraceArray() = default;
    TraceArray(int nodes, int nt) : n_nodes(nodes), n_t(nt), v(std::size_t(nodes) * nt, 0.0) {}

    double& at(int k, int j) { return v[std::size_t(k) * n_t + j]; }
    double at(int k, int j) const { return v[std::size_t(k) * n_t + j]; }
};

} // namespace wavesrc
