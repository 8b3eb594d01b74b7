#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "impnet/spectra.hpp"

namespace impnet::gridnet {

using cplx = std::complex<double>;

// Dense complex matrix, row-major. Sizes here are tiny (2m x 2m).
class CMatrix {
public:
    CMatrix() = default;
    CMatrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    cplx& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const cplx& at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    const std::vector<cplx>& data() const { return data_; }

    CMatrix operator+(const CMatrix& o) const;
    CMatrix operator-(const CMatrix& o) const;
    CMatrix operator*(const CMatrix& o) const;
    CMatrix transpose() const;
    bool same_shape(const CMatrix& o) const {
        return rows_ == o.rows_ && cols_ == o.cols_;
    }

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<cplx> data_;
};

// |det| and the smallest singular value of a square complex matrix.
// det via LU with partial pivoting; sigma_min via inverse power iteration
// on A^H A using LU solves.
double det_magnitude(const CMatrix& a);
double smallest_singular_value(const CMatrix& a);

enum class BranchKind : std::uint8_t {
    SeriesRl = 0,
    ShuntC = 1,
    TransformerRl = 2,
    GridThevenin = 3,
};

constexpr int kGround = -1;

struct Branch {
    int from = kGround;  // node index or kGround
    int to = 0;
    BranchKind kind = BranchKind::SeriesRl;
    double r = 0.0;      // ohm
    double l = 0.0;      // henry
    double c = 0.0;      // farad
    double ratio = 1.0;  // turns ratio (transformer)
};

struct Topology {
    std::size_t node_count = 0;
    std::vector<Branch> branches;
    double omega0 = 2.0 * 3.14159265358979323846 * 50.0;

    void validate() const;
    bool has_ground_path() const;
};

// Line-oriented topology file:
//   nodes <m>
//   omega0 <rad/s>
//   branch <from|GND> <to|GND> <kind> R=<ohm> L=<henry> [C=<farad>] [ratio=<x>]
Topology read_topology(const std::string& path);
Topology parse_topology(const std::string& text, const std::string& context);

// 2x2 dq admittance block of one branch at frequency f.
struct Block22 {
    cplx m[2][2];
};
Block22 branch_block(const Branch& branch, double f_hz, double omega0);

struct TurbineBlock {
    std::size_t node_index = 0;
    spectra::DqAdmittanceCurve curve;
};

// Per-frequency nodal model: Y_node = Y_wt + Y_net, all 2m x 2m.
struct InModel {
    spectra::FrequencyGrid grid;
    std::size_t node_count = 0;
    std::vector<CMatrix> y_node;
    std::vector<CMatrix> y_wt;
    std::vector<CMatrix> y_net;
};

// Network admittance A^T diag(Y_b) A over the grid, with A the branch-node
// incidence matrix lifted to 2x2 identity blocks (ground rows dropped).
std::vector<CMatrix> assemble_ynet(const Topology& topology,
                                   const spectra::FrequencyGrid& grid);

// Block-diagonal turbine admittance; nodes without a turbine get zero blocks.
std::vector<CMatrix> assemble_ywt(const std::vector<TurbineBlock>& turbines,
                                  std::size_t node_count,
                                  const spectra::FrequencyGrid& grid);

InModel assemble_ynode(std::vector<CMatrix> ywt, std::vector<CMatrix> ynet,
                       const spectra::FrequencyGrid& grid,
                       std::size_t node_count);

struct DetPoint {
    double freq;
    double det_mag;
    double sigma_min;
};
std::vector<DetPoint> det_sweep(const InModel& model);

void write_matrix_csv(const std::vector<CMatrix>& mats,
                      const spectra::FrequencyGrid& grid,
                      const std::string& path);
void write_det_csv(const std::vector<DetPoint>& pts, const std::string& path);

}  // namespace impnet::gridnet
