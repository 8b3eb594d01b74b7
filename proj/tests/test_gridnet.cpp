#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include "impnet/gridnet.hpp"

using namespace impnet;
using gridnet::Branch;
using gridnet::BranchKind;
using gridnet::CMatrix;
using gridnet::cplx;
using gridnet::kGround;

namespace {

constexpr double kOmega0 = 100.0 * 3.14159265358979323846;

double block_abs_diff(const CMatrix& m, std::size_t bi, std::size_t bj,
                      const gridnet::Block22& blk, double sign = 1.0) {
    double worst = 0.0;
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            worst = std::max(worst, std::abs(m.at(2 * bi + i, 2 * bj + j) -
                                             sign * blk.m[i][j]));
        }
    }
    return worst;
}

spectra::DqAdmittanceCurve constant_curve(const spectra::FrequencyGrid& grid,
                                          const spectra::Yblock& y) {
    return {grid, std::vector<spectra::Yblock>(grid.count, y)};
}

}  // namespace

TEST_CASE("branch blocks match hand inversions") {
    // plain resistor
    const auto r1 = gridnet::branch_block(
        {0, 1, BranchKind::SeriesRl, 1.0, 0.0, 0.0, 1.0}, 50.0, kOmega0);
    CHECK(std::abs(r1.m[0][0] - 1.0) < 1e-15);
    CHECK(std::abs(r1.m[1][1] - 1.0) < 1e-15);
    CHECK(std::abs(r1.m[0][1]) < 1e-15);
    CHECK(std::abs(r1.m[1][0]) < 1e-15);

    // pure inductor at f = 0: antisymmetric block, magnitude 1/omega0
    const auto l1 = gridnet::branch_block(
        {0, 1, BranchKind::SeriesRl, 0.0, 1.0, 0.0, 1.0}, 0.0, kOmega0);
    CHECK(std::abs(l1.m[0][0]) < 1e-15);
    CHECK(std::abs(l1.m[0][1] - 1.0 / kOmega0) < 1e-12);
    CHECK(std::abs(l1.m[1][0] + 1.0 / kOmega0) < 1e-12);
    CHECK(l1.m[0][1].real() == doctest::Approx(0.0031830988618379067));

    // zero shunt capacitance contributes nothing
    const auto c0 = gridnet::branch_block(
        {0, kGround, BranchKind::ShuntC, 0.0, 0.0, 0.0, 1.0}, 120.0, kOmega0);
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) CHECK(std::abs(c0.m[i][j]) == 0.0);
    }

    // transformer scales the series admittance by ratio^2
    const Branch plain{0, 1, BranchKind::SeriesRl, 0.5, 2e-3, 0.0, 1.0};
    Branch xfmr = plain;
    xfmr.kind = BranchKind::TransformerRl;
    xfmr.ratio = 3.0;
    const auto yp = gridnet::branch_block(plain, 75.0, kOmega0);
    const auto yx = gridnet::branch_block(xfmr, 75.0, kOmega0);
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            CHECK(std::abs(yx.m[i][j] - 9.0 * yp.m[i][j]) < 1e-12);
        }
    }

    CHECK_THROWS(gridnet::branch_block(
        {0, 1, BranchKind::SeriesRl, 0.0, 0.0, 0.0, 1.0}, 50.0, kOmega0));
}

TEST_CASE("two-node series branch assembles to [[y,-y],[-y,y]]") {
    gridnet::Topology topo;
    topo.node_count = 2;
    topo.omega0 = kOmega0;
    topo.branches = {{0, 1, BranchKind::SeriesRl, 0.8, 1e-3, 0.0, 1.0}};
    const auto grid = spectra::make_frequency_grid(10.0, 40.0, 3);
    const auto ynet = gridnet::assemble_ynet(topo, grid);
    REQUIRE(ynet.size() == 3);
    for (std::size_t t = 0; t < 3; ++t) {
        const auto y = gridnet::branch_block(topo.branches[0],
                                             grid.freq(static_cast<std::uint32_t>(t)),
                                             kOmega0);
        CHECK(block_abs_diff(ynet[t], 0, 0, y) < 1e-12);
        CHECK(block_abs_diff(ynet[t], 1, 1, y) < 1e-12);
        CHECK(block_abs_diff(ynet[t], 0, 1, y, -1.0) < 1e-12);
        CHECK(block_abs_diff(ynet[t], 1, 0, y, -1.0) < 1e-12);
    }
}

TEST_CASE("grounded thevenin on a single node is the branch block itself") {
    gridnet::Topology topo;
    topo.node_count = 1;
    topo.omega0 = kOmega0;
    topo.branches = {{0, kGround, BranchKind::GridThevenin, 0.1, 1e-4, 0.0, 1.0}};
    const auto grid = spectra::make_frequency_grid(5.0, 5.0, 4);
    const auto ynet = gridnet::assemble_ynet(topo, grid);
    for (std::size_t t = 0; t < 4; ++t) {
        const auto y = gridnet::branch_block(topo.branches[0],
                                             grid.freq(static_cast<std::uint32_t>(t)),
                                             kOmega0);
        CHECK(block_abs_diff(ynet[t], 0, 0, y) < 1e-12);
    }
}

TEST_CASE("ground-free topologies have zero block-row sums") {
    gridnet::Topology topo;
    topo.node_count = 3;
    topo.omega0 = kOmega0;
    topo.branches = {{0, 1, BranchKind::SeriesRl, 0.2, 1e-3, 0.0, 1.0},
                     {1, 2, BranchKind::SeriesRl, 0.4, 2e-3, 0.0, 1.0},
                     {0, 2, BranchKind::SeriesRl, 0.6, 5e-4, 0.0, 1.0}};
    CHECK_FALSE(topo.has_ground_path());
    const auto grid = spectra::make_frequency_grid(25.0, 100.0, 2);
    const auto ynet = gridnet::assemble_ynet(topo, grid);
    for (const auto& m : ynet) {
        for (std::size_t bi = 0; bi < 3; ++bi) {
            for (int i = 0; i < 2; ++i) {
                for (int j = 0; j < 2; ++j) {
                    cplx sum = 0.0;
                    for (std::size_t bj = 0; bj < 3; ++bj) {
                        sum += m.at(2 * bi + i, 2 * bj + j);
                    }
                    CHECK(std::abs(sum) < 1e-12);
                }
            }
        }
        // block symmetry: block(i,j) == block(j,i)
        for (std::size_t bi = 0; bi < 3; ++bi) {
            for (std::size_t bj = 0; bj < 3; ++bj) {
                for (int i = 0; i < 2; ++i) {
                    for (int j = 0; j < 2; ++j) {
                        CHECK(std::abs(m.at(2 * bi + i, 2 * bj + j) -
                                       m.at(2 * bj + i, 2 * bi + j)) < 1e-15);
                    }
                }
            }
        }
    }
}

TEST_CASE("turbine block-diagonal assembly") {
    const auto grid = spectra::make_frequency_grid(50.0, 50.0, 2);
    const spectra::Yblock y{cplx(1, 2), cplx(-0.5, 0), cplx(0.5, 0), cplx(1, -2)};

    std::vector<gridnet::TurbineBlock> turbines;
    for (std::size_t i = 0; i < 4; ++i) {
        turbines.push_back({i, constant_curve(grid, y)});
    }
    const auto ywt = gridnet::assemble_ywt(turbines, 4, grid);
    REQUIRE(ywt.size() == 2);
    CHECK(ywt[0].rows() == 8);
    CHECK(ywt[0].cols() == 8);
    for (std::size_t bi = 0; bi < 4; ++bi) {
        CHECK(std::abs(ywt[0].at(2 * bi, 2 * bi) - y.y11) == 0.0);
        CHECK(std::abs(ywt[0].at(2 * bi, 2 * bi + 1) - y.y12) == 0.0);
        for (std::size_t bj = 0; bj < 4; ++bj) {
            if (bi == bj) continue;
            for (int i = 0; i < 2; ++i) {
                for (int j = 0; j < 2; ++j) {
                    CHECK(ywt[0].at(2 * bi + i, 2 * bj + j) == cplx(0.0, 0.0));
                }
            }
        }
    }

    // single turbine, m = 1: the matrix is the curve value
    const auto single = gridnet::assemble_ywt({{0, constant_curve(grid, y)}}, 1, grid);
    CHECK(single[0].at(0, 0) == y.y11);
    CHECK(single[0].at(1, 0) == y.y21);

    // duplicate node index rejected
    CHECK_THROWS(gridnet::assemble_ywt(
        {{0, constant_curve(grid, y)}, {0, constant_curve(grid, y)}}, 2, grid));
    // grid mismatch rejected
    const auto other = spectra::make_frequency_grid(1.0, 1.0, 2);
    CHECK_THROWS(gridnet::assemble_ywt({{0, constant_curve(other, y)}}, 1, grid));
}

TEST_CASE("nodal sum keeps its three constituents consistent") {
    const auto grid = spectra::make_frequency_grid(50.0, 25.0, 3);
    gridnet::Topology topo;
    topo.node_count = 1;
    topo.omega0 = kOmega0;
    topo.branches = {{0, kGround, BranchKind::GridThevenin, 0.05, 2e-4, 0.0, 1.0},
                     {0, kGround, BranchKind::ShuntC, 0.0, 0.0, 5e-5, 1.0}};
    auto ynet = gridnet::assemble_ynet(topo, grid);

    const spectra::Yblock y{cplx(0.9, -0.4), cplx(0.1, 0.0), cplx(-0.1, 0.0),
                            cplx(0.9, -0.4)};
    auto ywt = gridnet::assemble_ywt({{0, constant_curve(grid, y)}}, 1, grid);

    const auto model =
        gridnet::assemble_ynode(std::move(ywt), std::move(ynet), grid, 1);

    // hand arithmetic at f = 50 Hz, written independently of branch_block
    const double f = 50.0;
    const cplx s(0.0, 2.0 * 3.14159265358979323846 * f);
    const cplx zd = 0.05 + s * 2e-4;
    const double xl = kOmega0 * 2e-4;
    const cplx det = zd * zd + xl * xl;
    const cplx thev11 = zd / det, thev12 = cplx(xl, 0.0) / det;
    const cplx shunt11 = s * 5e-5;
    const double shunt12 = -kOmega0 * 5e-5;

    CHECK(std::abs(model.y_node[0].at(0, 0) - (y.y11 + thev11 + shunt11)) < 1e-12);
    CHECK(std::abs(model.y_node[0].at(0, 1) - (y.y12 + thev12 + shunt12)) < 1e-12);
    CHECK(std::abs(model.y_node[0].at(1, 0) - (y.y21 - thev12 - shunt12)) < 1e-12);

    // Y_node - Y_net == Y_wt elementwise
    for (std::size_t t = 0; t < grid.count; ++t) {
        const auto diff = model.y_node[t] - model.y_net[t];
        for (std::size_t i = 0; i < 2; ++i) {
            for (std::size_t j = 0; j < 2; ++j) {
                CHECK(std::abs(diff.at(i, j) - model.y_wt[t].at(i, j)) < 1e-12);
            }
        }
    }

    // zero network: Y_node == Y_wt
    auto ywt2 = gridnet::assemble_ywt({{0, constant_curve(grid, y)}}, 1, grid);
    std::vector<CMatrix> zero(grid.count, CMatrix(2, 2));
    const auto model2 = gridnet::assemble_ynode(std::move(ywt2), std::move(zero),
                                                grid, 1);
    for (std::size_t t = 0; t < grid.count; ++t) {
        CHECK(std::abs(model2.y_node[t].at(0, 0) - y.y11) == 0.0);
    }
}

TEST_CASE("assembly is linear in the turbine curves") {
    const auto grid = spectra::make_frequency_grid(10.0, 90.0, 2);
    const spectra::Yblock y{cplx(0.4, 0.1), cplx(0, 0.2), cplx(0, -0.2),
                            cplx(0.4, 0.1)};
    spectra::Yblock y2{2.0 * y.y11, 2.0 * y.y12, 2.0 * y.y21, 2.0 * y.y22};
    const auto w1 = gridnet::assemble_ywt({{0, constant_curve(grid, y)}}, 2, grid);
    const auto w2 = gridnet::assemble_ywt({{0, constant_curve(grid, y2)}}, 2, grid);
    for (std::size_t t = 0; t < 2; ++t) {
        for (std::size_t i = 0; i < 4; ++i) {
            for (std::size_t j = 0; j < 4; ++j) {
                CHECK(std::abs(w2[t].at(i, j) - 2.0 * w1[t].at(i, j)) < 1e-15);
            }
        }
    }
}

TEST_CASE("determinant and sigma_min on known matrices") {
    CMatrix eye(6, 6);
    for (std::size_t i = 0; i < 6; ++i) eye.at(i, i) = 1.0;
    CHECK(gridnet::det_magnitude(eye) == doctest::Approx(1.0));
    CHECK(gridnet::smallest_singular_value(eye) == doctest::Approx(1.0));

    // known diagonal: det = product, sigma_min = smallest magnitude
    CMatrix diag(3, 3);
    diag.at(0, 0) = cplx(0.0, 2.0);
    diag.at(1, 1) = cplx(3.0, 0.0);
    diag.at(2, 2) = cplx(0.0, -0.5);
    CHECK(gridnet::det_magnitude(diag) == doctest::Approx(3.0));
    CHECK(gridnet::smallest_singular_value(diag) == doctest::Approx(0.5));

    // determinant homogeneity: scaling a 2m x 2m matrix by 2
    CMatrix two = eye;
    for (std::size_t i = 0; i < 6; ++i) two.at(i, i) = 2.0;
    CHECK(gridnet::det_magnitude(two) == doctest::Approx(64.0));
}

TEST_CASE("det sweep over an identity model") {
    const auto grid = spectra::make_frequency_grid(1.0, 1.0, 5);
    std::vector<CMatrix> eye(grid.count, CMatrix(2, 2));
    for (auto& m : eye) {
        m.at(0, 0) = 1.0;
        m.at(1, 1) = 1.0;
    }
    auto zero = std::vector<CMatrix>(grid.count, CMatrix(2, 2));
    const auto model = gridnet::assemble_ynode(std::move(eye), std::move(zero),
                                               grid, 1);
    for (const auto& p : gridnet::det_sweep(model)) {
        CHECK(p.det_mag == doctest::Approx(1.0));
        CHECK(p.sigma_min == doctest::Approx(1.0));
    }
}

TEST_CASE("topology file parsing") {
    const std::string text =
        "# comment line\n"
        "nodes 2\n"
        "omega0 314.159\n"
        "branch 0 GND grid_thevenin R=0.1 L=1e-4\n"
        "branch 0 1 transformer_rl R=2 L=0.05 ratio=10 # trailing comment\n"
        "branch 1 GND shunt_c C=1e-5\n";
    const auto topo = gridnet::parse_topology(text, "inline");
    CHECK(topo.node_count == 2);
    CHECK(topo.omega0 == doctest::Approx(314.159));
    REQUIRE(topo.branches.size() == 3);
    CHECK(topo.branches[0].from == 0);
    CHECK(topo.branches[0].to == kGround);
    CHECK(topo.branches[1].kind == BranchKind::TransformerRl);
    CHECK(topo.branches[1].ratio == 10.0);
    CHECK(topo.branches[2].c == 1e-5);
    CHECK(topo.has_ground_path());

    CHECK_THROWS(gridnet::parse_topology("branch 0 1 series_rl R=1\n", "x"));
    CHECK_THROWS(gridnet::parse_topology("nodes 2\nbranch 0 5 series_rl R=1\n", "x"));
    CHECK_THROWS(gridnet::parse_topology("nodes 2\nbranch 0 1 bogus R=1\n", "x"));
    CHECK_THROWS(gridnet::parse_topology("nodes 2\nbranch 0 1 series_rl R:1\n", "x"));
    CHECK_THROWS(gridnet::parse_topology("nodes 1\nwhatever\n", "x"));
}

TEST_CASE("shipped farm topologies are passive and well conditioned") {
    for (const char* name : {"farm4.topo", "farm5bus.topo"}) {
        const auto topo = gridnet::read_topology(
            std::string(IMPNET_CONFIG_DIR) + "/" + name);
        CHECK(topo.has_ground_path());
        const auto grid = spectra::make_frequency_grid(1.0, 25.0, 100);
        auto ynet = gridnet::assemble_ynet(topo, grid);
        auto zero = std::vector<CMatrix>(
            grid.count, CMatrix(2 * topo.node_count, 2 * topo.node_count));
        const auto model = gridnet::assemble_ynode(std::move(zero),
                                                   std::move(ynet), grid,
                                                   topo.node_count);
        for (const auto& p : gridnet::det_sweep(model)) {
            CHECK(p.sigma_min > 1e-12);
            CHECK(std::isfinite(p.det_mag));
        }
    }
}
