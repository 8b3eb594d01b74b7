#include "impnet/gridnet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace impnet::gridnet {

// ---- dense complex matrix ----------------------------------------------------

CMatrix CMatrix::operator+(const CMatrix& o) const {
    if (!same_shape(o)) throw std::invalid_argument("gridnet: shape mismatch (+)");
    CMatrix r(rows_, cols_);
    for (std::size_t i = 0; i < data_.size(); ++i) r.data_[i] = data_[i] + o.data_[i];
    return r;
}

CMatrix CMatrix::operator-(const CMatrix& o) const {
    if (!same_shape(o)) throw std::invalid_argument("gridnet: shape mismatch (-)");
    CMatrix r(rows_, cols_);
    for (std::size_t i = 0; i < data_.size(); ++i) r.data_[i] = data_[i] - o.data_[i];
    return r;
}

CMatrix CMatrix::operator*(const CMatrix& o) const {
    if (cols_ != o.rows_) throw std::invalid_argument("gridnet: shape mismatch (*)");
    CMatrix r(rows_, o.cols_);
    for (std::size_t i = 0; i < rows_; ++i) {
        for (std::size_t k = 0; k < cols_; ++k) {
            const cplx v = at(i, k);
            if (v == cplx{}) continue;
            for (std::size_t j = 0; j < o.cols_; ++j) {
                r.at(i, j) += v * o.at(k, j);
            }
        }
    }
    return r;
}

CMatrix CMatrix::transpose() const {
    CMatrix r(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i) {
        for (std::size_t j = 0; j < cols_; ++j) r.at(j, i) = at(i, j);
    }
    return r;
}

namespace {

// LU with partial pivoting; returns false if exactly singular.
bool lu_factor(CMatrix& a, std::vector<std::size_t>& piv, int& sign) {
    const std::size_t n = a.rows();
    piv.resize(n);
    sign = 1;
    for (std::size_t i = 0; i < n; ++i) piv[i] = i;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t best = k;
        double best_mag = std::abs(a.at(k, k));
        for (std::size_t i = k + 1; i < n; ++i) {
            const double m = std::abs(a.at(i, k));
            if (m > best_mag) {
                best = i;
                best_mag = m;
            }
        }
        if (best_mag == 0.0) return false;
        if (best != k) {
            for (std::size_t j = 0; j < n; ++j) {
                std::swap(a.at(k, j), a.at(best, j));
            }
            std::swap(piv[k], piv[best]);
            sign = -sign;
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            const cplx f = a.at(i, k) / a.at(k, k);
            a.at(i, k) = f;
            for (std::size_t j = k + 1; j < n; ++j) {
                a.at(i, j) -= f * a.at(k, j);
            }
        }
    }
    return true;
}

void lu_solve(const CMatrix& lu, const std::vector<std::size_t>& piv,
              std::vector<cplx>& b) {
    const std::size_t n = lu.rows();
    std::vector<cplx> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = b[piv[i]];
    for (std::size_t i = 1; i < n; ++i) {
        for (std::size_t j = 0; j < i; ++j) x[i] -= lu.at(i, j) * x[j];
    }
    for (std::size_t i = n; i-- > 0;) {
        for (std::size_t j = i + 1; j < n; ++j) x[i] -= lu.at(i, j) * x[j];
        x[i] /= lu.at(i, i);
    }
    b = std::move(x);
}

// Solve A^H x = b given LU of A: A^H = (P^T L U)^H = U^H L^H P, so
// solve U^H z = b (forward), L^H w = z (backward), then x = P^T w.
void lu_solve_adjoint(const CMatrix& lu, const std::vector<std::size_t>& piv,
                      std::vector<cplx>& b) {
    const std::size_t n = lu.rows();
    std::vector<cplx> z = b;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            z[i] -= std::conj(lu.at(j, i)) * z[j];
        }
        z[i] /= std::conj(lu.at(i, i));
    }
    for (std::size_t i = n; i-- > 0;) {
        for (std::size_t j = i + 1; j < n; ++j) {
            z[i] -= std::conj(lu.at(j, i)) * z[j];
        }
    }
    std::vector<cplx> x(n);
    for (std::size_t i = 0; i < n; ++i) x[piv[i]] = z[i];
    b = std::move(x);
}

}  // namespace

double det_magnitude(const CMatrix& a) {
    if (a.rows() != a.cols()) {
        throw std::invalid_argument("gridnet: determinant of non-square matrix");
    }
    CMatrix lu = a;
    std::vector<std::size_t> piv;
    int sign = 0;
    if (!lu_factor(lu, piv, sign)) return 0.0;
    // Accumulate log-magnitude to dodge overflow on larger sweeps.
    double log_mag = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        log_mag += std::log(std::abs(lu.at(i, i)));
    }
    return std::exp(log_mag);
}

double smallest_singular_value(const CMatrix& a) {
    if (a.rows() != a.cols()) {
        throw std::invalid_argument("gridnet: sigma_min of non-square matrix");
    }
    const std::size_t n = a.rows();
    CMatrix lu = a;
    std::vector<std::size_t> piv;
    int sign = 0;
    if (!lu_factor(lu, piv, sign)) return 0.0;

    // Inverse power iteration on A^H A: each step applies A^-1 A^-H, which
    // converges to 1/sigma_min^2. Deterministic fixed start vector.
    std::vector<cplx> v(n);
    for (std::size_t i = 0; i < n; ++i) {
        v[i] = cplx(1.0 + 0.25 * static_cast<double>(i % 3),
                    0.5 - 0.125 * static_cast<double>(i % 5));
    }
    double lambda = 0.0;
    for (int it = 0; it < 200; ++it) {
        lu_solve_adjoint(lu, piv, v);  // w = A^-H v
        lu_solve(lu, piv, v);          // v' = A^-1 w
        double norm = 0.0;
        for (const cplx& c : v) norm += std::norm(c);
        norm = std::sqrt(norm);
        if (norm == 0.0) return 0.0;
        const double new_lambda = norm;
        for (cplx& c : v) c /= norm;
        if (it > 4 && std::abs(new_lambda - lambda) <= 1e-13 * new_lambda) {
            lambda = new_lambda;
            break;
        }
        lambda = new_lambda;
    }
    return 1.0 / std::sqrt(lambda);
}

// ---- topology -----------------------------------------------------------------

void Topology::validate() const {
    if (node_count < 1) throw std::invalid_argument("gridnet: need m >= 1 nodes");
    for (const Branch& b : branches) {
        for (int end : {b.from, b.to}) {
            if (end != kGround &&
                (end < 0 || static_cast<std::size_t>(end) >= node_count)) {
                throw std::invalid_argument("gridnet: branch endpoint out of range");
            }
        }
        if (b.from == kGround && b.to == kGround) {
            throw std::invalid_argument("gridnet: branch with both ends grounded");
        }
        if (b.from == b.to) {
            throw std::invalid_argument("gridnet: branch endpoints equal");
        }
    }
}

bool Topology::has_ground_path() const {
    // Union-find over nodes plus a virtual ground vertex.
    std::vector<int> parent(node_count + 1);
    for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = static_cast<int>(i);
    auto find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    const int ground = static_cast<int>(node_count);
    for (const Branch& b : branches) {
        const int u = b.from == kGround ? ground : b.from;
        const int v = b.to == kGround ? ground : b.to;
        parent[find(u)] = find(v);
    }
    for (std::size_t i = 0; i < node_count; ++i) {
        if (find(static_cast<int>(i)) != find(ground)) return false;
    }
    return true;
}

namespace {

BranchKind parse_kind(const std::string& s, const std::string& context, int line) {
    if (s == "series_rl") return BranchKind::SeriesRl;
    if (s == "shunt_c") return BranchKind::ShuntC;
    if (s == "transformer_rl") return BranchKind::TransformerRl;
    if (s == "grid_thevenin") return BranchKind::GridThevenin;
    throw std::runtime_error(context + ":" + std::to_string(line) +
                             ": unknown branch kind '" + s + "'");
}

int parse_endpoint(const std::string& s, const std::string& context, int line) {
    if (s == "GND") return kGround;
    try {
        return std::stoi(s);
    } catch (...) {
        throw std::runtime_error(context + ":" + std::to_string(line) +
                                 ": bad endpoint '" + s + "'");
    }
}

}  // namespace

Topology parse_topology(const std::string& text, const std::string& context) {
    Topology topo;
    topo.node_count = 0;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    bool saw_nodes = false;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::istringstream ls(line);
        std::string tok;
        if (!(ls >> tok)) continue;
        if (tok == "nodes") {
            long m = -1;
            ls >> m;
            if (m < 1) {
                throw std::runtime_error(context + ":" + std::to_string(line_no) +
                                         ": bad node count");
            }
            topo.node_count = static_cast<std::size_t>(m);
            saw_nodes = true;
        } else if (tok == "omega0") {
            if (!(ls >> topo.omega0) || !(topo.omega0 > 0.0)) {
                throw std::runtime_error(context + ":" + std::to_string(line_no) +
                                         ": bad omega0");
            }
        } else if (tok == "branch") {
            std::string from_s, to_s, kind_s;
            if (!(ls >> from_s >> to_s >> kind_s)) {
                throw std::runtime_error(context + ":" + std::to_string(line_no) +
                                         ": branch needs <from> <to> <kind>");
            }
            Branch b;
            b.from = parse_endpoint(from_s, context, line_no);
            b.to = parse_endpoint(to_s, context, line_no);
            b.kind = parse_kind(kind_s, context, line_no);
            std::string kv;
            while (ls >> kv) {
                const auto eq = kv.find('=');
                if (eq == std::string::npos) {
                    throw std::runtime_error(context + ":" +
                                             std::to_string(line_no) +
                                             ": expected key=value, got '" + kv + "'");
                }
                const std::string key = kv.substr(0, eq);
                const double val = std::stod(kv.substr(eq + 1));
                if (key == "R") b.r = val;
                else if (key == "L") b.l = val;
                else if (key == "C") b.c = val;
                else if (key == "ratio") b.ratio = val;
                else {
                    throw std::runtime_error(context + ":" +
                                             std::to_string(line_no) +
                                             ": unknown parameter '" + key + "'");
                }
            }
            topo.branches.push_back(b);
        } else {
            throw std::runtime_error(context + ":" + std::to_string(line_no) +
                                     ": unknown directive '" + tok + "'");
        }
    }
    if (!saw_nodes) throw std::runtime_error(context + ": missing 'nodes' line");
    topo.validate();
    return topo;
}

Topology read_topology(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("gridnet: cannot open " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_topology(ss.str(), path);
}

// ---- branch blocks ---------------------------------------------------------------

Block22 branch_block(const Branch& branch, double f_hz, double omega0) {
    const cplx s(0.0, 2.0 * 3.14159265358979323846 * f_hz);
    switch (branch.kind) {
        case BranchKind::ShuntC: {
            const double xc = omega0 * branch.c;
            return Block22{{{s * branch.c, cplx(-xc, 0.0)},
                            {cplx(xc, 0.0), s * branch.c}}};
        }
        case BranchKind::SeriesRl:
        case BranchKind::TransformerRl:
        case BranchKind::GridThevenin: {
            if (branch.r == 0.0 && branch.l == 0.0) {
                throw std::runtime_error(
                    "gridnet: singular series branch (R = L = 0)");
            }
            const cplx diag = branch.r + s * branch.l;
            const double xl = omega0 * branch.l;
            const cplx det = diag * diag + xl * xl;
            if (std::abs(det) == 0.0) {
                throw std::runtime_error(
                    "gridnet: singular series impedance block at " +
                    std::to_string(f_hz) + " Hz");
            }
            // inverse of [[diag, -xl], [xl, diag]]
            Block22 y{{{diag / det, cplx(xl, 0.0) / det},
                       {cplx(-xl, 0.0) / det, diag / det}}};
            const double scale = branch.kind == BranchKind::TransformerRl
                                     ? branch.ratio * branch.ratio
                                     : 1.0;
            for (auto& row : y.m) {
                for (auto& v : row) v *= scale;
            }
            return y;
        }
    }
    throw std::logic_error("gridnet: unhandled branch kind");
}

// ---- assembly ----------------------------------------------------------------------

std::vector<CMatrix> assemble_ynet(const Topology& topology,
                                   const spectra::FrequencyGrid& grid) {
    topology.validate();
    const std::size_t m = topology.node_count;
    const std::size_t nb = topology.branches.size();
    std::vector<CMatrix> out(grid.count);
    std::string error;

    // Incidence matrix lifted to 2x2 identity blocks; frequency-independent.
    CMatrix incidence(2 * nb, 2 * m);
    for (std::size_t b = 0; b < nb; ++b) {
        const Branch& br = topology.branches[b];
        if (br.from != kGround) {
            incidence.at(2 * b, 2 * br.from) = 1.0;
            incidence.at(2 * b + 1, 2 * br.from + 1) = 1.0;
        }
        if (br.to != kGround) {
            incidence.at(2 * b, 2 * br.to) = -1.0;
            incidence.at(2 * b + 1, 2 * br.to + 1) = -1.0;
        }
    }
    const CMatrix incidence_t = incidence.transpose();

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t t = 0; t < static_cast<std::ptrdiff_t>(grid.count); ++t) {
        try {
            const double f = grid.freq(static_cast<std::uint32_t>(t));
            CMatrix yb(2 * nb, 2 * nb);
            for (std::size_t b = 0; b < nb; ++b) {
                const Block22 blk =
                    branch_block(topology.branches[b], f, topology.omega0);
                for (int i = 0; i < 2; ++i) {
                    for (int j = 0; j < 2; ++j) {
                        yb.at(2 * b + i, 2 * b + j) = blk.m[i][j];
                    }
                }
            }
            out[t] = incidence_t * yb * incidence;
        } catch (const std::exception& e) {
#pragma omp critical
            if (error.empty()) error = e.what();
        }
    }
    if (!error.empty()) throw std::runtime_error(error);
    return out;
}

std::vector<CMatrix> assemble_ywt(const std::vector<TurbineBlock>& turbines,
                                  std::size_t node_count,
                                  const spectra::FrequencyGrid& grid) {
    std::set<std::size_t> seen;
    for (const TurbineBlock& t : turbines) {
        if (t.node_index >= node_count) {
            throw std::invalid_argument("gridnet: turbine node out of range");
        }
        if (!seen.insert(t.node_index).second) {
            throw std::invalid_argument("gridnet: duplicate turbine node " +
                                        std::to_string(t.node_index));
        }
        if (!(t.curve.grid == grid)) {
            throw std::invalid_argument("gridnet: turbine curve grid mismatch");
        }
    }
    std::vector<CMatrix> out(grid.count);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t t = 0; t < static_cast<std::ptrdiff_t>(grid.count); ++t) {
        CMatrix y(2 * node_count, 2 * node_count);
        for (const TurbineBlock& wt : turbines) {
            const spectra::Yblock& blk = wt.curve.values[t];
            const std::size_t k = 2 * wt.node_index;
            y.at(k, k) = blk.y11;
            y.at(k, k + 1) = blk.y12;
            y.at(k + 1, k) = blk.y21;
            y.at(k + 1, k + 1) = blk.y22;
        }
        out[t] = std::move(y);
    }
    return out;
}

InModel assemble_ynode(std::vector<CMatrix> ywt, std::vector<CMatrix> ynet,
                       const spectra::FrequencyGrid& grid,
                       std::size_t node_count) {
    if (ywt.size() != grid.count || ynet.size() != grid.count) {
        throw std::invalid_argument("gridnet: per-frequency count mismatch");
    }
    InModel model;
    model.grid = grid;
    model.node_count = node_count;
    model.y_node.resize(grid.count);
    for (std::size_t t = 0; t < grid.count; ++t) {
        if (!ywt[t].same_shape(ynet[t]) || ywt[t].rows() != 2 * node_count) {
            throw std::invalid_argument("gridnet: matrix shape mismatch");
        }
        model.y_node[t] = ywt[t] + ynet[t];
    }
    model.y_wt = std::move(ywt);
    model.y_net = std::move(ynet);
    return model;
}

std::vector<DetPoint> det_sweep(const InModel& model) {
    std::vector<DetPoint> out(model.grid.count);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t t = 0; t < static_cast<std::ptrdiff_t>(model.grid.count);
         ++t) {
        out[t] = {model.grid.freq(static_cast<std::uint32_t>(t)),
                  det_magnitude(model.y_node[t]),
                  smallest_singular_value(model.y_node[t])};
    }
    return out;
}

void write_matrix_csv(const std::vector<CMatrix>& mats,
                      const spectra::FrequencyGrid& grid,
                      const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("gridnet: cannot open " + path);
    f.precision(17);
    f << "f,row,col,real,imag\n";
    for (std::size_t t = 0; t < mats.size(); ++t) {
        const double freq = grid.freq(static_cast<std::uint32_t>(t));
        for (std::size_t i = 0; i < mats[t].rows(); ++i) {
            for (std::size_t j = 0; j < mats[t].cols(); ++j) {
                f << freq << ',' << i << ',' << j << ','
                  << mats[t].at(i, j).real() << ',' << mats[t].at(i, j).imag()
                  << '\n';
            }
        }
    }
}

void write_det_csv(const std::vector<DetPoint>& pts, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("gridnet: cannot open " + path);
    f.precision(17);
    f << "f,det_mag,sigma_min\n";
    for (const DetPoint& p : pts) {
        f << p.freq << ',' << p.det_mag << ',' << p.sigma_min << '\n';
    }
}

}  // namespace impnet::gridnet
