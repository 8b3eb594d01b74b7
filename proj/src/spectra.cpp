#include "impnet/spectra.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "impnet/binio.hpp"
#include "impnet/rng.hpp"

namespace impnet::spectra {

FrequencyGrid make_frequency_grid(double f_start, double f_step,
                                  std::uint32_t count) {
    if (!(f_start > 0.0) || !(f_step > 0.0) || count < 2) {
        throw std::invalid_argument(
            "spectra: invalid grid (need f_start > 0, f_step > 0, count >= 2)");
    }
    return FrequencyGrid{f_start, f_step, count};
}

namespace {

// Inverts [[a, b], [c, d]]; the caller checks the determinant.
Yblock invert22(cplx a, cplx b, cplx c, cplx d, double freq) {
    const cplx det = a * d - b * c;
    if (!(std::abs(det) > 0.0) || !std::isfinite(std::abs(det))) {
        throw std::runtime_error("spectra: singular impedance block at " +
                                 std::to_string(freq) + " Hz");
    }
    return Yblock{d / det, -b / det, -c / det, a / det};
}

Yblock admittance_at(const VscParams& p, const OperatingPoint& op, double freq) {
    const cplx s(0.0, 2.0 * 3.14159265358979323846 * freq);

    const cplx h_cc = p.kp_cc + p.ki_cc / s;              // current-loop PI
    const cplx filt = 1.0 / (1.0 + s * p.tau_f);          // measurement filter
    const double v_d0 = op.u_pcc * p.v_base;
    const double i_d0 = op.p_active_mw * 1.0e6 / (1.5 * v_d0);
    const double i_q0 = -i_d0 * std::tan(std::acos(op.power_factor));
    const cplx pll_num = p.kp_pll * s + p.ki_pll;
    const cplx g_pll = pll_num / (s * s + v_d0 * pll_num);

    const cplx diag = s * p.filter_l + p.filter_r + h_cc * filt;
    const double xc = p.omega0 * p.filter_l;

    // PLL correction enters the q column only.
    const cplx dz12 = -g_pll * (v_d0 + h_cc * i_q0);
    const cplx dz22 = g_pll * (h_cc * i_d0);

    return invert22(diag, -xc + dz12, xc, diag + dz22, freq);
}

void check_finite(const Yblock& y, double freq) {
    for (const cplx* v : {&y.y11, &y.y12, &y.y21, &y.y22}) {
        if (!std::isfinite(v->real()) || !std::isfinite(v->imag())) {
            throw std::runtime_error("spectra: non-finite admittance at " +
                                     std::to_string(freq) + " Hz");
        }
    }
}

}  // namespace

DqAdmittanceCurve synth_vsc_admittance(const VscParams& params,
                                       const OperatingPoint& op,
                                       const FrequencyGrid& grid) {
    if (!(params.filter_l > 0.0) && !(params.filter_r > 0.0)) {
        throw std::invalid_argument("spectra: filter R and L both zero");
    }
    if (!(params.v_base > 0.0) || !(params.s_base > 0.0)) {
        throw std::invalid_argument("spectra: base quantities must be positive");
    }
    if (params.filter_l < 0.0 || params.kp_cc < 0.0 || params.ki_cc < 0.0 ||
        params.kp_pll < 0.0 || params.ki_pll < 0.0 || params.tau_f < 0.0) {
        throw std::invalid_argument("spectra: negative parameter");
    }
    if (!(op.power_factor > 0.0) || op.power_factor > 1.0) {
        throw std::invalid_argument("spectra: power factor outside (0, 1]");
    }
    if (!std::isfinite(op.p_active_mw) || !std::isfinite(op.u_pcc) ||
        !(op.u_pcc > 0.0)) {
        throw std::invalid_argument("spectra: invalid operating point");
    }
    DqAdmittanceCurve curve{grid, std::vector<Yblock>(grid.count)};
    std::string error;
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t t = 0; t < static_cast<std::ptrdiff_t>(grid.count); ++t) {
        try {
            const double f = grid.freq(static_cast<std::uint32_t>(t));
            curve.values[t] = admittance_at(params, op, f);
            check_finite(curve.values[t], f);
        } catch (const std::exception& e) {
#pragma omp critical
            if (error.empty()) error = e.what();
        }
    }
    if (!error.empty()) throw std::runtime_error(error);
    return curve;
}

Dataset gen_dataset(std::size_t n, std::uint64_t seed, const VscParams& params,
                    const OpRanges& ranges, const FrequencyGrid& grid) {
    if (n < 1) throw std::invalid_argument("spectra: dataset needs n >= 1");
    if (ranges.p_min > ranges.p_max || ranges.pf_min > ranges.pf_max ||
        ranges.u_min > ranges.u_max) {
        throw std::invalid_argument("spectra: inverted operating-point range");
    }

    Dataset d;
    d.grid = grid;
    d.seed = seed;
    d.ops.resize(n);
    d.curves.resize(n);

    // Operating points come from per-index sub-seeds, so the draw is
    // independent of evaluation order.
    for (std::size_t i = 0; i < n; ++i) {
        Rng rng(mix_seed(seed, i));
        d.ops[i].p_active_mw = rng.uniform(ranges.p_min, ranges.p_max);
        d.ops[i].power_factor = rng.uniform(ranges.pf_min, ranges.pf_max);
        d.ops[i].u_pcc = rng.uniform(ranges.u_min, ranges.u_max);
    }

    std::string error;
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
        try {
            d.curves[i] = synth_vsc_admittance(params, d.ops[i], grid);
        } catch (const std::exception& e) {
#pragma omp critical
            if (error.empty())
                error = "spectra: sample " + std::to_string(i) + ": " + e.what();
        }
    }
    if (!error.empty()) throw std::runtime_error(error);
    return d;
}

std::vector<AmpPhasePoint> amplitude_phase(const DqAdmittanceCurve& curve,
                                           Element element) {
    std::vector<AmpPhasePoint> out(curve.values.size());
    constexpr double rad2deg = 180.0 / 3.14159265358979323846;
    for (std::size_t t = 0; t < curve.values.size(); ++t) {
        const Yblock& y = curve.values[t];
        const cplx v = element == Element::Y11   ? y.y11
                       : element == Element::Y12 ? y.y12
                       : element == Element::Y21 ? y.y21
                                                 : y.y22;
        out[t] = {curve.grid.freq(static_cast<std::uint32_t>(t)), std::abs(v),
                  std::arg(v) * rad2deg};
    }
    return out;
}

// ---- "IMPS" file format ----------------------------------------------------
// Layout (little-endian):
//   magic "IMPS" | version u8=1 | T u32 | N u32 | f_start f64 | f_step f64 |
//   seed u64 | per sample: P f64, cosphi f64, u_pcc f64,
//   then T blocks of (Y11,Y12,Y21,Y22) x (re,im) f64.

std::vector<std::uint8_t> encode_dataset(const Dataset& d) {
    binio::Writer w;
    w.magic("IMPS");
    w.u8(1);
    w.u32(d.grid.count);
    w.u32(static_cast<std::uint32_t>(d.size()));
    w.f64(d.grid.f_start);
    w.f64(d.grid.f_step);
    w.u64(d.seed);
    for (std::size_t i = 0; i < d.size(); ++i) {
        w.f64(d.ops[i].p_active_mw);
        w.f64(d.ops[i].power_factor);
        w.f64(d.ops[i].u_pcc);
        for (const Yblock& y : d.curves[i].values) {
            for (const cplx* v : {&y.y11, &y.y12, &y.y21, &y.y22}) {
                w.f64(v->real());
                w.f64(v->imag());
            }
        }
    }
    return w.data();
}

Dataset decode_dataset(const std::vector<std::uint8_t>& bytes,
                       const std::string& context) {
    binio::Reader r(bytes.data(), bytes.size(), context);
    r.expect_magic("IMPS");
    const auto version = r.u8();
    if (version != 1) r.fail("unsupported version " + std::to_string(version), 4);
    Dataset d;
    d.grid.count = r.u32();
    const std::uint32_t n = r.u32();
    d.grid.f_start = r.f64();
    d.grid.f_step = r.f64();
    d.seed = r.u64();
    d.ops.resize(n);
    d.curves.resize(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        d.ops[i].p_active_mw = r.f64();
        d.ops[i].power_factor = r.f64();
        d.ops[i].u_pcc = r.f64();
        d.curves[i].grid = d.grid;
        d.curves[i].values.resize(d.grid.count);
        for (Yblock& y : d.curves[i].values) {
            for (cplx* v : {&y.y11, &y.y12, &y.y21, &y.y22}) {
                const double re = r.f64();
                const double im = r.f64();
                *v = cplx(re, im);
            }
        }
    }
    if (r.remaining() != 0) {
        r.fail(std::to_string(r.remaining()) + " trailing bytes", r.offset());
    }
    return d;
}

void write_dataset(const Dataset& d, const std::string& path) {
    binio::write_file(path, encode_dataset(d));
}

Dataset read_dataset(const std::string& path) {
    return decode_dataset(binio::read_file(path), path);
}

void write_curve_csv(const DqAdmittanceCurve& curve, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("spectra: cannot open " + path);
    f.precision(17);
    f << "f,element,real,imag\n";
    for (std::size_t t = 0; t < curve.values.size(); ++t) {
        const double freq = curve.grid.freq(static_cast<std::uint32_t>(t));
        const Yblock& y = curve.values[t];
        const cplx* vals[4] = {&y.y11, &y.y12, &y.y21, &y.y22};
        for (int e = 0; e < 4; ++e) {
            f << freq << ',' << element_name(static_cast<Element>(e)) << ','
              << vals[e]->real() << ',' << vals[e]->imag() << '\n';
        }
    }
}

}  // namespace impnet::spectra
