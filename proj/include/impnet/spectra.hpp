#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

namespace impnet::spectra {

using cplx = std::complex<double>;

// Arithmetic frequency grid: point t sits at f_start + t*f_step [Hz].
struct FrequencyGrid {
    double f_start = 1.0;
    double f_step = 1.0;
    std::uint32_t count = 0;

    double freq(std::uint32_t t) const { return f_start + t * f_step; }
    bool operator==(const FrequencyGrid&) const = default;
};

FrequencyGrid make_frequency_grid(double f_start, double f_step, std::uint32_t count);

// One 2x2 complex admittance sample, element order (dd, dq, qd, qq).
struct Yblock {
    cplx y11, y12, y21, y22;
    bool operator==(const Yblock&) const = default;
};

// Wideband dq admittance curve of one converter terminal [S].
struct DqAdmittanceCurve {
    FrequencyGrid grid;
    std::vector<Yblock> values;  // values.size() == grid.count
    bool operator==(const DqAdmittanceCurve&) const = default;
};

struct OperatingPoint {
    double p_active_mw = 1.0;    // MW
    double power_factor = 1.0;   // cos(phi), (0, 1]
    double u_pcc = 1.0;          // per-unit voltage
    bool operator==(const OperatingPoint&) const = default;
};

// Simplified VSC small-signal parameters (current loop + PLL + measurement
// filter behind an RL output filter).
struct VscParams {
    double filter_r = 0.003;     // ohm
    double filter_l = 1.0e-4;    // henry
    double kp_cc = 0.3;
    double ki_cc = 60.0;
    double kp_pll = 0.4;
    double ki_pll = 30.0;
    double tau_f = 2.0e-4;       // s
    double v_base = 690.0;       // volt
    double s_base = 2.0e6;       // volt-ampere
    double omega0 = 2.0 * 3.14159265358979323846 * 50.0;  // rad/s
};

struct OpRanges {
    double p_min = 0.2, p_max = 2.0;        // MW
    double pf_min = 0.9, pf_max = 1.0;
    double u_min = 0.95, u_max = 1.05;      // pu
};

struct Dataset {
    FrequencyGrid grid;
    std::vector<OperatingPoint> ops;
    std::vector<DqAdmittanceCurve> curves;
    std::uint64_t seed = 0;

    std::size_t size() const { return curves.size(); }
    bool operator==(const Dataset&) const = default;
};

// Closed-form dq admittance of the simplified VSC at the given operating
// point, evaluated over the grid. Throws on a singular impedance block,
// naming the frequency.
DqAdmittanceCurve synth_vsc_admittance(const VscParams& params,
                                       const OperatingPoint& op,
                                       const FrequencyGrid& grid);

// n operating points drawn uniformly per field from `ranges` with per-index
// sub-seeds; byte-reproducible for identical arguments regardless of
// parallelism.
Dataset gen_dataset(std::size_t n, std::uint64_t seed, const VscParams& params,
                    const OpRanges& ranges, const FrequencyGrid& grid);

enum class Element : int { Y11 = 0, Y12 = 1, Y21 = 2, Y22 = 3 };

inline const char* element_name(Element e) {
    switch (e) {
        case Element::Y11: return "Y11";
        case Element::Y12: return "Y12";
        case Element::Y21: return "Y21";
        default: return "Y22";
    }
}

struct AmpPhasePoint {
    double freq;       // Hz
    double magnitude;  // S
    double phase_deg;  // degrees
};

std::vector<AmpPhasePoint> amplitude_phase(const DqAdmittanceCurve& curve,
                                           Element element);

// "IMPS" binary dataset format, little-endian. read(write(d)) == d exactly.
void write_dataset(const Dataset& d, const std::string& path);
Dataset read_dataset(const std::string& path);
std::vector<std::uint8_t> encode_dataset(const Dataset& d);
Dataset decode_dataset(const std::vector<std::uint8_t>& bytes,
                       const std::string& context);

// CSV export of one curve: f,element,real,imag per row.
void write_curve_csv(const DqAdmittanceCurve& curve, const std::string& path);

}  // namespace impnet::spectra
