#pragma once

// Physical channel model for a diffusive molecular link with uniform flow and
// enzymatic degradation, observed by a transparent (non-absorbing) spherical
// receiver that counts molecules at discrete sample times.

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace mcmf {

struct ChannelParams {
    double n_tx = 0.0;          // molecules released per "1" symbol
    double v_rx = 0.0;          // receiver volume, m^3
    double d = 0.0;             // transmitter-receiver distance, m
    double diff_coeff = 0.0;    // diffusion coefficient, m^2/s
    double enzyme_conc = 0.0;   // enzyme concentration; only kappa*enzyme_conc matters
    double kappa = 0.0;         // degradation reaction rate; kappa*enzyme_conc has units 1/s
    double v_par = 0.0;         // flow velocity along the tx-rx axis, m/s
    double v_perp = 0.0;        // flow velocity perpendicular to the axis, m/s
    double c_ext = 0.0;         // expected external interference count per sample

    double degradation_rate() const { return kappa * enzyme_conc; }

    void validate() const {
        if (!(n_tx >= 0.0)) throw std::invalid_argument("channel: n_tx >= 0 violated");
        if (!(v_rx > 0.0)) throw std::invalid_argument("channel: v_rx > 0 violated");
        if (!(d > 0.0)) throw std::invalid_argument("channel: d > 0 violated");
        if (!(diff_coeff > 0.0)) throw std::invalid_argument("channel: diff_coeff > 0 violated");
        if (!(c_ext >= 0.0)) throw std::invalid_argument("channel: c_ext >= 0 violated");
        if (!(kappa * enzyme_conc >= 0.0))
            throw std::invalid_argument("channel: degradation rate kappa*enzyme_conc >= 0 violated");
    }

    // Laboratory default parameter set: 50 nm receiver at 500 nm distance,
    // D = 4.3e-10 m^2/s, 1 mm/s flow in both components, and a degradation
    // product kappa*enzyme_conc = 2e-19 * 1e5 = 2e-14 /s (negligible).
    static ChannelParams lab_defaults(double n_tx, double c_ext = 2.0) {
        ChannelParams p;
        p.n_tx = n_tx;
        p.v_rx = 4.0 / 3.0 * M_PI * 50e-9 * 50e-9 * 50e-9;
        p.d = 500e-9;
        p.diff_coeff = 4.3e-10;
        p.enzyme_conc = 1e5;
        p.kappa = 2e-19;
        p.v_par = 1e-3;
        p.v_perp = 1e-3;
        p.c_ext = c_ext;
        return p;
    }

    // Same channel with the degradation product supplied directly, for callers
    // that have already resolved rate*concentration into a single 1/s figure.
    static ChannelParams with_degradation_rate(ChannelParams base, double k_d) {
        if (!(k_d >= 0.0))
            throw std::invalid_argument("channel: degradation rate kappa*enzyme_conc >= 0 violated");
        base.kappa = k_d;
        base.enzyme_conc = 1.0;
        return base;
    }
};

struct TimingConfig {
    int m_samples = 6;          // samples per symbol interval
    int l_taps = 3;             // channel memory in symbols
    double dt_norm = 0.25;      // sampling interval / reference time
    double t_symb_norm = 1.5;   // symbol duration / reference time

    void validate() const {
        if (m_samples < 1) throw std::invalid_argument("timing: m_samples >= 1 violated");
        if (l_taps < 1) throw std::invalid_argument("timing: l_taps >= 1 violated");
        if (!(dt_norm > 0.0)) throw std::invalid_argument("timing: dt_norm > 0 violated");
        if (!(t_symb_norm > 0.0)) throw std::invalid_argument("timing: t_symb_norm > 0 violated");
        if (m_samples * dt_norm > t_symb_norm * (1.0 + 1e-12))
            throw std::invalid_argument("timing: m_samples * dt_norm <= t_symb_norm violated");
    }
};

// Expected per-sample counts. Row l (0-based l-1) holds the contribution of a
// release l symbol intervals in the past; row 0 is the desired-signal vector.
struct Cir {
    Eigen::MatrixXd taps;

    int memory() const { return static_cast<int>(taps.rows()); }
    int samples() const { return static_cast<int>(taps.cols()); }
    Eigen::VectorXd desired_signal() const { return taps.row(0).transpose(); }

    void validate() const {
        if (taps.rows() < 1 || taps.cols() < 1)
            throw std::invalid_argument("cir: at least one tap row and one sample required");
        if (!taps.allFinite() || (taps.array() < 0.0).any())
            throw std::invalid_argument("cir: entries must be finite and >= 0");
    }
};

// Expected number of molecules inside the receiver volume at time t after a
// point release of n_tx molecules, with advection, diffusion and first-order
// degradation. Zero for t <= 0 (nothing is observed before the release).
inline double expected_concentration(double t, const ChannelParams& p) {
    if (t <= 0.0) return 0.0;
    const double four_dt = 4.0 * p.diff_coeff * t;
    const double dx = p.d - p.v_par * t;
    const double dy = p.v_perp * t;
    const double expo = -p.degradation_rate() * t - (dx * dx + dy * dy) / four_dt;
    return p.n_tx * p.v_rx / std::pow(M_PI * four_dt, 1.5) * std::exp(expo);
}

// Time at which the expected-concentration curve peaks. Golden-section search
// on (1e-9 s, 10*d^2/(6D)], refined to 1e-9 relative width. The result does
// not depend on n_tx or v_rx, so the search runs on a unit-scaled copy.
inline double reference_time(const ChannelParams& p) {
    p.validate();
    if (p.n_tx == 0.0)
        throw std::domain_error("reference_time: expected concentration identically zero");

    ChannelParams unit = p;
    unit.n_tx = 1.0;
    unit.v_rx = 1.0;
    const auto curve = [&unit](double t) { return expected_concentration(t, unit); };

    const double lo = 1e-9;
    const double hi = 10.0 * unit.d * unit.d / (6.0 * unit.diff_coeff);

    // Underflow can flatten the whole bracket to zero for extreme parameters.
    bool any_positive = false;
    for (int i = 0; i <= 16 && !any_positive; ++i)
        any_positive = curve(lo * std::pow(hi / lo, i / 16.0)) > 0.0;
    if (!any_positive)
        throw std::domain_error("reference_time: expected concentration identically zero");

    const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - ratio * (b - a);
    double e = a + ratio * (b - a);
    double fc = curve(c), fe = curve(e);
    while (b - a > 1e-9 * 0.5 * (a + b)) {
        if (fc >= fe) {
            b = e;
            e = c;
            fe = fc;
            c = b - ratio * (b - a);
            fc = curve(c);
        } else {
            a = c;
            c = e;
            fc = fe;
            e = a + ratio * (b - a);
            fe = curve(e);
        }
    }
    return 0.5 * (a + b);
}

// Assemble the L x M tap matrix: sample m (1-based) of tap row l (1-based)
// reads the curve at ((l-1)*t_symb_norm + m*dt_norm) * t_ref.
inline Cir build_cir(const ChannelParams& p, const TimingConfig& tc) {
    tc.validate();
    const double t_ref = reference_time(p);
    Eigen::MatrixXd taps(tc.l_taps, tc.m_samples);
    for (int l = 0; l < tc.l_taps; ++l)
        for (int m = 0; m < tc.m_samples; ++m) {
            const double t = (l * tc.t_symb_norm + (m + 1) * tc.dt_norm) * t_ref;
            taps(l, m) = expected_concentration(t, p);
        }
    Cir cir{std::move(taps)};
    cir.validate();
    return cir;
}

}  // namespace mcmf
