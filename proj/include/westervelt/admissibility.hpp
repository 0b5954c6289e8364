#pragma once

// Source-admissibility checks for the three-experiment linearized-uniqueness
// construction, on the disk geometry.
//
// The linearized data of experiments j = 1, 2, 3 (with drive 3 the doubled
// drive 1) separate the three coefficients if, for each impedance-Laplacian
// eigenvalue lambda_ell, the 3x3 sensitivity matrix
//     A^ell_{j,q} = laplace transform of the q-column response of drive j,
// evaluated at the resolvent pole p_ell, has nonzero determinant. With
// psi_3 = 2 psi_1 the determinant factors as
//     det A^ell = 2 (A_{1,s} A_{2,b} - A_{2,s} A_{1,b}) * A_{1,eta},
// so the check reduces to a 2x2 separation condition between the two base
// drives plus nonvanishing of the nonlinearity column at every pole.
//
// Also hosts the radial Bessel machinery: impedance eigenvalues on the disk,
// complex-argument J0/J1, and the analytic Robin-Helmholtz radial solution
// used as a cross-module oracle.

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include "westervelt/excitation.hpp"

namespace westervelt {

namespace bessel {

/// J0 and J1 for complex argument by power series; accurate to ~1e-14 for
/// |z| <= 12 (the guard throws beyond that, where the series loses digits).
inline std::complex<double> J0(std::complex<double> z) {
    if (std::abs(z) > 12.0)
        throw std::invalid_argument("bessel::J0: |z| > 12 outside series validity");
    const std::complex<double> q = -0.25 * z * z;
    std::complex<double> term(1.0, 0.0), sum(1.0, 0.0);
    for (int k = 1; k <= 60; ++k) {
        term *= q / static_cast<double>(k * k);
        sum += term;
        if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    }
    return sum;
}

inline std::complex<double> J1(std::complex<double> z) {
    if (std::abs(z) > 12.0)
        throw std::invalid_argument("bessel::J1: |z| > 12 outside series validity");
    const std::complex<double> q = -0.25 * z * z;
    std::complex<double> term(1.0, 0.0), sum(1.0, 0.0);
    for (int k = 1; k <= 60; ++k) {
        term *= q / static_cast<double>(k * (k + 1));
        sum += term;
        if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    }
    return 0.5 * z * sum;
}

/// Real J_n and its derivative (recurrence J_n' = J_{n-1} - (n/x) J_n).
inline double Jn(int n, double x) { return std::cyl_bessel_j(static_cast<double>(n), x); }

inline double Jn_prime(int n, double x) {
    if (n == 0) return -Jn(1, x);
    return Jn(n - 1, x) - (static_cast<double>(n) / x) * Jn(n, x);
}

}  // namespace bessel

/// One eigenvalue of the impedance (Robin) Laplacian on the disk.
struct ImpedanceEig {
    double lambda = 0.0;  ///< eigenvalue, lambda = (x/R)^2
    double x_root = 0.0;  ///< root of gamma J_n(x) + (x/R) J_n'(x)
    int n = 0;            ///< angular order
    int k = 0;            ///< radial root index (1-based) within order n
    int multiplicity = 1; ///< 1 for n = 0, else 2
};

/// Smallest `count` eigenvalues of -Laplace with boundary condition
/// gamma u + du/dn = 0 on the disk of radius R, listed ascending WITH
/// multiplicity (each n >= 1 eigenvalue appears twice). Angular orders up to
/// `max_order` are scanned; roots are bisected to ~1e-12 relative.
inline std::vector<ImpedanceEig> impedance_eigs_disk(double gamma, double R, int count,
                                                     int max_order = -1) {
    if (!(gamma > 0) || !(R > 0))
        throw std::invalid_argument("impedance_eigs_disk: gamma and R must be positive");
    if (count < 1) throw std::invalid_argument("impedance_eigs_disk: count must be >= 1");
    if (max_order < 0) max_order = 2 * count;

    auto f = [&](int n, double x) {
        return gamma * bessel::Jn(n, x) + (x / R) * bessel::Jn_prime(n, x);
    };

    std::vector<ImpedanceEig> found;
    double X = 6.0;
    const double dx = 0.005;
    for (int attempt = 0; attempt < 12; ++attempt) {
        found.clear();
        for (int n = 0; n <= max_order; ++n) {
            // The first root of order n lies above ~n (below the first zero
            // of J_n'); skip orders that cannot contribute below X.
            if (static_cast<double>(n) > X) break;
            int k = 0;
            double x_prev = dx, f_prev = f(n, x_prev);
            for (double x = 2 * dx; x <= X; x += dx) {
                const double fx = f(n, x);
                if (f_prev == 0.0) {  // grid point hit a root exactly
                    ++k;
                    found.push_back({(x_prev / R) * (x_prev / R), x_prev, n, k, n == 0 ? 1 : 2});
                } else if (f_prev * fx < 0.0) {
                    double lo = x_prev, hi = x, flo = f_prev;
                    for (int it = 0; it < 100 && (hi - lo) > 1e-14 * hi; ++it) {
                        const double mid = 0.5 * (lo + hi);
                        const double fm = f(n, mid);
                        if (flo * fm <= 0.0) {
                            hi = mid;
                        } else {
                            lo = mid;
                            flo = fm;
                        }
                    }
                    const double xr = 0.5 * (lo + hi);
                    ++k;
                    found.push_back({(xr / R) * (xr / R), xr, n, k, n == 0 ? 1 : 2});
                }
                x_prev = x;
                f_prev = fx;
            }
        }
        // Expand each n >= 1 root into its two-dimensional eigenspace.
        std::vector<ImpedanceEig> flat;
        for (const auto& e : found)
            for (int c = 0; c < e.multiplicity; ++c) flat.push_back(e);
        std::sort(flat.begin(), flat.end(),
                  [](const ImpedanceEig& a, const ImpedanceEig& b) { return a.lambda < b.lambda; });
        // Accept only if the requested count is complete with a safety band:
        // any root beyond X would have x > X, so entries with x <= X - 1 are
        // guaranteed to be the true smallest ones.
        if (static_cast<int>(flat.size()) >= count &&
            flat[static_cast<std::size_t>(count - 1)].x_root <= X - 1.0) {
            flat.resize(static_cast<std::size_t>(count));
            return flat;
        }
        X *= 1.6;
    }
    throw std::runtime_error(
        "impedance_eigs_disk: root bracketing failed to collect enough eigenvalues in x in (0, " +
        std::to_string(X) + ")");
}

/// Resolvent pole for eigenvalue lambda: the negative-branch root of
///     b0 z^2 + lambda z + s0 lambda = 0,
/// i.e. z = (-lambda - sqrt(lambda^2 - 4 b0 s0 lambda)) / (2 b0), with the
/// square root turning imaginary when lambda < 4 b0 s0. Re(z) < 0 always.
inline std::complex<double> pole(double b0, double s0, double lambda) {
    if (!(b0 > 0) || !(s0 > 0) || !(lambda > 0))
        throw std::invalid_argument("pole: b0, s0, lambda must be positive");
    const double disc = lambda * lambda - 4.0 * b0 * s0 * lambda;
    std::complex<double> root;
    if (disc >= 0.0) {
        root = std::complex<double>((-lambda - std::sqrt(disc)) / (2.0 * b0), 0.0);
    } else {
        root = std::complex<double>(-lambda / (2.0 * b0), -std::sqrt(-disc) / (2.0 * b0));
    }
    return root;
}

/// Alias matching the operation name used by the drivers.
inline std::complex<double> poles(double b0, double s0, double lambda) {
    return pole(b0, s0, lambda);
}

enum class SensitivityColumn { S, B, Eta };

namespace detail {

/// phi(w) = (1 - e^{-w}) / w, the removable-singularity kernel of all the
/// periodic Laplace transforms here; series branch near w = 0.
inline std::complex<double> phi_kernel(std::complex<double> w) {
    if (std::abs(w) < 1e-4) {
        return 1.0 - w / 2.0 + w * w / 6.0 - w * w * w / 24.0 + w * w * w * w / 120.0;
    }
    return (1.0 - std::exp(-w)) / w;
}

/// Exponential-free sensitivity-row entries: the full transforms are
/// entry * (z T phi(z T)) = entry * (1 - e^{-zT}); margins use ratios where
/// the common row factor cancels, so these stay finite for deep poles.
struct RowEntries {
    std::complex<double> s, b, eta;
};

inline RowEntries reduced_row(const ExcitationSpec& spec, std::complex<double> z) {
    const double w = spec.omega();
    const double A = spec.effective_amplitude();
    const double a = spec.a_offset;
    const std::complex<double> z2 = z * z;
    RowEntries r;
    // A_s = 2 phi(zT) [a + z^2/(z^2+w^2)] * A  =>  reduced: divide by zT phi.
    // Work with the factorized forms: full = (1 - e^{-zT}) * reduced.
    // reduced_s = (2/(zT)) [a + z^2/(z^2+w^2)] * A
    const std::complex<double> zT = z * spec.T;
    r.s = 2.0 * A * (a + z2 / (z2 + w * w)) / zT;
    // A_b = -2 z^2 phi(zT) A (a+1) + z^2 A_s  =>  reduced_b:
    r.b = -2.0 * A * (a + 1.0) * z2 / zT + z2 * r.s;
    // A_eta = -4 w^2 z^2 phi(zT) [a/(z^2+w^2) + 1/(z^2+4w^2)] A^2, so the
    // reduced value (full divided by 1 - e^{-zT} = zT phi) is -4 w^2 (z/T) [...] A^2.
    r.eta = -4.0 * w * w * (z / spec.T) * (a / (z2 + w * w) + 1.0 / (z2 + 4.0 * w * w)) * A * A;
    return r;
}

}  // namespace detail

/// Periodic Laplace transforms of the three linearized source responses for
/// drive `spec`: (2/T) int_0^T q(t) e^{-zt} dt with q = psi (column S),
/// q = psi'' (column B), q = (psi^2)'' (column Eta), psi = A (a + cos wt).
/// Closed forms with the removable singularity at z = 0 built in.
inline std::complex<double> laplace_A(SensitivityColumn which, const ExcitationSpec& spec,
                                      std::complex<double> z) {
    spec.validate();
    const double w = spec.omega();
    const double A = spec.effective_amplitude();
    const double a = spec.a_offset;
    const std::complex<double> z2 = z * z;
    const std::complex<double> phi = detail::phi_kernel(z * spec.T);
    switch (which) {
        case SensitivityColumn::S:
            // 2 A phi(zT) [a + z^2/(z^2+w^2)]; value 2 A a at z = 0.
            if (z == std::complex<double>(0.0, 0.0)) return std::complex<double>(2.0 * A * a, 0.0);
            return 2.0 * A * phi * (a + z2 / (z2 + w * w));
        case SensitivityColumn::B: {
            // (2/T)(e^{-zT}-1)(psi'(0) + z psi(0)) + z^2 A_s, psi'(0) = 0.
            const std::complex<double> As =
                (z == std::complex<double>(0.0, 0.0))
                    ? std::complex<double>(2.0 * A * a, 0.0)
                    : 2.0 * A * phi * (a + z2 / (z2 + w * w));
            return -2.0 * z2 * phi * A * (a + 1.0) + z2 * As;
        }
        case SensitivityColumn::Eta:
            // -(2/T) * 2 w^2 z (1 - e^{-zT}) [a/(z^2+w^2) + 1/(z^2+4w^2)] A^2;
            // equals (2/T) int (psi^2)'' e^{-zt} dt (sign fixed by that
            // integral; quadrature-verified).
            return -4.0 * w * w * z2 * phi *
                   (a / (z2 + w * w) + 1.0 / (z2 + 4.0 * w * w)) * A * A;
    }
    throw std::logic_error("laplace_A: unreachable");
}

/// Per-eigenvalue admissibility row.
struct AdmissibilityRow {
    int ell = 0;                    ///< 1-based eigenvalue index
    double lambda = 0.0;            ///< impedance eigenvalue
    std::complex<double> pole;      ///< resolvent pole (negative branch)
    double abs_det = 0.0;           ///< |det A^ell| (factorized evaluation)
    double margin47 = 0.0;          ///< relative 2x2 separation margin in [0,1]
    double abs_A1eta = 0.0;         ///< |A_{1,eta}(pole)|
    double eta_margin = 0.0;        ///< relative nonvanishing margin in [0,1]
};

struct AdmissibilityReport {
    std::vector<AdmissibilityRow> rows;
    double min_margin = 0.0;  ///< min over rows of min(margin47, eta_margin)
    double floor = 0.0;       ///< pass threshold used
    bool admissible = false;
    std::string note;  ///< standing hypotheses that are not numerically decidable
};

/// Evaluate the uniqueness margins of the three-drive design over the first
/// L impedance eigenvalues. Drive 3 must be the doubling of drive 1.
/// Margins are scale-free ratios in [0, 1]; the report passes when every
/// margin exceeds `floor`.
inline AdmissibilityReport check_admissibility(const ExcitationSpec& spec1,
                                               const ExcitationSpec& spec2,
                                               const ExcitationSpec& spec3, double b0, double s0,
                                               double gamma, double R, int L,
                                               double floor = 1e-8) {
    spec1.validate();
    spec2.validate();
    spec3.validate();
    if (!spec1.is_doubled_by(spec3))
        throw std::invalid_argument(
            "check_admissibility: drive 3 must be the doubled drive 1 (psi_3 = 2 psi_1)");
    if (!(b0 > 0) || !(s0 > 0))
        throw std::invalid_argument("check_admissibility: background coefficients must be positive");

    AdmissibilityReport rep;
    rep.floor = floor;
    rep.note =
        "assumes the measurement arc is a nonempty open subset of the boundary "
        "containing a full boundary neighborhood (unique-continuation hypothesis); "
        "this is a standing assumption, not a computed check";

    const std::vector<ImpedanceEig> eigs = impedance_eigs_disk(gamma, R, L, 2 * L);
    rep.min_margin = 1.0;
    for (int ell = 1; ell <= L; ++ell) {
        const double lam = eigs[static_cast<std::size_t>(ell - 1)].lambda;
        const std::complex<double> p = pole(b0, s0, lam);

        AdmissibilityRow row;
        row.ell = ell;
        row.lambda = lam;
        row.pole = p;

        // Exponential-free row entries: full entry = (1 - e^{-p T_j}) * reduced,
        // and for Re(p) < 0 the omitted factor is provably nonzero, so all
        // zero/nonzero decisions can be made on the reduced values.
        const detail::RowEntries r1 = detail::reduced_row(spec1, p);
        const detail::RowEntries r2 = detail::reduced_row(spec2, p);

        const std::complex<double> t12 = r1.s * r2.b;
        const std::complex<double> t21 = r2.s * r1.b;
        const double denom47 = std::abs(t12) + std::abs(t21);
        row.margin47 = denom47 > 0.0 ? std::abs(t12 - t21) / denom47 : 0.0;

        // Nonlinearity column: ratio of |sum| to the sum of |terms| in the
        // bracket a/(p^2+w^2) + 1/(p^2+4w^2).
        {
            const double w = spec1.omega();
            const std::complex<double> p2 = p * p;
            const std::complex<double> ta = spec1.a_offset / (p2 + w * w);
            const std::complex<double> tb = 1.0 / (p2 + 4.0 * w * w);
            const double dn = std::abs(ta) + std::abs(tb);
            row.eta_margin = dn > 0.0 ? std::abs(ta + tb) / dn : 0.0;
        }

        // Absolute quantities from the full transforms (finite for the
        // pole depths reached by small eigenvalue counts).
        const std::complex<double> A1eta = laplace_A(SensitivityColumn::Eta, spec1, p);
        row.abs_A1eta = std::abs(A1eta);
        const std::complex<double> det47 =
            laplace_A(SensitivityColumn::S, spec1, p) * laplace_A(SensitivityColumn::B, spec2, p) -
            laplace_A(SensitivityColumn::S, spec2, p) * laplace_A(SensitivityColumn::B, spec1, p);
        row.abs_det = 2.0 * std::abs(det47) * row.abs_A1eta;

        rep.min_margin = std::min({rep.min_margin, row.margin47, row.eta_margin});
        rep.rows.push_back(row);
    }
    rep.admissible = rep.min_margin > floor;
    return rep;
}

/// Analytic radial solution of  -Delta u - ksq u = 0  in B_R(0) with
/// constant Robin data  gamma u + du/dn = g  on r = R:
///     u(r) = g J0(k r) / (gamma J0(k R) - k J1(k R)),  k = sqrt(ksq).
struct RadialRobinSolution {
    std::complex<double> k;
    std::complex<double> coef;

    std::complex<double> operator()(double r) const { return coef * bessel::J0(k * r); }
};

inline RadialRobinSolution bessel_helmholtz_disk(std::complex<double> k_sq, double gamma,
                                                 double R, std::complex<double> g_const) {
    if (!(gamma > 0)) throw std::invalid_argument("bessel_helmholtz_disk: gamma must be positive");
    RadialRobinSolution sol;
    sol.k = std::sqrt(k_sq);
    const std::complex<double> denom =
        gamma * bessel::J0(sol.k * R) - sol.k * bessel::J1(sol.k * R);
    const double scale = std::abs(gamma * bessel::J0(sol.k * R)) +
                         std::abs(sol.k * bessel::J1(sol.k * R)) + 1e-300;
    if (std::abs(denom) < 1e-12 * scale)
        throw std::runtime_error("bessel_helmholtz_disk: Robin denominator vanishes (resonance)");
    sol.coef = g_const / denom;
    return sol;
}

}  // namespace westervelt
