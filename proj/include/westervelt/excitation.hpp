#pragma once

// Excitation descriptions: time-periodic boundary drives of the form
//     g(x, t) = A * phi(x) * psi(t),   psi(t) = a + cos(omega t),
// where the offset a is restricted to the set on which the nonlinearity
// column of the sensitivity matrix provably stays nonzero at every pole:
// a in (-inf, -1) U (-1/4, inf). The third experiment of the uniqueness
// construction uses the doubled drive psi_3 = 2 psi_1.

#include <cmath>
#include <stdexcept>
#include <string>

namespace westervelt {

enum class PsiKind {
    CosPlusOffset,         ///< psi(t) = a + cos(omega t)
    DoubledCosPlusOffset,  ///< psi(t) = 2 (a + cos(omega t))
};

/// One experiment's boundary excitation.
struct ExcitationSpec {
    double T = 1.0;              ///< period [s]
    double a_offset = 1.0;       ///< dimensionless offset a
    double amplitude = 1.0;      ///< scaling A > 0
    PsiKind psi_kind = PsiKind::CosPlusOffset;
    std::string spatial_profile = "constant";  ///< "constant" or "bump[:theta0:width]"

    double omega() const { return 2.0 * M_PI / T; }

    /// Total temporal scaling including the doubling convention.
    double effective_amplitude() const {
        return psi_kind == PsiKind::DoubledCosPlusOffset ? 2.0 * amplitude : amplitude;
    }

    void validate() const {
        if (!(T > 0)) throw std::invalid_argument("ExcitationSpec: period must be positive");
        if (!(amplitude > 0))
            throw std::invalid_argument("ExcitationSpec: amplitude must be positive");
        const bool ok = a_offset < -1.0 || a_offset > -0.25;
        if (!ok)
            throw std::invalid_argument(
                "ExcitationSpec: offset must lie in (-inf,-1) U (-1/4,inf)");
    }

    /// True when `other` is this drive doubled (psi_other = 2 psi_this).
    bool is_doubled_by(const ExcitationSpec& other) const {
        const bool same_shape = other.T == T && other.a_offset == a_offset &&
                                other.spatial_profile == spatial_profile;
        if (!same_shape) return false;
        return other.effective_amplitude() == 2.0 * effective_amplitude();
    }
};

}  // namespace westervelt
