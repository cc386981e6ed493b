// Central numeric knobs. Every tolerance used by the library lives here so
// that tests and the CLI override exactly one set of constants.
#pragma once

#include <cstddef>
#include <cstdint>

namespace torusflow {

inline constexpr double kPi = 3.14159265358979323846;

/// Relative tolerance for floating-point reconstruction identities
/// (coordinate round-trips, on-set residuals, projection splits).
inline constexpr double kReconstructionTol = 1e-9;

/// Tolerance for torus membership and relation confirmation, measured in the
/// annihilator-covector metric (distance of c·(q - P) to the nearest integer).
inline constexpr double kMembershipTol = 1e-6;

/// Fractional coordinates closer than this to 1 are snapped to 0 so that
/// points that are lattice vectors up to roundoff reduce to the origin.
inline constexpr double kFracSnapEps = 1e-12;

/// Hard cap on height-ball enumeration: (2T+1)^{2n} above this is rejected.
inline constexpr std::uint64_t kEnumerationGuard = 100'000'000;

/// Scaling constant for the lattice-reduction relation proposer.
inline constexpr double kRelationScale = 1e6;

/// Exhaustive relation search runs when the covector box has at most this
/// many candidates; beyond it only reduction proposals are confirmed.
inline constexpr std::uint64_t kExhaustionCap = 1u << 27;

/// Greedy peeling fits at most this many closure components.
inline constexpr int kMaxClosureComponents = 8;

/// Membership-verification grids fall back to a low-discrepancy fill with
/// this many points when the full grid would be larger.
inline constexpr std::size_t kGridPointCap = 20'000;

/// Growth-probe factor: the projected maxima must grow by at least this
/// factor across the last three schedule radii to count as unbounded.
inline constexpr double kGrowthFactor = 1.5;

/// Default finite-torsion search bound for stabilizer computations.
inline constexpr int kDefaultTorsionBound = 12;

/// Default coefficient bound for integer-relation detection.
inline constexpr int kDefaultRelationBound = 50;

}  // namespace torusflow
