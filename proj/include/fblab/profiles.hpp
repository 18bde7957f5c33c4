#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "fblab/grid.hpp"

namespace fbl {

/// Named nodal data generators. Spec strings look like
/// "affine:A=0.5" or "fourier:seed=7,modes=5,amp=0.3,offset=1".
/// Available profiles:
///   zero                          u = 0
///   affine      A,b               u = b + A (x1 + 1)/2   (0 at x1 = -1)
///   linear      q1,q2,b           u = b + q.x
///   cone        A,x0,y0           u = A |x - x0|
///   bump        A,w,x0,y0         smooth bump of width w, peak A
///   fourier     seed,modes,amp,b  random Fourier sum plus offset
///   harmonic-poly A,b             u = b + A (x1^2 - x2^2)   (b + A x1 in 1D)
///   sin         A,omega,b         u = b + A sin(omega x1)/omega
///   sqrtabs     A                 u = A |x1|^{1/2}
///   flat2d      b,q1,q2,delta     b + q.x + delta Re((x1 + i x2)^4)
ScalarField make_profile(const Grid& g, const std::string& spec);

/// Parses "name:key=val,..." into (name, params).
std::pair<std::string, std::map<std::string, double>> parse_profile_spec(
    const std::string& spec);

} // namespace fbl
