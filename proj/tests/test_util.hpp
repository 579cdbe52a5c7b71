#pragma once

#include "susp/rng.hpp"
#include "susp/tensor.hpp"

namespace susp::testutil {

inline Vec3 random_vec(RngStream& rng, double scale = 1.0) {
    return {scale * (2.0 * rng.next_double() - 1.0),
            scale * (2.0 * rng.next_double() - 1.0),
            scale * (2.0 * rng.next_double() - 1.0)};
}

inline Vec3 random_unit(RngStream& rng) {
    for (;;) {
        const Vec3 v = random_vec(rng);
        const double n = v.norm();
        if (n > 1e-3 && n <= 1.0) return v / n;
    }
}

inline StrainTensor random_strain(RngStream& rng, double scale = 1.0) {
    Mat3 m;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) m(i, j) = scale * (2.0 * rng.next_double() - 1.0);
    return sym_trace_free_project(m);
}

inline StrainTensor random_unit_strain(RngStream& rng) {
    const StrainTensor s = random_strain(rng);
    return s * (1.0 / s.norm());
}

}  // namespace susp::testutil
