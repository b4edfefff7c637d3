#pragma once

#include <cstddef>

namespace whdpd::detail {

/// sum a[i] * b[i] with four interleaved partial sums; fixed order, so
/// results are reproducible.
inline double dot(const double* a, const double* b, std::ptrdiff_t n) noexcept {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::ptrdiff_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    for (; i < n; ++i) s0 += a[i] * b[i];
    return (s0 + s1) + (s2 + s3);
}

}  // namespace whdpd::detail
