#pragma once

namespace toss2d {

/// base^exp for nonnegative integer exponents, by binary exponentiation.
/// Used everywhere a probability is raised to a count (repetitions, atom
/// powers) so that identities like OP_nrep = (OP_1)^nrep hold bit-exactly,
/// with the same multiplication pattern on every path.
inline double ipow(double base, unsigned long long exp) {
    double result = 1.0;
    while (exp != 0) {
        if (exp & 1ULL) result *= base;
        exp >>= 1;
        if (exp != 0) base *= base;
    }
    return result;
}

}  // namespace toss2d
