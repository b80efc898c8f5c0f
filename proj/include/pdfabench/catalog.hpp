#pragma once

#include "pdfabench/pdfa.hpp"

namespace pdfabench::catalog {

/// Two-state Even Process. State A emits 1 with probability q (moving to B)
/// and 0 otherwise (staying in A); B always emits 1 and returns to A.
Pdfa even_process(double q = 0.5);

/// Single-state i.i.d. process with p(1) = p_one.
Pdfa biased_coin(double p_one = 0.5);

/// Deterministic alternation: A emits 1 to B, B emits 0 to A.
Pdfa period_two();

/// Three-state Neven Process. A emits 1 with probability q (to B) or 0 (to C);
/// B emits 1 with probability p_b_one and returns to A on either symbol;
/// C emits 0 and returns to A.
Pdfa neven_process(double q = 0.5, double p_b_one = 0.5);

}  // namespace pdfabench::catalog
