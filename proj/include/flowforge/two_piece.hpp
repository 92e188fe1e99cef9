#pragma once

#include "flowforge/program.hpp"

namespace flowforge {

// The map y_j = x_j + a * sigma_alpha(w . x + beta), identity on the other
// coordinates. Compilable iff max(1, alpha) * |a * w_j| < 1.
struct TwoPieceMapSpec {
    std::size_t dim = 0;
    std::size_t j = 0; // updated coordinate (0-based)
    double a = 0.0;
    Vec w;
    double beta = 0.0;
    double alpha = 1.0;
};

// Throws DimensionMismatch / AlphaOutOfRange / ConditionViolated.
void validate_two_piece(const TwoPieceMapSpec& spec);

// Direct evaluation; the oracle for this module.
Vec eval_two_piece(const TwoPieceMapSpec& spec, const Vec& x);

// Interval enclosure of the image of a box (the ridge term is enclosed
// independently of the x_j term, so this over-approximates).
BoxDomain two_piece_image(const TwoPieceMapSpec& spec, const BoxDomain& k);

FlowProgram compile_two_piece(const TwoPieceMapSpec& spec, const BoxDomain& k);

} // namespace flowforge
