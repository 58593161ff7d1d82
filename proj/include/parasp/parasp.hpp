#pragma once

// Numerical toolkit for weighted parabolic Sobolev-Poincaré inequalities:
// parabolic A_p weights, caloric Riesz potentials, maximal functions,
// distributional solutions of u_t = div G, and the verification drivers
// that estimate the constants data-side.

#include "parasp/calculus.hpp"
#include "parasp/config.hpp"
#include "parasp/driver.hpp"
#include "parasp/field_io.hpp"
#include "parasp/generators.hpp"
#include "parasp/geometry.hpp"
#include "parasp/grid.hpp"
#include "parasp/operators.hpp"
#include "parasp/report_io.hpp"
#include "parasp/summed_area.hpp"
#include "parasp/verify.hpp"
#include "parasp/weights.hpp"
