#ifndef PATANKAR_PATANKAR_HPP_
#define PATANKAR_PATANKAR_HPP_

#include "patankar/diagnostics.hpp"
#include "patankar/error.hpp"
#include "patankar/grid.hpp"
#include "patankar/integrators.hpp"
#include "patankar/linear_solver.hpp"
#include "patankar/pds.hpp"
#include "patankar/problems.hpp"
#include "patankar/space_disc.hpp"

#endif  // PATANKAR_PATANKAR_HPP_
