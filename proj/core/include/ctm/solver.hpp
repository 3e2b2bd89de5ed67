#pragma once

#include <span>

#include "ctm/diffusion.hpp"
#include "ctm/teacher.hpp"

namespace ctm {

// Second-order Heun integration of the probability-flow ODE along an explicit
// strictly decreasing positive time path (predictor plus trapezoidal
// corrector, two drift evaluations per segment; Karras et al. 2022, Alg. 1).
Vec heun_path(const TeacherModel& teacher, Label c, Vec z, std::span<const double> times);

// Grid-indexed form: integrate from grid[i_from] down to grid[i_to].
// i_from == i_to returns z unchanged.
Vec heun_solve(const TeacherModel& teacher, Label c, Vec z, const KarrasGrid& grid,
               int i_from, int i_to);

// Guided transport: omega * Solver(cond) + (1 - omega) * Solver(uncond),
// combined once at the endpoint. The unconditional label, omega == 1 and
// omega == 0 collapse to a single branch so those identities hold bit-exactly.
Vec cfg_solve(const TeacherModel& teacher, Label c, double omega, Vec z, const KarrasGrid& grid,
              int i_from, int i_to);

}  // namespace ctm
