#include "ctm/solver.hpp"

#include <stdexcept>

namespace ctm {

Vec heun_path(const TeacherModel& teacher, Label c, Vec z, std::span<const double> times) {
  if (times.size() < 1) throw std::invalid_argument("heun_path: empty time path");
  for (std::size_t i = 0; i + 1 < times.size(); ++i)
    if (!(times[i] > times[i + 1]) || !(times[i + 1] > 0.0))
      throw std::invalid_argument("heun_path: times must be strictly decreasing and positive");

  Vec z2(z.size());
  for (std::size_t i = 0; i + 1 < times.size(); ++i) {
    const double t = times[i];
    const double t_next = times[i + 1];
    const double h = t_next - t;  // negative
    const Vec d1 = teacher.pf_ode_rhs(c, z, t);
    for (std::size_t j = 0; j < z.size(); ++j) z2[j] = z[j] + h * d1[j];
    const Vec d2 = teacher.pf_ode_rhs(c, z2, t_next);
    for (std::size_t j = 0; j < z.size(); ++j) z[j] += h * 0.5 * (d1[j] + d2[j]);
  }
  return z;
}

Vec heun_solve(const TeacherModel& teacher, Label c, Vec z, const KarrasGrid& grid,
               int i_from, int i_to) {
  if (i_from < 0 || i_to >= grid.size() || i_from > i_to)
    throw std::invalid_argument("heun_solve: bad grid segment (need i_from <= i_to on the grid)");
  if (i_from == i_to) return z;
  return heun_path(teacher, c, std::move(z),
                   std::span<const double>(grid.t.data() + i_from, std::size_t(i_to - i_from) + 1));
}

Vec cfg_solve(const TeacherModel& teacher, Label c, double omega, Vec z, const KarrasGrid& grid,
              int i_from, int i_to) {
  if (!c || omega == 0.0) return heun_solve(teacher, {}, std::move(z), grid, i_from, i_to);
  if (omega == 1.0) return heun_solve(teacher, c, std::move(z), grid, i_from, i_to);
  const Vec cond = heun_solve(teacher, c, z, grid, i_from, i_to);
  const Vec unc = heun_solve(teacher, {}, std::move(z), grid, i_from, i_to);
  Vec out(cond.size());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = omega * cond[j] + (1.0 - omega) * unc[j];
  return out;
}

}  // namespace ctm
