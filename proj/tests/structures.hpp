#pragma once

// Structures shared by the test suites.

#include <qwdr/heterostructure.hpp>

namespace qwdr::testing {

inline MaterialModel gaas() { return MaterialModel{1000.0, 0.067}; }

/// barrier | well | barrier with the given offset (meV) and well width (nm).
inline StructureSpec single_well(double well_nm, double barrier_meV, double barrier_nm = 10.0,
                                 const MaterialModel& m = gaas()) {
  const double x = barrier_meV / m.offset_coefficient;
  StructureSpec s;
  s.layers = {{barrier_nm, x, {}, {}}, {well_nm, 0.0, {}, {}}, {barrier_nm, x, {}, {}}};
  return s;
}

/// barrier | well | barrier | well | barrier, equal wells.
inline StructureSpec double_well(double well_nm, double central_nm, double barrier_meV,
                                 const MaterialModel& m = gaas()) {
  const double x = barrier_meV / m.offset_coefficient;
  StructureSpec s;
  s.layers = {{10.0, x, {}, {}}, {well_nm, 0.0, {}, {}}, {central_nm, x, {}, {}}, {well_nm, 0.0, {}, {}},
              {10.0, x, {}, {}}};
  return s;
}

/// closed barrier | well | thin barrier | open region at `floor_meV`.
inline StructureSpec open_well(double well_nm, double barrier_nm, double barrier_meV, double floor_meV,
                               const MaterialModel& m = gaas()) {
  StructureSpec s;
  const double x = barrier_meV / m.offset_coefficient;
  s.layers = {{10.0, x, {}, {}}, {well_nm, 0.0, {}, {}}, {barrier_nm, x, {}, {}},
              {20.0, floor_meV / m.offset_coefficient, {}, {}}};
  s.right = Boundary::open;
  return s;
}

}  // namespace qwdr::testing
