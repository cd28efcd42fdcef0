// SPDX-License-Identifier: Apache-2.0
//
// Reference minima of the full abscissa over the parameter interval for synthetic
// n = 200 families (default spec, seeds 1..10). Produced by tests/freeze_oracles.cpp:
// a 200-point grid over [-0.3, 0.2] with golden-section refinement, evaluating the full
// abscissa with the dense criss-cross solver.

#ifndef PSOPT_TESTS_FROZEN_HPP
#define PSOPT_TESTS_FROZEN_HPP

namespace frozen
{

struct SyntheticMin
{
  int seed;
  double x;
  double alpha;
};

inline constexpr SyntheticMin synthetic_n200[] = {
    {1, -0.0044167283230641058, 0.038101295097998464},
    {2, -0.13517906992442419, 0.12747793840058821},
    {3, -0.20815790524012451, 0.08686546899427082},
    {4, -0.10331176802524053, 0.08606810691321877},
    {5, -0.07602964813147188, 0.16991421007795943},
    {6, 0.028939080694510001, 0.090711012760945217},
    {7, 0.20000000000000001, 0.09048012416676561},
    {8, -0.09019002305751718, 0.10906703596703478},
    {9, -0.25392743264723183, 0.010674357318019828},
    {10, 0.10544922621504237, 0.058507594215199528},
};

} // namespace frozen

#endif // PSOPT_TESTS_FROZEN_HPP
