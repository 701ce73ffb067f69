#pragma once
// Glue between the test oracles and library types.
#include "oracles.hpp"
#include "rkf/state_space.hpp"

#include <cstddef>

namespace rkf::testing {

inline StateSpaceModel to_model(const TextbookModel& m, std::size_t horizon)
{
    return StateSpaceModel::time_invariant(m.A, m.B, m.C, m.D, m.x0, m.V0, horizon);
}

// The two-state example model used throughout the bundled configs.
inline StateSpaceModel example_model(std::size_t horizon = 500)
{
    Eigen::MatrixXd A(2, 2), B(2, 3), C(1, 2), D(1, 3);
    A << 0.1, 1, 0, 1.2;
    B << 0.01, 0, 0, 0, 0.01, 0;
    C << 1, -1;
    D << 0, 0, 0.1;
    return StateSpaceModel::time_invariant(A, B, C, D, Eigen::Vector2d::Zero(), 0.01 * Eigen::Matrix2d::Identity(),
                                           horizon);
}

} // namespace rkf::testing
