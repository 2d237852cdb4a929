// SPDX-License-Identifier: Apache-2.0
//
// nfra: near-field localization with reconfigurable antenna arrays
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef NFRA_TYPES_HPP
#define NFRA_TYPES_HPP

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <cstddef>
#include <vector>

namespace nfra
{
    using cdouble = std::complex<double>;
    using Vec3 = Eigen::Vector3d;
    using CVector = Eigen::VectorXcd;
    using CMatrix = Eigen::MatrixXcd;
    using Matrix5d = Eigen::Matrix<double, 5, 5>;

    inline constexpr double kSpeedOfLight = 3.0e8; // m/s
    inline constexpr double kPi = 3.14159265358979323846;

    // Axis-aligned box in meters. Bounds are inclusive.
    struct Box
    {
        Vec3 lower = Vec3::Zero();
        Vec3 upper = Vec3::Zero();

        bool empty() const { return (upper.array() < lower.array()).any(); }
        Vec3 center() const { return 0.5 * (lower + upper); }
        Vec3 extent() const { return upper - lower; }

        bool contains(const Vec3 &p, double slack = 0.0) const
        {
            return (p.array() >= lower.array() - slack).all() &&
                   (p.array() <= upper.array() + slack).all();
        }

        Vec3 clamp(const Vec3 &p) const { return p.cwiseMax(lower).cwiseMin(upper); }

        Box inflated(const Vec3 &margin) const { return {lower - margin, upper + margin}; }

        Box intersect(const Box &other) const
        {
            return {lower.cwiseMax(other.lower), upper.cwiseMin(other.upper)};
        }
    };

    // Number of points per axis of a regular lattice
    struct Lattice
    {
        int nx = 1;
        int ny = 1;
        int nz = 1;

        std::size_t size() const
        {
            return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) * static_cast<std::size_t>(nz);
        }
    };

    // Points at cell centers of an nx*ny*nz partition of the box. Every point is
    // strictly inside the box and offset half a cell from each face.
    std::vector<Vec3> cell_centered_lattice(const Box &region, const Lattice &lattice);

    // Points including both endpoints of every axis (a single point per axis
    // sits at the axis midpoint).
    std::vector<Vec3> inclusive_lattice(const Box &region, const Lattice &lattice);
}

#endif
