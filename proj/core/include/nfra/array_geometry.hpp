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

#ifndef NFRA_ARRAY_GEOMETRY_HPP
#define NFRA_ARRAY_GEOMETRY_HPP

#include "nfra/types.hpp"

#include <span>
#include <vector>

namespace nfra
{
    // Two points closer than this (m) are treated as coincident
    inline constexpr double kCoincidenceTolerance = 1e-9;

    // Departure angles in the global frame.
    // elevation: polar angle from +z in [0, pi]; azimuth: atan2(y, x) in [-pi, pi).
    struct Aod
    {
        double elevation = 0.0;
        double azimuth = 0.0;
    };

    // Angles of the direction vector `v`; throws DegenerateGeometry for a zero vector
    Aod direction_aod(const Vec3 &v);

    // Uniform planar array in the x = 0 plane (broadside +x).
    //
    // Element m = r * cols + c sits at
    //     center + [0, (c - (cols - 1) / 2) * spacing, (r - (rows - 1) / 2) * spacing]
    // so rows run along z and columns along y. The element centroid equals `center`.
    class ElementLayout
    {
    public:
        static ElementLayout upa(const Vec3 &center, int rows, int cols, double spacing);

        const Vec3 &center() const { return center_; }
        std::span<const Vec3> positions() const { return positions_; }
        const Vec3 &position(std::size_t m) const { return positions_[m]; }
        std::size_t size() const { return positions_.size(); }
        int rows() const { return rows_; }
        int cols() const { return cols_; }
        double spacing() const { return spacing_; }

    private:
        ElementLayout() = default;

        Vec3 center_ = Vec3::Zero();
        std::vector<Vec3> positions_;
        int rows_ = 0;
        int cols_ = 0;
        double spacing_ = 0.0;
    };

    // Spherical-wavefront array response, phase-referenced to the array center:
    //     a_m(p) = exp(-j 2pi/lambda (|p - p_m| - |p - p_center|))
    CVector nearfield_arv(const ElementLayout &layout, const Vec3 &p, double wavelength);

    // Angles of the unit vector from element m toward p
    Aod element_aod(const ElementLayout &layout, std::size_t m, const Vec3 &p);
}

#endif
