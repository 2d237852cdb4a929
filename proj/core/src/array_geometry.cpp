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

#include "nfra/array_geometry.hpp"
#include "nfra/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace nfra
{
    Aod direction_aod(const Vec3 &v)
    {
        const double r = v.norm();
        if (!(r > kCoincidenceTolerance))
            throw DegenerateGeometry("direction_aod: zero-length direction");

        Aod aod;
        aod.elevation = std::acos(std::clamp(v.z() / r, -1.0, 1.0));
        aod.azimuth = std::atan2(v.y(), v.x());
        if (aod.azimuth >= kPi) // atan2 may return +pi; keep [-pi, pi)
            aod.azimuth -= 2.0 * kPi;
        return aod;
    }

    ElementLayout ElementLayout::upa(const Vec3 &center, int rows, int cols, double spacing)
    {
        if (rows < 1 || cols < 1)
            throw InvalidArgument("ElementLayout::upa: rows and cols must be >= 1, got " +
                                  std::to_string(rows) + "x" + std::to_string(cols));
        if (!(spacing > 0.0) || !std::isfinite(spacing))
            throw InvalidArgument("ElementLayout::upa: spacing must be positive");
        if (!center.allFinite())
            throw InvalidArgument("ElementLayout::upa: center must be finite");

        ElementLayout layout;
        layout.center_ = center;
        layout.rows_ = rows;
        layout.cols_ = cols;
        layout.spacing_ = spacing;
        layout.positions_.reserve(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols));

        const double row_mid = 0.5 * (rows - 1);
        const double col_mid = 0.5 * (cols - 1);
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c)
                layout.positions_.push_back(center + Vec3(0.0, (c - col_mid) * spacing, (r - row_mid) * spacing));
        return layout;
    }

    CVector nearfield_arv(const ElementLayout &layout, const Vec3 &p, double wavelength)
    {
        if (!(wavelength > 0.0))
            throw InvalidArgument("nearfield_arv: wavelength must be positive");

        const double ref = (p - layout.center()).norm();
        if (ref <= kCoincidenceTolerance)
            throw DegenerateGeometry("nearfield_arv: position coincides with the array center");

        const double k = 2.0 * kPi / wavelength;
        CVector a(static_cast<Eigen::Index>(layout.size()));
        for (std::size_t m = 0; m < layout.size(); ++m)
        {
            const double dist = (p - layout.position(m)).norm();
            if (dist <= kCoincidenceTolerance)
                throw DegenerateGeometry("nearfield_arv: position coincides with element " + std::to_string(m));
            a[static_cast<Eigen::Index>(m)] = std::polar(1.0, -k * (dist - ref));
        }
        return a;
    }

    Aod element_aod(const ElementLayout &layout, std::size_t m, const Vec3 &p)
    {
        if (m >= layout.size())
            throw InvalidArgument("element_aod: element index out of range");
        const Vec3 v = p - layout.position(m);
        if (v.norm() <= kCoincidenceTolerance)
            throw DegenerateGeometry("element_aod: position coincides with element " + std::to_string(m));
        return direction_aod(v);
    }

    std::vector<Vec3> cell_centered_lattice(const Box &region, const Lattice &lattice)
    {
        if (region.empty())
            throw InvalidArgument("cell_centered_lattice: empty region");
        if (lattice.nx < 1 || lattice.ny < 1 || lattice.nz < 1)
            throw InvalidArgument("cell_centered_lattice: lattice counts must be >= 1");

        const Vec3 cell = region.extent().cwiseQuotient(Vec3(lattice.nx, lattice.ny, lattice.nz));
        std::vector<Vec3> points;
        points.reserve(lattice.size());
        for (int i = 0; i < lattice.nx; ++i)
            for (int j = 0; j < lattice.ny; ++j)
                for (int k = 0; k < lattice.nz; ++k)
                    points.push_back(region.lower + Vec3((i + 0.5) * cell.x(), (j + 0.5) * cell.y(), (k + 0.5) * cell.z()));
        return points;
    }

    std::vector<Vec3> inclusive_lattice(const Box &region, const Lattice &lattice)
    {
        if (region.empty())
            throw InvalidArgument("inclusive_lattice: empty region");
        if (lattice.nx < 1 || lattice.ny < 1 || lattice.nz < 1)
            throw InvalidArgument("inclusive_lattice: lattice counts must be >= 1");

        auto axis = [](double lo, double hi, int n, int i)
        { return n == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * i / (n - 1); };

        std::vector<Vec3> points;
        points.reserve(lattice.size());
        for (int i = 0; i < lattice.nx; ++i)
            for (int j = 0; j < lattice.ny; ++j)
                for (int k = 0; k < lattice.nz; ++k)
                    points.emplace_back(axis(region.lower.x(), region.upper.x(), lattice.nx, i),
                                        axis(region.lower.y(), region.upper.y(), lattice.ny, j),
                                        axis(region.lower.z(), region.upper.z(), lattice.nz, k));
        return points;
    }
}
