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

#ifndef NFRA_SPHERICAL_HARMONICS_HPP
#define NFRA_SPHERICAL_HARMONICS_HPP

#include "nfra/array_geometry.hpp"
#include "nfra/types.hpp"

#include <span>
#include <vector>

namespace nfra
{
    // Largest supported degree for the basis dictionary (Q <= 1024)
    inline constexpr int kMaxBasisDegree = 31;
    inline constexpr int kMaxBasisSize = (kMaxBasisDegree + 1) * (kMaxBasisDegree + 1);

    struct BasisIndex
    {
        int degree = 0; // l >= 0
        int order = 0;  // -l <= u <= l

        friend bool operator==(const BasisIndex &, const BasisIndex &) = default;
    };

    // Truncated spherical-harmonics dictionary: the first Q (degree, order) pairs
    // sorted by degree, then by order: (0,0), (1,-1), (1,0), (1,1), (2,-2), ...
    // Entry k therefore depends on k alone, never on Q.
    class BasisSet
    {
    public:
        explicit BasisSet(int size);

        int size() const { return static_cast<int>(indices_.size()); }
        int max_degree() const { return indices_.back().degree; }
        std::span<const BasisIndex> indices() const { return indices_; }
        const BasisIndex &operator[](std::size_t k) const { return indices_[k]; }

        // (degree, order) of the k-th dictionary entry
        static BasisIndex index_at(int k);

    private:
        std::vector<BasisIndex> indices_;
    };

    // Associated Legendre function P_l^u(x) without the Condon-Shortley phase
    // (P_1^1(x) = +sqrt(1 - x^2)). Negative orders follow
    //     P_l^{-u} = (-1)^u (l - u)! / (l + u)! P_l^u.
    double assoc_legendre(int degree, int order, double x);

    // Complex spherical harmonic
    //     Y_lu(el, az) = (-1)^u N_lu P_l^u(cos el) exp(j u az),
    //     N_lu = sqrt((2l + 1) / (4 pi) (l - u)! / (l + u)!).
    cdouble sh_eval(const BasisIndex &index, const Aod &aod);

    // b(theta): k-th entry is sh_eval(basis[k], aod)
    CVector basis_vector(const BasisSet &basis, const Aod &aod);

    // Same as basis_vector, written into `out` (size Q) without allocating
    void basis_vector_into(const BasisSet &basis, const Aod &aod, std::span<cdouble> out);

    // b(theta) and its partial derivatives with respect to elevation and azimuth.
    // Any output span may be empty to skip it.
    void basis_gradient_into(const BasisSet &basis, const Aod &aod, std::span<cdouble> value,
                             std::span<cdouble> d_elevation, std::span<cdouble> d_azimuth);

    // Product rule over the sphere: uniform azimuth grid times a uniform
    // mid-point elevation grid carrying Fejer weights (the sin(el) Jacobian is
    // folded into the weights). Exact for band-limited integrands of degree
    // below the point counts.
    struct SphereQuadrature
    {
        int elevation_points = 0;
        int azimuth_points = 0;

        // Smallest accepted resolution per axis for a dictionary of max degree l
        static int minimum_points(int max_degree);
        static SphereQuadrature minimum_for(int max_degree);
    };

    // Numerical integral of b(theta) b(theta)^H over the unit sphere
    CMatrix gram_matrix(const BasisSet &basis, const SphereQuadrature &quadrature);
}

#endif
