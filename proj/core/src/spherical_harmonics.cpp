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

#include "nfra/spherical_harmonics.hpp"
#include "nfra/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

namespace nfra
{
    namespace
    {
        constexpr std::size_t triangle_size(int max_degree)
        {
            return static_cast<std::size_t>(max_degree + 1) * static_cast<std::size_t>(max_degree + 2) / 2;
        }

        constexpr std::size_t tri(int l, int m)
        {
            return static_cast<std::size_t>(l) * static_cast<std::size_t>(l + 1) / 2 + static_cast<std::size_t>(m);
        }

        constexpr std::size_t kTableCapacity = triangle_size(kMaxBasisDegree);

        // Fully normalized Legendre values Pbar_lm = N_lm P_l^m(cos el), 0 <= m <= l <= L,
        // from the standard stable column recurrence. No Condon-Shortley phase.
        void normalized_legendre(int max_degree, double x, double s, std::span<double> table)
        {
            table[0] = 0.5 / std::sqrt(kPi);
            for (int m = 1; m <= max_degree; ++m)
                table[tri(m, m)] = std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * s * table[tri(m - 1, m - 1)];

            for (int m = 0; m < max_degree; ++m)
            {
                table[tri(m + 1, m)] = std::sqrt(2.0 * m + 3.0) * x * table[tri(m, m)];

                double a_prev = std::sqrt((4.0 * (m + 1) * (m + 1) - 1.0) / ((m + 1.0) * (m + 1.0) - 1.0 * m * m));
                for (int l = m + 2; l <= max_degree; ++l)
                {
                    const double a = std::sqrt((4.0 * l * l - 1.0) / (1.0 * l * l - 1.0 * m * m));
                    table[tri(l, m)] = a * (x * table[tri(l - 1, m)] - table[tri(l - 2, m)] / a_prev);
                    a_prev = a;
                }
            }
        }

        // d Pbar_lm / d el, using
        //   dP_l^m/d el = 1/2 [(l+m)(l-m+1) P_l^{m-1} - P_l^{m+1}]
        // rewritten for normalized values.
        void normalized_legendre_derivative(int max_degree, std::span<const double> table, std::span<double> deriv)
        {
            for (int l = 0; l <= max_degree; ++l)
            {
                for (int m = 0; m <= l; ++m)
                {
                    const double upper = m + 1 <= l ? table[tri(l, m + 1)] : 0.0;
                    if (m == 0)
                    {
                        deriv[tri(l, 0)] = -std::sqrt(1.0 * l * (l + 1)) * upper;
                    }
                    else
                    {
                        const double lower = table[tri(l, m - 1)];
                        deriv[tri(l, m)] = 0.5 * (std::sqrt(1.0 * (l + m) * (l - m + 1)) * lower -
                                                  std::sqrt(1.0 * (l + m + 1) * (l - m)) * upper);
                    }
                }
            }
        }

        void check_index(int degree, int order, const char *who)
        {
            if (degree < 0 || order < -degree || order > degree)
                throw InvalidArgument(std::string(who) + ": invalid (degree, order) = (" + std::to_string(degree) + ", " +
                                      std::to_string(order) + ")");
        }

        double condon_free_sign(int order) { return (order >= 0 && (order & 1)) ? -1.0 : 1.0; }
    }

    BasisSet::BasisSet(int size)
    {
        if (size < 1)
            throw InvalidArgument("BasisSet: size must be >= 1, got " + std::to_string(size));
        const BasisIndex last = index_at(size - 1);
        if (last.degree > kMaxBasisDegree)
            throw InvalidArgument("BasisSet: size " + std::to_string(size) + " exceeds the supported maximum degree " +
                                  std::to_string(kMaxBasisDegree));
        indices_.reserve(static_cast<std::size_t>(size));
        for (int k = 0; k < size; ++k)
            indices_.push_back(index_at(k));
    }

    BasisIndex BasisSet::index_at(int k)
    {
        if (k < 0)
            throw InvalidArgument("BasisSet::index_at: negative index");
        int l = static_cast<int>(std::sqrt(static_cast<double>(k)));
        while (l * l > k)
            --l;
        while ((l + 1) * (l + 1) <= k)
            ++l;
        return {l, k - l * l - l};
    }

    double assoc_legendre(int degree, int order, double x)
    {
        check_index(degree, order, "assoc_legendre");
        if (!(std::abs(x) <= 1.0))
            throw InvalidArgument("assoc_legendre: |x| must be <= 1");

        const int k = std::abs(order);
        std::vector<double> table(triangle_size(degree));
        normalized_legendre(degree, x, std::sqrt(std::max(0.0, 1.0 - x * x)), table);

        // Pbar = N P  =>  P = Pbar / N
        const double log_ratio = std::lgamma(degree - k + 1.0) - std::lgamma(degree + k + 1.0);
        const double norm = std::sqrt((2.0 * degree + 1.0) / (4.0 * kPi) * std::exp(log_ratio));
        const double positive = table[tri(degree, k)] / norm;
        if (order >= 0)
            return positive;
        return ((k & 1) ? -1.0 : 1.0) * std::exp(log_ratio) * positive;
    }

    cdouble sh_eval(const BasisIndex &index, const Aod &aod)
    {
        check_index(index.degree, index.order, "sh_eval");
        if (index.degree > kMaxBasisDegree)
            throw InvalidArgument("sh_eval: degree exceeds supported maximum");

        std::array<double, kTableCapacity> table;
        normalized_legendre(index.degree, std::cos(aod.elevation), std::sin(aod.elevation), table);
        const int k = std::abs(index.order);
        // N_{l,-k} P_l^{-k} = (-1)^k Pbar_lk, which cancels the explicit (-1)^u for u < 0
        return condon_free_sign(index.order) * table[tri(index.degree, k)] *
               std::polar(1.0, index.order * aod.azimuth);
    }

    void basis_vector_into(const BasisSet &basis, const Aod &aod, std::span<cdouble> out)
    {
        basis_gradient_into(basis, aod, out, {}, {});
    }

    CVector basis_vector(const BasisSet &basis, const Aod &aod)
    {
        CVector b(basis.size());
        basis_vector_into(basis, aod, std::span<cdouble>(b.data(), static_cast<std::size_t>(b.size())));
        return b;
    }

    void basis_gradient_into(const BasisSet &basis, const Aod &aod, std::span<cdouble> value,
                             std::span<cdouble> d_elevation, std::span<cdouble> d_azimuth)
    {
        const auto q = static_cast<std::size_t>(basis.size());
        if ((!value.empty() && value.size() != q) || (!d_elevation.empty() && d_elevation.size() != q) ||
            (!d_azimuth.empty() && d_azimuth.size() != q))
            throw InvalidArgument("basis_gradient_into: output size must equal the basis size");

        const int max_degree = basis.max_degree();
        std::array<double, kTableCapacity> table;
        std::array<double, kTableCapacity> deriv;
        normalized_legendre(max_degree, std::cos(aod.elevation), std::sin(aod.elevation), table);
        if (!d_elevation.empty())
            normalized_legendre_derivative(max_degree, table, deriv);

        // exp(j k az) for k = 0..L
        std::array<cdouble, kMaxBasisDegree + 1> phase{};
        phase[0] = 1.0;
        for (int k = 1; k <= max_degree; ++k)
            phase[static_cast<std::size_t>(k)] = std::polar(1.0, k * aod.azimuth);

        for (std::size_t i = 0; i < q; ++i)
        {
            const BasisIndex &idx = basis[i];
            const int k = std::abs(idx.order);
            const cdouble e = idx.order >= 0 ? phase[static_cast<std::size_t>(k)] : std::conj(phase[static_cast<std::size_t>(k)]);
            const double sign = condon_free_sign(idx.order);
            const cdouble y = sign * table[tri(idx.degree, k)] * e;
            if (!value.empty())
                value[i] = y;
            if (!d_elevation.empty())
                d_elevation[i] = sign * deriv[tri(idx.degree, k)] * e;
            if (!d_azimuth.empty())
                d_azimuth[i] = cdouble(0.0, static_cast<double>(idx.order)) * y;
        }
    }

    int SphereQuadrature::minimum_points(int max_degree)
    {
        return std::max(1, 4 * max_degree);
    }

    SphereQuadrature SphereQuadrature::minimum_for(int max_degree)
    {
        const int n = minimum_points(max_degree);
        return {n, n};
    }

    CMatrix gram_matrix(const BasisSet &basis, const SphereQuadrature &quadrature)
    {
        const int needed = SphereQuadrature::minimum_points(basis.max_degree());
        if (quadrature.elevation_points < needed || quadrature.azimuth_points < needed)
            throw InvalidArgument("gram_matrix: quadrature resolution below the minimum of " + std::to_string(needed) +
                                  " points per axis for degree " + std::to_string(basis.max_degree()));

        const int n_el = quadrature.elevation_points;
        const int n_az = quadrature.azimuth_points;
        const int q = basis.size();

        // Fejer's first rule: integral over x = cos(el) in [-1, 1]
        std::vector<double> el(static_cast<std::size_t>(n_el));
        std::vector<double> w_el(static_cast<std::size_t>(n_el));
        for (int j = 0; j < n_el; ++j)
        {
            const double theta = (j + 0.5) * kPi / n_el;
            double sum = 0.0;
            for (int k = 1; k <= n_el / 2; ++k)
                sum += std::cos(2.0 * k * theta) / (4.0 * k * k - 1.0);
            el[static_cast<std::size_t>(j)] = theta;
            w_el[static_cast<std::size_t>(j)] = 2.0 / n_el * (1.0 - 2.0 * sum);
        }
        const double w_az = 2.0 * kPi / n_az;

        CMatrix gram = CMatrix::Zero(q, q);
        CMatrix block(q, n_az);
        for (int j = 0; j < n_el; ++j)
        {
            for (int i = 0; i < n_az; ++i)
            {
                const Aod aod{el[static_cast<std::size_t>(j)], -kPi + i * w_az};
                basis_vector_into(basis, aod, std::span<cdouble>(block.col(i).data(), static_cast<std::size_t>(q)));
            }
            gram.noalias() += (w_el[static_cast<std::size_t>(j)] * w_az) * (block * block.adjoint());
        }
        return gram;
    }
}
