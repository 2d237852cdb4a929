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

#include "nfra/precoder.hpp"
#include "nfra/errors.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace nfra
{
    std::array<Codeword, 4> optimal_codewords(const ArrayModel &model, const Vec3 &p, const JacobianOptions &options)
    {
        const ArvJacobian jac = arv_jacobian(model, p, options);
        std::array<Codeword, 4> out;
        for (int i = 0; i < 4; ++i)
        {
            const CVector &dir = i == 0 ? jac.value : jac.columns[static_cast<std::size_t>(i - 1)];
            const double norm = dir.norm();
            if (!(norm > 0.0) || !std::isfinite(norm))
                throw DegenerateGeometry("optimal_codewords: derivative " + std::to_string(i) + " has zero norm");
            out[static_cast<std::size_t>(i)] = Codeword{dir.conjugate() / norm, p, i};
        }
        return out;
    }

    PrecoderFactorization factorize(const Codeword &codeword, int basis_size, double power,
                                    std::span<const double> phases)
    {
        if (basis_size < 1 || codeword.w.size() % basis_size != 0)
            throw InvalidArgument("factorize: codeword length is not a multiple of the basis size");
        if (!(power >= 0.0 && power <= 1.0))
            throw InvalidArgument("factorize: power fraction must lie in [0, 1]");

        const Eigen::Index q = basis_size;
        const Eigen::Index m_count = codeword.w.size() / q;
        if (!phases.empty() && static_cast<Eigen::Index>(phases.size()) != m_count)
            throw InvalidArgument("factorize: need one phase per element");

        const double amplitude = std::sqrt(power);
        CVector digital(m_count);
        CMatrix em(q, m_count);
        for (Eigen::Index m = 0; m < m_count; ++m)
        {
            // w = conj(d~), so the block of d~ is conj of the codeword block
            const CVector block = codeword.w.segment(m * q, q).conjugate();
            const double norm = block.norm();
            const double psi = phases.empty() ? 0.0 : phases[static_cast<std::size_t>(m)];
            if (norm == 0.0)
            {
                digital[m] = 0.0;
                em.col(m).setZero();
                em(0, m) = 1.0;
                continue;
            }
            digital[m] = amplitude * norm * std::polar(1.0, psi);
            em.col(m) = block.conjugate() / norm * std::polar(1.0, -psi);
        }
        return {std::move(digital), EmPrecoder(std::move(em))};
    }

    Codebook::Codebook(int basis_size, std::vector<Vec3> candidates, std::vector<Codeword> codewords,
                       std::vector<double> weights)
        : basis_size_(basis_size), candidates_(std::move(candidates)), codewords_(std::move(codewords)),
          weights_(std::move(weights))
    {
        if (basis_size_ < 1)
            throw InvalidArgument("Codebook: basis size must be >= 1");
        if (codewords_.empty())
            throw InvalidArgument("Codebook: no codewords");
        if (weights_.size() != codewords_.size())
            throw InvalidArgument("Codebook: one weight per codeword required");

        const Eigen::Index dim = codewords_.front().w.size();
        for (const auto &c : codewords_)
            if (c.w.size() != dim || dim % basis_size_ != 0)
                throw InvalidArgument("Codebook: inconsistent codeword lengths");

        double sum = 0.0;
        for (double rho : weights_)
        {
            if (!(rho >= 0.0))
                throw InvalidArgument("Codebook: weights must be non-negative");
            sum += rho;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw InvalidArgument("Codebook: weights must sum to one");
    }

    CMatrix Codebook::unit_matrix() const
    {
        CMatrix out(codewords_.front().w.size(), static_cast<Eigen::Index>(codewords_.size()));
        for (std::size_t t = 0; t < codewords_.size(); ++t)
            out.col(static_cast<Eigen::Index>(t)) = codewords_[t].w;
        return out;
    }

    CMatrix Codebook::weighted_matrix() const
    {
        CMatrix out = unit_matrix();
        for (std::size_t t = 0; t < codewords_.size(); ++t)
            out.col(static_cast<Eigen::Index>(t)) *= std::sqrt(weights_[t]);
        return out;
    }

    double Codebook::total_power() const
    {
        double total = 0.0;
        for (std::size_t t = 0; t < codewords_.size(); ++t)
            total += weights_[t] * codewords_[t].w.squaredNorm();
        return total;
    }

    Codebook Codebook::with_weights(std::vector<double> weights) const
    {
        return Codebook(basis_size_, candidates_, codewords_, std::move(weights));
    }

    Codebook build_codebook(const ArrayModel &model, const Box &region, const Lattice &lattice,
                            std::optional<std::vector<double>> weights, const JacobianOptions &options)
    {
        if (region.empty())
            throw InvalidArgument("build_codebook: empty uncertainty region");

        std::vector<Vec3> candidates = cell_centered_lattice(region, lattice);
        std::vector<Codeword> codewords;
        codewords.reserve(4 * candidates.size());
        for (const auto &p : candidates)
            for (auto &c : optimal_codewords(model, p, options))
                codewords.push_back(std::move(c));

        std::vector<double> rho = weights ? std::move(*weights)
                                          : std::vector<double>(codewords.size(), 1.0 / static_cast<double>(codewords.size()));
        return Codebook(model.basis_size(), std::move(candidates), std::move(codewords), std::move(rho));
    }

    std::string_view to_string(Method method)
    {
        switch (method)
        {
        case Method::kRaOptimal:
            return "ra-optimal";
        case Method::kRaDirectional:
            return "ra-directional";
        case Method::kConventional:
            return "conventional";
        }
        return "unknown";
    }

    Method parse_method(std::string_view name)
    {
        if (name == "ra-optimal")
            return Method::kRaOptimal;
        if (name == "ra-directional")
            return Method::kRaDirectional;
        if (name == "conventional")
            return Method::kConventional;
        throw InvalidArgument("unknown method '" + std::string(name) + "'");
    }

    Codebook baseline_directional(const Codebook &codebook, std::span<const Vec3> samples, const ArrayModel &model,
                                  const ScenarioConfig &scenario)
    {
        std::vector<Codeword> directional;
        for (const auto &c : codebook.codewords())
            if (c.derivative_order == 0)
                directional.push_back(c);
        if (directional.empty())
            throw InvalidArgument("baseline_directional: codebook has no directional codewords");

        const auto n = directional.size();
        Codebook uniform(codebook.basis_size(), {codebook.candidates().begin(), codebook.candidates().end()},
                         std::move(directional), std::vector<double>(n, 1.0 / static_cast<double>(n)));
        if (n == 1)
            return uniform;
        return uniform.with_weights(allocate_power(uniform, samples, model, scenario).weights);
    }

    CodebookDesign design_codebook(Method method, const ArrayModel &model, const ScenarioConfig &scenario,
                                   const Lattice &candidates, std::span<const Vec3> samples)
    {
        if (method == Method::kConventional)
            return baseline_conventional(model, scenario, candidates, samples);

        Codebook full = build_codebook(model, scenario.region, candidates);
        if (method == Method::kRaDirectional)
        {
            Codebook directional = baseline_directional(full, samples, model, scenario);
            const double worst = PebLandscape(directional, samples, model, scenario).max_peb_trace(directional.weights());
            return {model, std::move(directional), worst};
        }

        AllocationResult alloc = allocate_power(full, samples, model, scenario);
        return {model, full.with_weights(std::move(alloc.weights)), alloc.max_peb_trace};
    }

    CodebookDesign baseline_conventional(const ArrayModel &model, const ScenarioConfig &scenario,
                                         const Lattice &candidates, std::span<const Vec3> samples)
    {
        ArrayModel single{model.layout, BasisSet(1), model.wavelength};
        return design_codebook(Method::kRaOptimal, single, scenario, candidates, samples);
    }
}
