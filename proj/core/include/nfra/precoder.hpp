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

#ifndef NFRA_PRECODER_HPP
#define NFRA_PRECODER_HPP

#include "nfra/channel.hpp"
#include "nfra/fim.hpp"
#include "nfra/types.hpp"

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nfra
{
    // Unit-norm composite codeword w in C^{MQ}. derivative_order 0 is the
    // directional (matched) beam toward source_point; 1..3 are matched to the
    // x, y, z derivatives of d(p).
    struct Codeword
    {
        CVector w;
        Vec3 source_point = Vec3::Zero();
        int derivative_order = 0;
    };

    // w_i = conj(d^(i)(p)) / |d^(i)(p)| for i = 0..3, d^(0) = d
    std::array<Codeword, 4> optimal_codewords(const ArrayModel &model, const Vec3 &p,
                                              const JacobianOptions &options = {});

    // Digital precoder f (length M) and per-element EM weights e_m. The pair
    // reproduces sqrt(power) * w through EmPrecoder::compose.
    struct PrecoderFactorization
    {
        CVector digital;
        EmPrecoder em;

        CVector composite() const { return em.compose(digital); }
    };

    // [f]_m = sqrt(power) |d_m| exp(j psi_m),  e_m = conj(d_m) / |d_m| exp(-j psi_m)
    // where d_m is block m of conj(w). `phases` is empty (all zero) or has length M.
    // A zero block yields f_m = 0 and e_m = first unit vector.
    PrecoderFactorization factorize(const Codeword &codeword, int basis_size, double power,
                                    std::span<const double> phases = {});

    class Codebook
    {
    public:
        Codebook(int basis_size, std::vector<Vec3> candidates, std::vector<Codeword> codewords,
                 std::vector<double> weights);

        std::size_t size() const { return codewords_.size(); }
        int basis_size() const { return basis_size_; }
        std::span<const Vec3> candidates() const { return candidates_; }
        std::span<const Codeword> codewords() const { return codewords_; }
        std::span<const double> weights() const { return weights_; }

        // MQ x N_t matrix of unit-norm codewords
        CMatrix unit_matrix() const;
        // MQ x N_t matrix with columns sqrt(rho_t) w_t
        CMatrix weighted_matrix() const;

        // sum_t |sqrt(rho_t) w_t|^2
        double total_power() const;

        Codebook with_weights(std::vector<double> weights) const;

    private:
        int basis_size_;
        std::vector<Vec3> candidates_;
        std::vector<Codeword> codewords_;
        std::vector<double> weights_;
    };

    // Four codewords per candidate point in the order (w_0, w_1, w_2, w_3).
    // Candidates sit at the cell centers of a lattice over the region.
    // Weights are uniform unless supplied.
    Codebook build_codebook(const ArrayModel &model, const Box &region, const Lattice &lattice,
                            std::optional<std::vector<double>> weights = std::nullopt,
                            const JacobianOptions &options = {});

    // Worst-case PEB over a set of sample points as a function of the power split.
    // Holds the per-(sample, codeword) signal gradients so a weight vector can be
    // evaluated without recomputing array responses.
    class PebLandscape
    {
    public:
        PebLandscape(const Codebook &codebook, std::span<const Vec3> samples, const ArrayModel &model,
                     const ScenarioConfig &scenario, const JacobianOptions &options = {});

        std::size_t samples() const { return gradients_.size(); }
        std::size_t codewords() const { return codewords_; }
        const Vec3 &sample(std::size_t i) const { return points_[i]; }

        Matrix5d information(std::size_t sample, std::span<const double> weights) const;

        // PEB trace at one sample, +inf if the FIM is unidentifiable
        double peb_trace(std::size_t sample, std::span<const double> weights) const;

        // max over samples; `worst` receives the argmax when non-null
        double max_peb_trace(std::span<const double> weights, std::size_t *worst = nullptr) const;

        // PEB trace at `sample` and its gradient with respect to the weights
        double peb_trace_gradient(std::size_t sample, std::span<const double> weights, std::span<double> gradient) const;

    private:
        std::size_t codewords_ = 0;
        double scale_ = 0.0; // 2 / sigma^2
        std::vector<Vec3> points_;
        std::vector<Eigen::Matrix<cdouble, 5, Eigen::Dynamic>> gradients_;
    };

    struct AllocationOptions
    {
        int max_iterations = 4000;  // projected-gradient steps per smoothing level
        double tolerance = 1e-10;   // stop on relative objective change below this
    };

    struct AllocationResult
    {
        std::vector<double> weights;
        double max_peb_trace = 0.0;
        std::size_t worst_sample = 0;
        int iterations = 0;
    };

    // Minimax power split over the simplex:
    //     min_rho max_i PEB(sum_t rho_t w_t w_t^H; p_i)
    // Throws Unidentifiable (naming the sample) if the uniform split already has a
    // singular FIM somewhere.
    AllocationResult allocate_power(const Codebook &codebook, std::span<const Vec3> samples, const ArrayModel &model,
                                    const ScenarioConfig &scenario, const AllocationOptions &options = {});

    // Euclidean projection onto the probability simplex
    std::vector<double> project_to_simplex(std::span<const double> v);

    enum class Method
    {
        kRaOptimal,
        kRaDirectional,
        kConventional,
    };

    std::string_view to_string(Method method);
    Method parse_method(std::string_view name);

    // Directional-only subset (one w_0 per candidate) with optimized power split
    Codebook baseline_directional(const Codebook &codebook, std::span<const Vec3> samples, const ArrayModel &model,
                                  const ScenarioConfig &scenario);

    struct CodebookDesign
    {
        ArrayModel model;
        Codebook codebook;
        double max_peb_trace = 0.0;
    };

    // Full pipeline: codebook over the candidate lattice followed by power allocation.
    // kConventional reruns the optimal pipeline with a single (isotropic) basis function.
    CodebookDesign design_codebook(Method method, const ArrayModel &model, const ScenarioConfig &scenario,
                                   const Lattice &candidates, std::span<const Vec3> samples);

    // Conventional (Q = 1) array with the same layout
    CodebookDesign baseline_conventional(const ArrayModel &model, const ScenarioConfig &scenario,
                                         const Lattice &candidates, std::span<const Vec3> samples);
}

#endif
