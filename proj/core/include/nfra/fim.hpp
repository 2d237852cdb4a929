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

#ifndef NFRA_FIM_HPP
#define NFRA_FIM_HPP

#include "nfra/channel.hpp"
#include "nfra/types.hpp"

#include <array>
#include <span>

namespace nfra
{
    // eta = [p_u (3), rho, phi]; only the LOS path carries information
    struct StateParams
    {
        Vec3 position = Vec3::Zero();
        double magnitude = 0.0; // rho > 0
        double phase = 0.0;     // phi

        cdouble gain() const { return std::polar(magnitude, phase); }
    };

    enum class DerivativeMethod
    {
        kFiniteDifference, // fourth-order central differences, default
        kAnalytic,         // chain rule through element phases and departure angles
    };

    struct JacobianOptions
    {
        DerivativeMethod method = DerivativeMethod::kFiniteDifference;
        double step = 0.0; // finite-difference step in m; 0 selects lambda / 100
    };

    // d(p) together with d^(i)(p) = dd(p)/dp_i for i = x, y, z
    struct ArvJacobian
    {
        CVector value;
        std::array<CVector, 3> columns;
    };

    ArvJacobian arv_jacobian(const ArrayModel &model, const Vec3 &p, const JacobianOptions &options = {});

    // Gradient of the noise-free pilot x_t = sqrt(P) beta d(p)^T w with respect to eta
    Eigen::Matrix<cdouble, 5, 1> signal_gradient(const ArvJacobian &jacobian, const CVector &codeword,
                                                 const StateParams &state, double tx_power);

    // 5 x N_t matrix whose column t is the gradient of x_t for the unit-norm codeword t
    Eigen::Matrix<cdouble, 5, Eigen::Dynamic> signal_gradients(const ArvJacobian &jacobian, const CMatrix &codewords,
                                                                const StateParams &state, double tx_power);

    struct FisherMatrix
    {
        Matrix5d info = Matrix5d::Zero();
    };

    // [J]_ij = 2 / sigma^2 sum_t rho_t Re{ conj(dx_t/d eta_i) dx_t/d eta_j } for unit-norm
    // codewords stored as the columns of `codewords` with power fractions `powers`.
    FisherMatrix fim(const ArvJacobian &jacobian, const CMatrix &codewords, std::span<const double> powers,
                     const StateParams &state, double tx_power, double noise_variance);

    FisherMatrix fim(const ArrayModel &model, const CMatrix &codewords, std::span<const double> powers,
                     const StateParams &state, double tx_power, double noise_variance,
                     const JacobianOptions &options = {});

    // Same information written in terms of the aggregate covariance W = sum_t rho_t w_t w_t^H
    FisherMatrix fim_from_covariance(const ArvJacobian &jacobian, const CMatrix &covariance, const StateParams &state,
                                     double tx_power, double noise_variance);

    // Matrices with condition number above this (after diagonal scaling) are rejected
    inline constexpr double kMaxFimCondition = 1e12;

    struct Peb
    {
        double trace = 0.0; // tr([J^-1]_{pos}) in m^2
        double rmse = 0.0;  // sqrt(trace) in m
    };

    // Inverts J after symmetric diagonal equilibration, so the condition test is
    // independent of the units of rho and phi. Throws Unidentifiable on a singular
    // or ill-conditioned matrix.
    Peb peb(const FisherMatrix &fisher, double max_condition = kMaxFimCondition);

    // Inverse of the equilibrated matrix, with the same checks as peb()
    Matrix5d fim_inverse(const Matrix5d &info, double max_condition = kMaxFimCondition);
}

#endif
