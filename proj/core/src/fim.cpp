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

#include "nfra/fim.hpp"
#include "nfra/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <sstream>
#include <vector>

namespace nfra
{
    namespace
    {
        ArvJacobian analytic_jacobian(const ArrayModel &model, const Vec3 &p)
        {
            const auto q = static_cast<Eigen::Index>(model.basis_size());
            const Eigen::Index n = model.dimension();

            ArvJacobian jac;
            jac.value.resize(n);
            for (auto &c : jac.columns)
                c.resize(n);

            const Vec3 v0 = p - model.layout.center();
            const double r0 = v0.norm();
            if (r0 <= kCoincidenceTolerance)
                throw DegenerateGeometry("arv_jacobian: position coincides with the array center");
            const Vec3 u0 = v0 / r0;
            const double k = 2.0 * kPi / model.wavelength;

            std::vector<cdouble> b(static_cast<std::size_t>(q));
            std::vector<cdouble> db_el(static_cast<std::size_t>(q));
            std::vector<cdouble> db_az(static_cast<std::size_t>(q));

            for (std::size_t m = 0; m < model.elements(); ++m)
            {
                const Vec3 v = p - model.layout.position(m);
                const double r = v.norm();
                if (r <= kCoincidenceTolerance)
                    throw DegenerateGeometry("arv_jacobian: position coincides with element " + std::to_string(m));
                const Aod aod = direction_aod(v);
                const double sin_el = std::sin(aod.elevation);
                if (sin_el < 1e-9)
                    throw DegenerateGeometry("arv_jacobian: analytic mode is singular on the element's z axis");

                const cdouble a = std::polar(1.0, -k * (r - r0));
                const Vec3 da_dir = -k * (v / r - u0); // da/dp = j * a * da_dir

                const double ce = std::cos(aod.elevation), ca = std::cos(aod.azimuth), sa = std::sin(aod.azimuth);
                const Vec3 del_dp = Vec3(ce * ca, ce * sa, -sin_el) / r;
                const Vec3 daz_dp = Vec3(-sa, ca, 0.0) / (r * sin_el);

                basis_gradient_into(model.basis, aod, b, db_el, db_az);

                const Eigen::Index off = static_cast<Eigen::Index>(m) * q;
                for (Eigen::Index i = 0; i < q; ++i)
                {
                    const auto ii = static_cast<std::size_t>(i);
                    jac.value[off + i] = a * b[ii];
                    for (int c = 0; c < 3; ++c)
                    {
                        const cdouble db = db_el[ii] * del_dp[c] + db_az[ii] * daz_dp[c];
                        jac.columns[static_cast<std::size_t>(c)][off + i] =
                            a * (cdouble(0.0, da_dir[c]) * b[ii] + db);
                    }
                }
            }
            return jac;
        }

        // Fourth-order central stencil; the second-order one leaves a relative
        // error of (kh)^2 / 6 on the phase derivative, about 7e-4 at h = lambda / 100
        ArvJacobian finite_difference_jacobian(const ArrayModel &model, const Vec3 &p, double step)
        {
            ArvJacobian jac;
            jac.value = effective_arv(model, p);
            for (int c = 0; c < 3; ++c)
            {
                Vec3 shift = Vec3::Zero();
                shift[c] = step;
                const CVector near = effective_arv(model, p + shift) - effective_arv(model, p - shift);
                const CVector far = effective_arv(model, p + 2.0 * shift) - effective_arv(model, p - 2.0 * shift);
                jac.columns[static_cast<std::size_t>(c)] = (8.0 * near - far) / (12.0 * step);
            }
            return jac;
        }

        // Columns c_i such that dx_t / d eta_i = sqrt(P) c_i^T w_t
        Eigen::Matrix<cdouble, Eigen::Dynamic, 5> derivative_directions(const ArvJacobian &jac, const StateParams &state)
        {
            const cdouble beta = state.gain();
            Eigen::Matrix<cdouble, Eigen::Dynamic, 5> c(jac.value.size(), 5);
            for (int i = 0; i < 3; ++i)
                c.col(i) = beta * jac.columns[static_cast<std::size_t>(i)];
            c.col(3) = std::polar(1.0, state.phase) * jac.value;
            c.col(4) = cdouble(0.0, 1.0) * beta * jac.value;
            return c;
        }

        void check_state(const StateParams &state, double tx_power, double noise_variance)
        {
            if (!(state.magnitude > 0.0))
                throw InvalidArgument("fim: path-gain magnitude must be positive");
            if (!(tx_power >= 0.0))
                throw InvalidArgument("fim: transmit power must be non-negative");
            if (!(noise_variance > 0.0))
                throw InvalidArgument("fim: noise variance must be positive");
        }
    }

    ArvJacobian arv_jacobian(const ArrayModel &model, const Vec3 &p, const JacobianOptions &options)
    {
        if (options.method == DerivativeMethod::kAnalytic)
            return analytic_jacobian(model, p);

        const double step = options.step > 0.0 ? options.step : model.wavelength / 100.0;
        if (!(step > 0.0) || !std::isfinite(step))
            throw InvalidArgument("arv_jacobian: finite-difference step must be positive");
        return finite_difference_jacobian(model, p, step);
    }

    Eigen::Matrix<cdouble, 5, 1> signal_gradient(const ArvJacobian &jacobian, const CVector &codeword,
                                                 const StateParams &state, double tx_power)
    {
        if (codeword.size() != jacobian.value.size())
            throw InvalidArgument("signal_gradient: codeword length mismatch");
        const auto c = derivative_directions(jacobian, state);
        return std::sqrt(tx_power) * (c.transpose() * codeword);
    }

    Eigen::Matrix<cdouble, 5, Eigen::Dynamic> signal_gradients(const ArvJacobian &jacobian, const CMatrix &codewords,
                                                                const StateParams &state, double tx_power)
    {
        if (codewords.rows() != jacobian.value.size())
            throw InvalidArgument("signal_gradients: codeword length mismatch");
        const auto c = derivative_directions(jacobian, state);
        return std::sqrt(tx_power) * (c.transpose() * codewords);
    }

    FisherMatrix fim(const ArvJacobian &jacobian, const CMatrix &codewords, std::span<const double> powers,
                     const StateParams &state, double tx_power, double noise_variance)
    {
        check_state(state, tx_power, noise_variance);
        if (codewords.rows() != jacobian.value.size())
            throw InvalidArgument("fim: codeword length does not match the effective ARV");
        if (static_cast<std::size_t>(codewords.cols()) != powers.size())
            throw InvalidArgument("fim: one power fraction per codeword required");

        double total = 0.0;
        for (double rho : powers)
        {
            if (!(rho >= 0.0))
                throw InvalidArgument("fim: power fractions must be non-negative");
            total += rho;
        }
        if (total > 1.0 + 1e-9)
            throw InvalidArgument("fim: power fractions sum to more than one");

        const auto g = signal_gradients(jacobian, codewords, state, tx_power);

        FisherMatrix out;
        for (Eigen::Index t = 0; t < g.cols(); ++t)
        {
            const double rho = powers[static_cast<std::size_t>(t)];
            if (rho == 0.0)
                continue;
            out.info.noalias() += rho * (g.col(t).conjugate() * g.col(t).transpose()).real();
        }
        out.info *= 2.0 / noise_variance;
        out.info = 0.5 * (out.info + out.info.transpose()).eval();
        return out;
    }

    FisherMatrix fim(const ArrayModel &model, const CMatrix &codewords, std::span<const double> powers,
                     const StateParams &state, double tx_power, double noise_variance, const JacobianOptions &options)
    {
        return fim(arv_jacobian(model, state.position, options), codewords, powers, state, tx_power, noise_variance);
    }

    FisherMatrix fim_from_covariance(const ArvJacobian &jacobian, const CMatrix &covariance, const StateParams &state,
                                     double tx_power, double noise_variance)
    {
        check_state(state, tx_power, noise_variance);
        const Eigen::Index n = jacobian.value.size();
        if (covariance.rows() != n || covariance.cols() != n)
            throw InvalidArgument("fim_from_covariance: covariance must be MQ x MQ");
        const double trace = covariance.trace().real();
        if (trace > 1.0 + 1e-9)
            throw InvalidArgument("fim_from_covariance: covariance trace exceeds one");

        // sum_t conj(c_i^T w_t) c_j^T w_t = c_i^H conj(W) c_j
        const auto c = derivative_directions(jacobian, state);
        FisherMatrix out;
        out.info = (2.0 * tx_power / noise_variance) * (c.adjoint() * covariance.conjugate() * c).real();
        out.info = 0.5 * (out.info + out.info.transpose()).eval();
        return out;
    }

    Matrix5d fim_inverse(const Matrix5d &info, double max_condition)
    {
        Eigen::SelfAdjointEigenSolver<Matrix5d> raw(info, Eigen::EigenvaluesOnly);
        const double smallest = raw.eigenvalues()[0];

        const Eigen::Matrix<double, 5, 1> diag = info.diagonal();
        if (!info.allFinite() || (diag.array() <= 0.0).any())
        {
            std::ostringstream msg;
            msg << "FIM is singular (non-positive diagonal), smallest eigenvalue " << smallest;
            throw Unidentifiable(msg.str(), smallest);
        }

        const Eigen::Matrix<double, 5, 1> scale = diag.cwiseSqrt().cwiseInverse();
        const Matrix5d scaled = scale.asDiagonal() * info * scale.asDiagonal();
        Eigen::SelfAdjointEigenSolver<Matrix5d> eig(scaled);
        const auto &lambda = eig.eigenvalues();
        if (!(lambda[0] > 0.0) || lambda[4] / lambda[0] > max_condition)
        {
            std::ostringstream msg;
            msg << "FIM is singular or ill-conditioned (scaled condition "
                << (lambda[0] > 0.0 ? lambda[4] / lambda[0] : std::numeric_limits<double>::infinity())
                << "), smallest eigenvalue " << smallest;
            throw Unidentifiable(msg.str(), smallest);
        }

        const Matrix5d scaled_inv = eig.eigenvectors() * lambda.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
        return scale.asDiagonal() * scaled_inv * scale.asDiagonal();
    }

    Peb peb(const FisherMatrix &fisher, double max_condition)
    {
        const Matrix5d inv = fim_inverse(fisher.info, max_condition);
        Peb out;
        out.trace = inv.topLeftCorner<3, 3>().trace();
        out.rmse = std::sqrt(std::max(out.trace, 0.0));
        return out;
    }
}
