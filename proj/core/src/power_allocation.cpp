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

// Minimax power allocation over the probability simplex.
//
// The worst-case PEB max_i f_i(rho) is convex in rho (each f_i is the trace of
// a block of the inverse of a matrix affine in rho). It is equivalent to the
// epigraph SDP
//
//     min s  s.t.  [ J_i(rho)  e_m ; e_m^T  u_im ] >= 0,  sum_m u_im <= s,
//
// but the LMI blocks are tiny, so we solve the primal directly: projected
// gradient steps on the log-sum-exp smoothing
//
//     F_mu(rho) = mu log sum_i exp(f_i(rho) / mu)
//
// with mu driven toward zero. F_mu overestimates the max by at most
// mu log N_u, which is far below the requested tolerance at the last level.

#include "nfra/errors.hpp"
#include "nfra/precoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace nfra
{
    namespace
    {
        constexpr double kInf = std::numeric_limits<double>::infinity();
    }

    PebLandscape::PebLandscape(const Codebook &codebook, std::span<const Vec3> samples, const ArrayModel &model,
                               const ScenarioConfig &scenario, const JacobianOptions &options)
        : codewords_(codebook.size()), scale_(2.0 / scenario.noise_variance()), points_(samples.begin(), samples.end())
    {
        if (samples.empty())
            throw InvalidArgument("PebLandscape: at least one sample point required");
        if (codebook.basis_size() != model.basis_size())
            throw InvalidArgument("PebLandscape: codebook and array model disagree on the basis size");

        const CMatrix unit = codebook.unit_matrix();
        if (unit.rows() != model.dimension())
            throw InvalidArgument("PebLandscape: codeword length does not match the array model");

        gradients_.reserve(samples.size());
        for (const auto &p : samples)
        {
            const double distance = (p - model.layout.center()).norm();
            const StateParams state{p, path_gain_los(distance, model.wavelength, 0.0).magnitude, 0.0};
            const ArvJacobian jac = arv_jacobian(model, p, options);
            gradients_.push_back(signal_gradients(jac, unit, state, scenario.tx_power_w));
        }
    }

    Matrix5d PebLandscape::information(std::size_t sample, std::span<const double> weights) const
    {
        if (weights.size() != codewords_)
            throw InvalidArgument("PebLandscape: one weight per codeword required");
        const auto &g = gradients_[sample];
        Matrix5d info = Matrix5d::Zero();
        for (std::size_t t = 0; t < codewords_; ++t)
        {
            const double rho = weights[t];
            if (rho == 0.0)
                continue;
            const auto col = g.col(static_cast<Eigen::Index>(t));
            info.noalias() += rho * (col.conjugate() * col.transpose()).real();
        }
        info *= scale_;
        return 0.5 * (info + info.transpose());
    }

    double PebLandscape::peb_trace(std::size_t sample, std::span<const double> weights) const
    {
        try
        {
            return fim_inverse(information(sample, weights)).topLeftCorner<3, 3>().trace();
        }
        catch (const Unidentifiable &)
        {
            return kInf;
        }
    }

    double PebLandscape::max_peb_trace(std::span<const double> weights, std::size_t *worst) const
    {
        double best = -kInf;
        std::size_t arg = 0;
        for (std::size_t i = 0; i < gradients_.size(); ++i)
        {
            const double f = peb_trace(i, weights);
            if (f > best)
            {
                best = f;
                arg = i;
            }
        }
        if (worst)
            *worst = arg;
        return best;
    }

    double PebLandscape::peb_trace_gradient(std::size_t sample, std::span<const double> weights,
                                            std::span<double> gradient) const
    {
        if (gradient.size() != codewords_)
            throw InvalidArgument("PebLandscape: gradient size mismatch");

        Matrix5d inv;
        try
        {
            inv = fim_inverse(information(sample, weights));
        }
        catch (const Unidentifiable &)
        {
            std::fill(gradient.begin(), gradient.end(), 0.0);
            return kInf;
        }

        // d tr(S J^-1 S) / d rho_t = -tr(J^-1 S J^-1 J_t),  J_t = scale Re(conj(g) g^T)
        const Matrix5d a = inv.leftCols<3>() * inv.topRows<3>();
        const auto &g = gradients_[sample];
        for (std::size_t t = 0; t < codewords_; ++t)
        {
            const auto col = g.col(static_cast<Eigen::Index>(t));
            gradient[t] = -scale_ * (col.adjoint() * a * col).value().real();
        }
        return inv.topLeftCorner<3, 3>().trace();
    }

    std::vector<double> project_to_simplex(std::span<const double> v)
    {
        if (v.empty())
            throw InvalidArgument("project_to_simplex: empty vector");

        std::vector<double> sorted(v.begin(), v.end());
        std::sort(sorted.begin(), sorted.end(), std::greater<>());
        double cumulative = 0.0;
        double theta = 0.0;
        for (std::size_t k = 0; k < sorted.size(); ++k)
        {
            cumulative += sorted[k];
            const double candidate = (cumulative - 1.0) / static_cast<double>(k + 1);
            if (sorted[k] - candidate > 0.0)
                theta = candidate;
        }

        std::vector<double> out(v.size());
        for (std::size_t i = 0; i < v.size(); ++i)
            out[i] = std::max(v[i] - theta, 0.0);
        const double sum = std::accumulate(out.begin(), out.end(), 0.0);
        for (auto &x : out)
            x /= sum;
        return out;
    }

    namespace
    {
        struct SmoothedValue
        {
            double smoothed = kInf;
            double worst = kInf;
            std::size_t worst_sample = 0;
            std::vector<double> gradient;
        };

        // Log-sum-exp of f_i / normalizer at temperature mu, plus its gradient
        SmoothedValue smoothed_max(const PebLandscape &landscape, std::span<const double> weights, double normalizer,
                                   double mu, bool with_gradient)
        {
            const std::size_t n = landscape.samples();
            const std::size_t t_count = landscape.codewords();
            std::vector<double> f(n);
            std::vector<std::vector<double>> grads(with_gradient ? n : 0, std::vector<double>(t_count));

            SmoothedValue out;
            out.worst = -kInf;
            for (std::size_t i = 0; i < n; ++i)
            {
                f[i] = (with_gradient ? landscape.peb_trace_gradient(i, weights, grads[i])
                                      : landscape.peb_trace(i, weights)) /
                       normalizer;
                if (f[i] > out.worst)
                {
                    out.worst = f[i];
                    out.worst_sample = i;
                }
            }
            if (!std::isfinite(out.worst))
                return out;

            double z = 0.0;
            std::vector<double> pi(n);
            for (std::size_t i = 0; i < n; ++i)
            {
                pi[i] = std::exp((f[i] - out.worst) / mu);
                z += pi[i];
            }
            out.smoothed = out.worst + mu * std::log(z);

            if (with_gradient)
            {
                out.gradient.assign(t_count, 0.0);
                for (std::size_t i = 0; i < n; ++i)
                {
                    const double p = pi[i] / z;
                    if (p < 1e-300)
                        continue;
                    for (std::size_t t = 0; t < t_count; ++t)
                        out.gradient[t] += p * grads[i][t] / normalizer;
                }
            }
            return out;
        }

        double dot(std::span<const double> a, std::span<const double> b)
        {
            return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
        }
    }

    AllocationResult allocate_power(const Codebook &codebook, std::span<const Vec3> samples, const ArrayModel &model,
                                    const ScenarioConfig &scenario, const AllocationOptions &options)
    {
        const PebLandscape landscape(codebook, samples, model, scenario);
        const std::size_t t_count = codebook.size();

        std::vector<double> x(t_count, 1.0 / static_cast<double>(t_count));
        for (std::size_t i = 0; i < landscape.samples(); ++i)
        {
            if (!std::isfinite(landscape.peb_trace(i, x)))
            {
                const Vec3 &p = landscape.sample(i);
                std::ostringstream msg;
                msg << "allocate_power: FIM is unidentifiable at sample " << i << " [" << p.x() << ", " << p.y() << ", "
                    << p.z() << "] under the uniform allocation";
                double smallest = 0.0;
                try
                {
                    fim_inverse(landscape.information(i, x));
                }
                catch (const Unidentifiable &e)
                {
                    smallest = e.smallest_eigenvalue();
                }
                throw Unidentifiable(msg.str(), smallest);
            }
        }

        AllocationResult result;
        const double normalizer = landscape.max_peb_trace(x);
        std::vector<double> best = x;
        double best_value = 1.0;
        if (t_count == 1)
        {
            result.weights = x;
            result.max_peb_trace = normalizer;
            landscape.max_peb_trace(x, &result.worst_sample);
            return result;
        }

        constexpr std::array kTemperatures{1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 3e-4, 1e-4, 3e-5, 1e-5, 3e-6};
        for (double mu : kTemperatures)
        {
            SmoothedValue current = smoothed_max(landscape, x, normalizer, mu, true);
            double step = 0.0;
            {
                double gmax = 0.0;
                for (double g : current.gradient)
                    gmax = std::max(gmax, std::abs(g));
                step = gmax > 0.0 ? 0.1 / gmax : 1.0;
            }

            for (int it = 0; it < options.max_iterations; ++it)
            {
                ++result.iterations;
                std::vector<double> trial_point(t_count);
                SmoothedValue trial;
                bool accepted = false;
                for (int halving = 0; halving < 60; ++halving)
                {
                    for (std::size_t t = 0; t < t_count; ++t)
                        trial_point[t] = x[t] - step * current.gradient[t];
                    trial_point = project_to_simplex(trial_point);

                    std::vector<double> delta(t_count);
                    for (std::size_t t = 0; t < t_count; ++t)
                        delta[t] = trial_point[t] - x[t];

                    trial = smoothed_max(landscape, trial_point, normalizer, mu, true);
                    if (std::isfinite(trial.smoothed) &&
                        trial.smoothed <= current.smoothed + 1e-4 * dot(current.gradient, delta))
                    {
                        accepted = true;
                        break;
                    }
                    step *= 0.5;
                }
                if (!accepted)
                    break;

                if (trial.worst < best_value)
                {
                    best_value = trial.worst;
                    best = trial_point;
                }

                // Barzilai-Borwein step for the next iteration
                double ss = 0.0, sy = 0.0;
                for (std::size_t t = 0; t < t_count; ++t)
                {
                    const double s = trial_point[t] - x[t];
                    const double y = trial.gradient[t] - current.gradient[t];
                    ss += s * s;
                    sy += s * y;
                }

                const double change = std::abs(current.smoothed - trial.smoothed);
                x = std::move(trial_point);
                current = std::move(trial);
                if (ss == 0.0 || change <= options.tolerance * std::abs(current.smoothed))
                    break;
                step = sy > 0.0 ? ss / sy : 2.0 * step;
            }
        }

        result.weights = std::move(best);
        result.max_peb_trace = landscape.max_peb_trace(result.weights, &result.worst_sample);
        return result;
    }
}
