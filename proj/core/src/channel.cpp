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

#include "nfra/channel.hpp"
#include "nfra/errors.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace nfra
{
    double ScenarioConfig::noise_variance() const
    {
        return std::pow(10.0, (noise_psd_dbm_hz - 30.0) / 10.0) * bandwidth_hz;
    }

    void ScenarioConfig::validate() const
    {
        if (!(carrier_hz > 0.0) || !std::isfinite(carrier_hz))
            throw InvalidArgument("scenario: carrier frequency must be positive");
        if (!(bandwidth_hz > 0.0) || !std::isfinite(bandwidth_hz))
            throw InvalidArgument("scenario: bandwidth must be positive");
        if (!std::isfinite(noise_psd_dbm_hz))
            throw InvalidArgument("scenario: noise PSD must be finite");
        if (!(tx_power_w >= 0.0) || !std::isfinite(tx_power_w))
            throw InvalidArgument("scenario: transmit power must be non-negative");
        if (!bs_position.allFinite())
            throw InvalidArgument("scenario: base-station position must be finite");
        if (region.empty() || !region.lower.allFinite() || !region.upper.allFinite())
            throw InvalidArgument("scenario: uncertainty region is empty");
    }

    PathGain PathGain::polar(double magnitude, double phase)
    {
        return {std::polar(magnitude, phase), magnitude, phase};
    }

    PathGain path_gain_los(double ue_distance, double wavelength, double phase)
    {
        if (!(ue_distance > 0.0))
            throw InvalidArgument("path_gain_los: distance must be positive");
        if (!(wavelength > 0.0))
            throw InvalidArgument("path_gain_los: wavelength must be positive");
        return PathGain::polar(wavelength / (4.0 * kPi * ue_distance), phase);
    }

    PathGain path_gain_nlos(double bs_distance, double ue_distance, double rcs, double wavelength, double phase)
    {
        if (!(bs_distance > 0.0) || !(ue_distance > 0.0))
            throw InvalidArgument("path_gain_nlos: distances must be positive");
        if (!(rcs >= 0.0))
            throw InvalidArgument("path_gain_nlos: RCS must be non-negative");
        if (!(wavelength > 0.0))
            throw InvalidArgument("path_gain_nlos: wavelength must be positive");
        const double rho = std::sqrt(4.0 * kPi * rcs) * wavelength / (16.0 * kPi * kPi * bs_distance * ue_distance);
        return PathGain::polar(rho, phase);
    }

    void effective_arv_into(const ArrayModel &model, const Vec3 &p, std::span<cdouble> out)
    {
        const auto q = static_cast<std::size_t>(model.basis_size());
        if (out.size() != static_cast<std::size_t>(model.dimension()))
            throw InvalidArgument("effective_arv_into: output size mismatch");

        const double ref = (p - model.layout.center()).norm();
        if (ref <= kCoincidenceTolerance)
            throw DegenerateGeometry("effective_arv: position coincides with the array center");

        const double k = 2.0 * kPi / model.wavelength;
        for (std::size_t m = 0; m < model.elements(); ++m)
        {
            const Vec3 v = p - model.layout.position(m);
            const double dist = v.norm();
            if (dist <= kCoincidenceTolerance)
                throw DegenerateGeometry("effective_arv: position coincides with element " + std::to_string(m));

            const cdouble a = std::polar(1.0, -k * (dist - ref));
            auto block = out.subspan(m * q, q);
            basis_vector_into(model.basis, direction_aod(v), block);
            for (auto &x : block)
                x *= a;
        }
    }

    CVector effective_arv(const ArrayModel &model, const Vec3 &p)
    {
        CVector d(model.dimension());
        effective_arv_into(model, p, std::span<cdouble>(d.data(), static_cast<std::size_t>(d.size())));
        return d;
    }

    EmPrecoder::EmPrecoder(CMatrix weights) : weights_(std::move(weights))
    {
        if (weights_.rows() < 1 || weights_.cols() < 1)
            throw InvalidArgument("EmPrecoder: weights must be a non-empty Q x M matrix");
    }

    EmPrecoder EmPrecoder::isotropic(std::size_t elements, int basis_size)
    {
        CMatrix w = CMatrix::Zero(basis_size, static_cast<Eigen::Index>(elements));
        w.row(0).setOnes();
        return EmPrecoder(std::move(w));
    }

    CVector EmPrecoder::apply(const CVector &d) const
    {
        const Eigen::Index q = weights_.rows();
        const Eigen::Index m = weights_.cols();
        if (d.size() != q * m)
            throw InvalidArgument("EmPrecoder::apply: vector length must be M*Q");
        CVector out(m);
        for (Eigen::Index i = 0; i < m; ++i)
            out[i] = weights_.col(i).transpose() * d.segment(i * q, q);
        return out;
    }

    CVector EmPrecoder::compose(const CVector &digital) const
    {
        const Eigen::Index q = weights_.rows();
        const Eigen::Index m = weights_.cols();
        if (digital.size() != m)
            throw InvalidArgument("EmPrecoder::compose: digital precoder length must be M");
        CVector w(q * m);
        for (Eigen::Index i = 0; i < m; ++i)
            w.segment(i * q, q) = digital[i] * weights_.col(i);
        return w;
    }

    CMatrix EmPrecoder::matrix() const
    {
        const Eigen::Index q = weights_.rows();
        const Eigen::Index m = weights_.cols();
        CMatrix e = CMatrix::Zero(m, q * m);
        for (Eigen::Index i = 0; i < m; ++i)
            e.block(i, i * q, 1, q) = weights_.col(i).transpose();
        return e;
    }

    PathGain scatterer_gain(const ArrayModel &model, const Scatterer &scatterer, const Vec3 &ue)
    {
        return path_gain_nlos((model.layout.center() - scatterer.position).norm(), (scatterer.position - ue).norm(),
                              scatterer.rcs, model.wavelength, scatterer.phase);
    }

    CVector composite_channel(const ArrayModel &model, const PathGain &los, const Vec3 &ue,
                              std::span<const Scatterer> scatterers)
    {
        CVector c = los.value * effective_arv(model, ue);
        for (const auto &s : scatterers)
        {
            const PathGain g = scatterer_gain(model, s, ue);
            if (g.magnitude == 0.0)
                continue;
            c.noalias() += g.value * effective_arv(model, s.position);
        }
        return c;
    }

    CVector channel_vector(const ArrayModel &model, const EmPrecoder &em, const PathGain &los, const Vec3 &ue,
                           std::span<const Scatterer> scatterers)
    {
        if (em.elements() != model.elements() || em.basis_size() != model.basis_size())
            throw InvalidArgument("channel_vector: EM precoder dimensions do not match the array model");

        CVector h = los.value * em.apply(effective_arv(model, ue));
        for (const auto &s : scatterers)
        {
            const PathGain g = scatterer_gain(model, s, ue);
            h.noalias() += g.value * em.apply(effective_arv(model, s.position));
        }
        return h;
    }

    cdouble received_pilot(const ArrayModel &model, const CVector &codeword, const PathGain &los, const Vec3 &ue,
                           std::span<const Scatterer> scatterers, double tx_power, cdouble noise)
    {
        if (codeword.size() != model.dimension())
            throw InvalidArgument("received_pilot: codeword length must be M*Q");
        if (!(tx_power >= 0.0))
            throw InvalidArgument("received_pilot: transmit power must be non-negative");
        if (tx_power == 0.0)
            return noise;
        const CVector c = composite_channel(model, los, ue, scatterers);
        return std::sqrt(tx_power) * (c.transpose() * codeword).value() + noise;
    }

    double lmr_db(const ArrayModel &model, const PathGain &los, const Vec3 &ue, std::span<const Scatterer> scatterers)
    {
        double multipath = 0.0;
        for (const auto &s : scatterers)
        {
            const double g = scatterer_gain(model, s, ue).magnitude;
            multipath += g * g;
        }
        if (multipath == 0.0)
            return std::numeric_limits<double>::infinity();
        return 10.0 * std::log10(los.magnitude * los.magnitude / multipath);
    }

    std::vector<Scatterer> calibrate_lmr(const ArrayModel &model, const PathGain &los, const Vec3 &ue,
                                         std::span<const Scatterer> scatterers, double target_lmr_db)
    {
        if (scatterers.empty())
            throw InvalidArgument("calibrate_lmr: no scatterers");

        std::vector<Scatterer> out(scatterers.begin(), scatterers.end());
        if (target_lmr_db == std::numeric_limits<double>::infinity())
        {
            for (auto &s : out)
                s.rcs = 0.0;
            return out;
        }
        if (std::isnan(target_lmr_db) || target_lmr_db == -std::numeric_limits<double>::infinity())
            throw InvalidArgument("calibrate_lmr: target LMR must be finite or +inf");

        double multipath = 0.0;
        for (const auto &s : scatterers)
        {
            const double g = scatterer_gain(model, s, ue).magnitude;
            multipath += g * g;
        }
        if (!(multipath > 0.0))
            throw InvalidArgument("calibrate_lmr: all scatterers have zero RCS");

        // |beta_i|^2 is linear in the RCS
        const double wanted = los.magnitude * los.magnitude / std::pow(10.0, target_lmr_db / 10.0);
        const double scale = wanted / multipath;
        for (auto &s : out)
            s.rcs *= scale;
        return out;
    }

    double power_for_snr(double snr_db, const PathGain &los, double noise_variance)
    {
        if (!(los.magnitude > 0.0))
            throw InvalidArgument("power_for_snr: LOS gain must be non-zero");
        if (!(noise_variance > 0.0))
            throw InvalidArgument("power_for_snr: noise variance must be positive");
        return std::pow(10.0, snr_db / 10.0) * noise_variance / (los.magnitude * los.magnitude);
    }

    cdouble complex_gaussian(std::mt19937_64 &rng, double variance)
    {
        std::normal_distribution<double> normal(0.0, std::sqrt(0.5 * variance));
        const double re = normal(rng);
        const double im = normal(rng);
        return {re, im};
    }
}
