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

#ifndef NFRA_CHANNEL_HPP
#define NFRA_CHANNEL_HPP

#include "nfra/array_geometry.hpp"
#include "nfra/spherical_harmonics.hpp"
#include "nfra/types.hpp"

#include <random>
#include <span>
#include <vector>

namespace nfra
{
    // Physical constants and the UE uncertainty region.
    // Defaults: 30 GHz carrier, 1 MHz bandwidth, -173.855 dBm/Hz noise PSD,
    // base station at [0, 0, 5], region 9<x<14, -3<y<3, 0<z<4.
    struct ScenarioConfig
    {
        double carrier_hz = 30.0e9;
        double bandwidth_hz = 1.0e6;
        double noise_psd_dbm_hz = -173.855;
        double tx_power_w = 1.0;
        Vec3 bs_position = Vec3(0.0, 0.0, 5.0);
        Box region{Vec3(9.0, -3.0, 0.0), Vec3(14.0, 3.0, 4.0)};

        double wavelength() const { return kSpeedOfLight / carrier_hz; }

        // sigma_v^2 = 10^((N0 - 30) / 10) * B, in watts
        double noise_variance() const;

        void validate() const;
    };

    struct Scatterer
    {
        Vec3 position = Vec3::Zero();
        double rcs = 0.0;   // m^2
        double phase = 0.0; // rad
    };

    // beta = magnitude * exp(j phase)
    struct PathGain
    {
        cdouble value{0.0, 0.0};
        double magnitude = 0.0;
        double phase = 0.0;

        static PathGain polar(double magnitude, double phase);
    };

    // LOS: rho = lambda / (4 pi d_u)
    PathGain path_gain_los(double ue_distance, double wavelength, double phase);

    // Single-bounce NLOS: rho = sqrt(4 pi rcs) lambda / (16 pi^2 d_b d_u)
    PathGain path_gain_nlos(double bs_distance, double ue_distance, double rcs, double wavelength, double phase);

    // Everything needed to evaluate the effective array response d(p)
    struct ArrayModel
    {
        ElementLayout layout;
        BasisSet basis;
        double wavelength;

        std::size_t elements() const { return layout.size(); }
        int basis_size() const { return basis.size(); }
        Eigen::Index dimension() const { return static_cast<Eigen::Index>(layout.size()) * basis.size(); }
    };

    // d(p) in C^{MQ}: block m (entries mQ .. mQ+Q-1) is a_m(p) * b(theta_m(p))
    CVector effective_arv(const ArrayModel &model, const Vec3 &p);
    void effective_arv_into(const ArrayModel &model, const Vec3 &p, std::span<cdouble> out);

    // Per-element EM weights e_m in C^Q, stored as the columns of a Q x M matrix.
    //
    // The EM matrix E (M x MQ) has e_m^T in row m, block m, so that
    //     [E d]_m = e_m^T d_m        and        [E^T f]_m = f_m e_m,
    // and the composite codeword w = E^T f satisfies d^T w = (E d)^T f.
    class EmPrecoder
    {
    public:
        explicit EmPrecoder(CMatrix weights);

        // Every element radiates the first basis function only
        static EmPrecoder isotropic(std::size_t elements, int basis_size);

        std::size_t elements() const { return static_cast<std::size_t>(weights_.cols()); }
        int basis_size() const { return static_cast<int>(weights_.rows()); }
        const CMatrix &weights() const { return weights_; }
        auto element(std::size_t m) const { return weights_.col(static_cast<Eigen::Index>(m)); }

        // E d (length M)
        CVector apply(const CVector &d) const;
        // E^T f (length MQ)
        CVector compose(const CVector &digital) const;
        // Dense M x MQ matrix, mostly for tests
        CMatrix matrix() const;

    private:
        CMatrix weights_;
    };

    // NLOS gain of a scatterer for a UE at `ue`, distances measured from the array center
    PathGain scatterer_gain(const ArrayModel &model, const Scatterer &scatterer, const Vec3 &ue);

    // h = beta_0 E d(p_u) + sum_i beta_i E d(p_s,i)
    CVector channel_vector(const ArrayModel &model, const EmPrecoder &em, const PathGain &los, const Vec3 &ue,
                           std::span<const Scatterer> scatterers);

    // beta_0 d(p_u) + sum_i beta_i d(p_s,i), the MQ-vector that every pilot projects onto
    CVector composite_channel(const ArrayModel &model, const PathGain &los, const Vec3 &ue,
                              std::span<const Scatterer> scatterers);

    // y = sqrt(P) (beta_0 d(p_u)^T + sum_i beta_i d(p_s,i)^T) w + v
    cdouble received_pilot(const ArrayModel &model, const CVector &codeword, const PathGain &los, const Vec3 &ue,
                           std::span<const Scatterer> scatterers, double tx_power, cdouble noise);

    // |beta_0|^2 / sum_i |beta_i|^2 in dB (+inf without multipath power)
    double lmr_db(const ArrayModel &model, const PathGain &los, const Vec3 &ue, std::span<const Scatterer> scatterers);

    // Scale every RCS by one common factor so that lmr_db(...) == target_lmr_db.
    // target = +inf zeroes all RCS values.
    std::vector<Scatterer> calibrate_lmr(const ArrayModel &model, const PathGain &los, const Vec3 &ue,
                                         std::span<const Scatterer> scatterers, double target_lmr_db);

    // Transmit power that yields SNR = P |beta_0|^2 / sigma_v^2
    double power_for_snr(double snr_db, const PathGain &los, double noise_variance);

    // Circularly-symmetric complex Gaussian draw with E|v|^2 = variance
    cdouble complex_gaussian(std::mt19937_64 &rng, double variance);
}

#endif
