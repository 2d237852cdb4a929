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

#ifndef NFRA_CONFIG_HPP
#define NFRA_CONFIG_HPP

#include "nfra/channel.hpp"
#include "nfra/localizer.hpp"
#include "nfra/precoder.hpp"
#include "nfra/types.hpp"

#include <cstdint>
#include <limits>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace nfra
{
    enum class SweepKind
    {
        kSnr, // sweep values are SNR in dB
        kQ,   // sweep values are basis sizes
        kLmr, // sweep values are LOS-to-multipath ratios in dB
    };

    enum class UeMode
    {
        kFixed,  // every trial uses ue_position
        kRandom, // uniform in the uncertainty region, one draw per trial
    };

    std::string_view to_string(SweepKind kind);
    std::string_view to_string(UeMode mode);

    struct ExperimentConfig
    {
        ScenarioConfig scenario;

        int array_rows = 16;
        int array_cols = 16;
        double element_spacing_m = 0.0; // 0 selects lambda / 2
        int num_bases = 9;

        Lattice codebook_lattice{2, 2, 2};
        Lattice sample_lattice{5, 5, 3};

        SweepKind sweep = SweepKind::kSnr;
        std::vector<double> sweep_values{0.0, 10.0, 20.0, 30.0, 40.0};
        double snr_db = 15.0;                                      // used by q and lmr sweeps
        double lmr_db = std::numeric_limits<double>::infinity(); // used by snr and q sweeps
        int num_scatterers = 10;
        double scatterer_rcs_m2 = 1.0;

        int trials = 200;
        std::uint64_t seed = 1;
        std::vector<Method> methods{Method::kRaOptimal, Method::kRaDirectional, Method::kConventional};

        UeMode ue_mode = UeMode::kFixed;
        Vec3 ue_position = Vec3(10.35, 1.67, 0.0);

        TwoStageOptions localization;
        bool report_stages = false; // extra rows for the coarse and mid stages
        int threads = 1;

        double spacing() const { return element_spacing_m > 0.0 ? element_spacing_m : scenario.wavelength() / 2.0; }
        ArrayModel array_model(int basis_size) const;

        // Throws ConfigError naming the offending key
        void validate() const;
    };

    // Flat "key = value" text, '#' starts a comment. Vectors are comma separated
    // ("10.35, 1.67, 0"), lattices are "2x2x2". Unknown keys are errors.
    ExperimentConfig parse_config(std::string_view text);
    ExperimentConfig load_config(const std::filesystem::path &path);

    // Canonical text form accepted by parse_config
    std::string format_config(const ExperimentConfig &config);
}

#endif
