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

#ifndef NFRA_SIMULATION_HPP
#define NFRA_SIMULATION_HPP

#include "nfra/config.hpp"
#include "nfra/localizer.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nfra
{
    struct TrialResult
    {
        std::string method;
        double sweep_value = 0.0;
        int trial = 0;
        Vec3 truth = Vec3::Zero();
        TwoStageResult estimate;
        std::array<double, 3> squared_error{}; // coarse, mid, refined (m^2)
        double peb_trace = 0.0;                // m^2, 0 for a noiseless trial
        bool flagged = false;
        std::string flag_reason;
    };

    struct CurvePoint
    {
        std::string method;
        std::string sweep_name;
        double sweep_value = 0.0;
        double rmse_m = 0.0;
        double peb_m = 0.0;        // sqrt(peb_trace_m2)
        double peb_trace_m2 = 0.0; // mean trace over unflagged trials
        int trials = 0;            // unflagged trials
        int failures = 0;
    };

    struct SweepResult
    {
        std::vector<CurvePoint> points;
        std::vector<TrialResult> trials;
    };

    // sqrt of the mean squared error of one stage over unflagged trials.
    // Throws InvalidArgument when every trial is flagged or the list is empty.
    double compute_rmse(std::span<const TrialResult> results, Stage stage = Stage::kRefined);

    std::string_view sweep_name(SweepKind kind);

    // Seed derivation. The geometry stream (UE, path phases, scatterers) depends
    // on (seed, sweep index, trial) only, so every method sees the same draws;
    // the noise stream mixes in a hash of the method name.
    std::uint64_t splitmix64(std::uint64_t x);
    std::uint64_t trial_seed(std::uint64_t seed, std::size_t sweep_index, std::size_t trial);
    std::uint64_t noise_seed(std::uint64_t trial_seed, std::string_view method);

    // NF_RA_THREADS (when set to a positive integer) overrides `requested`
    int resolve_threads(int requested);

    // Runs body(i) for i in [0, n) on up to `threads` threads
    void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)> &body);

    SweepResult run_sweep(const ExperimentConfig &config);
}

#endif
