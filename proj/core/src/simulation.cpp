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

#include "nfra/simulation.hpp"
#include "nfra/errors.hpp"
#include "nfra/fim.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <thread>

namespace nfra
{
    double compute_rmse(std::span<const TrialResult> results, Stage stage)
    {
        const auto idx = static_cast<std::size_t>(stage);
        double sum = 0.0;
        std::size_t count = 0;
        for (const auto &r : results)
        {
            if (r.flagged)
                continue;
            sum += r.squared_error[idx];
            ++count;
        }
        if (count == 0)
            throw InvalidArgument("compute_rmse: no unflagged trials");
        return std::sqrt(sum / static_cast<double>(count));
    }

    std::string_view sweep_name(SweepKind kind)
    {
        switch (kind)
        {
        case SweepKind::kSnr:
            return "snr_db";
        case SweepKind::kQ:
            return "q";
        case SweepKind::kLmr:
            return "lmr_db";
        }
        return "unknown";
    }

    std::uint64_t splitmix64(std::uint64_t x)
    {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    std::uint64_t trial_seed(std::uint64_t seed, std::size_t sweep_index, std::size_t trial)
    {
        std::uint64_t s = splitmix64(seed);
        s = splitmix64(s ^ static_cast<std::uint64_t>(sweep_index));
        return splitmix64(s ^ static_cast<std::uint64_t>(trial));
    }

    std::uint64_t noise_seed(std::uint64_t trial_seed, std::string_view method)
    {
        // FNV-1a
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (unsigned char c : method)
        {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
        return splitmix64(trial_seed ^ h);
    }

    int resolve_threads(int requested)
    {
        if (const char *env = std::getenv("NF_RA_THREADS"))
        {
            char *end = nullptr;
            const long v = std::strtol(env, &end, 10);
            if (end != env && *end == '\0' && v > 0 && v <= 4096)
                return static_cast<int>(v);
        }
        return std::max(requested, 1);
    }

    void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)> &body)
    {
        const auto workers = static_cast<std::size_t>(std::max(1, threads));
        if (workers == 1 || n <= 1)
        {
            for (std::size_t i = 0; i < n; ++i)
                body(i);
            return;
        }

        std::atomic<std::size_t> next{0};
        std::exception_ptr error;
        std::mutex error_mutex;
        auto run = [&] {
            for (std::size_t i = next++; i < n; i = next++)
            {
                try
                {
                    body(i);
                }
                catch (...)
                {
                    std::lock_guard lock(error_mutex);
                    if (!error)
                        error = std::current_exception();
                }
            }
        };

        std::vector<std::thread> pool;
        for (std::size_t w = 1; w < std::min(workers, n); ++w)
            pool.emplace_back(run);
        run();
        for (auto &t : pool)
            t.join();
        if (error)
            std::rethrow_exception(error);
    }

    namespace
    {
        constexpr double kTwoPi = 2.0 * kPi;

        struct PreparedMethod
        {
            CodebookDesign design;
            std::unique_ptr<Localizer> localizer;
            CMatrix unit;
        };

        struct Geometry
        {
            Vec3 ue;
            PathGain los;
            std::vector<Scatterer> scatterers;
        };

        Vec3 uniform_in(const Box &box, std::mt19937_64 &rng)
        {
            std::uniform_real_distribution<double> u(0.0, 1.0);
            const double a = u(rng), b = u(rng), c = u(rng);
            return box.lower + Vec3(a, b, c).cwiseProduct(box.extent());
        }

        // Draws depend only on the trial seed so every method sees the same scene
        Geometry draw_geometry(const ExperimentConfig &config, const ArrayModel &model, std::uint64_t seed,
                               double lmr)
        {
            std::mt19937_64 rng(seed);
            std::uniform_real_distribution<double> phase(0.0, kTwoPi);
            const Box &region = config.scenario.region;

            Geometry g;
            g.ue = config.ue_mode == UeMode::kRandom ? uniform_in(region, rng) : config.ue_position;
            const double distance = (g.ue - model.layout.center()).norm();
            g.los = path_gain_los(distance, model.wavelength, phase(rng));

            if (std::isfinite(lmr))
            {
                std::vector<Scatterer> drawn(static_cast<std::size_t>(config.num_scatterers));
                for (auto &s : drawn)
                {
                    s.position = uniform_in(region, rng);
                    s.phase = phase(rng);
                    s.rcs = config.scatterer_rcs_m2;
                }
                g.scatterers = calibrate_lmr(model, g.los, g.ue, drawn, lmr);
            }
            return g;
        }

        void run_trial(const ExperimentConfig &config, const PreparedMethod &prepared, std::string_view method,
                       std::size_t sweep_index, std::size_t trial, double snr, double lmr, TrialResult &out)
        {
            const ArrayModel &model = prepared.design.model;
            const std::uint64_t seed = trial_seed(config.seed, sweep_index, trial);
            const double noise_variance = config.scenario.noise_variance();

            try
            {
                const Geometry g = draw_geometry(config, model, seed, lmr);
                out.truth = g.ue;

                const bool noiseless = std::isinf(snr) && snr > 0.0;
                const double power = noiseless ? config.scenario.tx_power_w : power_for_snr(snr, g.los, noise_variance);

                const CVector channel = composite_channel(model, g.los, g.ue, g.scatterers);
                CVector y = std::sqrt(power) * (prepared.localizer->model().weighted().transpose() * channel);
                if (!noiseless)
                {
                    std::mt19937_64 rng(noise_seed(seed, method));
                    for (Eigen::Index t = 0; t < y.size(); ++t)
                        y[t] += complex_gaussian(rng, noise_variance);
                }

                out.estimate = prepared.localizer->localize(y);
                out.squared_error = {(out.estimate.coarse.position - g.ue).squaredNorm(),
                                     (out.estimate.mid.position - g.ue).squaredNorm(),
                                     (out.estimate.refined.position - g.ue).squaredNorm()};

                if (noiseless)
                {
                    out.peb_trace = 0.0;
                }
                else
                {
                    const StateParams state{g.ue, g.los.magnitude, g.los.phase};
                    const FisherMatrix j =
                        fim(model, prepared.unit, prepared.design.codebook.weights(), state, power, noise_variance);
                    out.peb_trace = peb(j).trace;
                }
            }
            catch (const Unidentifiable &e)
            {
                out.flagged = true;
                out.flag_reason = e.what();
            }
            catch (const DegenerateGeometry &e)
            {
                out.flagged = true;
                out.flag_reason = e.what();
            }
        }

        CurvePoint aggregate(std::span<const TrialResult> results, std::string method, std::string_view sweep,
                             double value, Stage stage)
        {
            CurvePoint p;
            p.method = std::move(method);
            p.sweep_name = std::string(sweep);
            p.sweep_value = value;
            double trace = 0.0;
            for (const auto &r : results)
            {
                if (r.flagged)
                {
                    ++p.failures;
                    continue;
                }
                ++p.trials;
                trace += r.peb_trace;
            }
            if (p.trials == 0)
                throw std::runtime_error("every trial failed for method " + p.method + " at " + p.sweep_name + " = " +
                                         std::to_string(value) + ": " + results.front().flag_reason);
            p.rmse_m = compute_rmse(results, stage);
            p.peb_trace_m2 = trace / static_cast<double>(p.trials);
            p.peb_m = std::sqrt(p.peb_trace_m2);
            return p;
        }
    }

    SweepResult run_sweep(const ExperimentConfig &config)
    {
        config.validate();
        const int threads = resolve_threads(config.threads);
        const std::vector<Vec3> samples = inclusive_lattice(config.scenario.region, config.sample_lattice);

        // Designs depend on (method, Q) only; SNR and LMR sweeps reuse them
        std::map<std::pair<int, int>, PreparedMethod> prepared;
        auto prepare = [&](Method method, int q) -> const PreparedMethod & {
            const auto key = std::make_pair(static_cast<int>(method), q);
            if (auto it = prepared.find(key); it != prepared.end())
                return it->second;
            PreparedMethod p{design_codebook(method, config.array_model(q), config.scenario, config.codebook_lattice,
                                             samples),
                             nullptr, CMatrix()};
            p.unit = p.design.codebook.unit_matrix();
            p.localizer = std::make_unique<Localizer>(SignalModel(p.design.model, p.design.codebook),
                                                      config.scenario.region, config.localization);
            return prepared.emplace(key, std::move(p)).first->second;
        };

        SweepResult result;
        const std::string_view name = sweep_name(config.sweep);
        for (std::size_t s = 0; s < config.sweep_values.size(); ++s)
        {
            const double value = config.sweep_values[s];
            const int q = config.sweep == SweepKind::kQ ? static_cast<int>(value) : config.num_bases;
            const double snr = config.sweep == SweepKind::kSnr ? value : config.snr_db;
            const double lmr = config.sweep == SweepKind::kLmr ? value : config.lmr_db;

            for (Method method : config.methods)
            {
                const PreparedMethod &p = prepare(method, q);
                const std::string label(to_string(method));

                std::vector<TrialResult> trials(static_cast<std::size_t>(config.trials));
                parallel_for(trials.size(), threads, [&](std::size_t t) {
                    TrialResult &r = trials[t];
                    r.method = label;
                    r.sweep_value = value;
                    r.trial = static_cast<int>(t);
                    run_trial(config, p, label, s, t, snr, lmr, r);
                });

                result.points.push_back(aggregate(trials, label, name, value, Stage::kRefined));
                if (config.report_stages)
                {
                    result.points.push_back(aggregate(trials, label + ":coarse", name, value, Stage::kCoarse));
                    result.points.push_back(aggregate(trials, label + ":mid", name, value, Stage::kMid));
                }
                for (auto &r : trials)
                    result.trials.push_back(std::move(r));
            }
        }
        return result;
    }
}
