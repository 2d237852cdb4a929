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

// nfra: experiment runner.
//
//   nfra simulate --config run.cfg [--out results.csv] [--format csv|json] [--seed N] [--threads N]
//   nfra peb      --config run.cfg --at 10.35,1.67,0 [--method ra-optimal]
//   nfra codebook --config run.cfg --export codebook.json [--method ra-optimal] [--with-dictionary]
//
// Exit codes: 0 success, 2 configuration or usage error, 3 runtime failure.

#include "nfra/codebook_io.hpp"
#include "nfra/config.hpp"
#include "nfra/errors.hpp"
#include "nfra/fim.hpp"
#include "nfra/results_io.hpp"
#include "nfra/simulation.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

namespace
{
    constexpr int kConfigError = 2;
    constexpr int kRuntimeError = 3;

    // Usage problems and bad configs share one exit code
    struct UsageError : std::runtime_error
    {
        using std::runtime_error::runtime_error;
    };

    nfra::ExperimentConfig load(const std::string &path)
    {
        try
        {
            return nfra::load_config(path);
        }
        catch (const nfra::IoError &e)
        {
            throw nfra::ConfigError(e.what());
        }
    }

    nfra::Vec3 parse_point(const std::string &text)
    {
        nfra::Vec3 p;
        char tail = 0;
        if (std::sscanf(text.c_str(), "%lf,%lf,%lf%c", &p.x(), &p.y(), &p.z(), &tail) != 3)
            throw UsageError("--at expects x,y,z in meters, got '" + text + "'");
        return p;
    }

    int simulate(const std::string &config_path, const std::string &out, const std::string &format,
                 std::optional<std::uint64_t> seed, std::optional<int> threads)
    {
        nfra::ExperimentConfig config = load(config_path);
        if (seed)
            config.seed = *seed;
        if (threads)
            config.threads = *threads;
        config.validate();

        nfra::ResultFormat fmt;
        try
        {
            fmt = nfra::parse_result_format(format);
        }
        catch (const nfra::InvalidArgument &e)
        {
            throw UsageError(e.what());
        }

        const nfra::SweepResult result = nfra::run_sweep(config);
        if (out.empty() || out == "-")
            std::cout << nfra::format_results(result.points, fmt);
        else
            nfra::emit_results(result.points, out, fmt);

        for (const auto &p : result.points)
            if (p.failures > 0)
                std::cerr << "warning: " << p.method << " at " << p.sweep_name << " = " << p.sweep_value << ": "
                          << p.failures << " of " << (p.trials + p.failures) << " trials failed\n";
        return 0;
    }

    int peb_at(const std::string &config_path, const std::string &at, const std::vector<std::string> &methods)
    {
        nfra::ExperimentConfig config = load(config_path);
        const nfra::Vec3 point = parse_point(at);
        if (!std::isfinite(config.snr_db))
            throw UsageError("peb needs a finite snr_db in the config");
        for (const auto &name : methods)
            nfra::parse_method(name);

        const auto samples = nfra::inclusive_lattice(config.scenario.region, config.sample_lattice);
        const double noise = config.scenario.noise_variance();
        std::printf("# PEB at [%g, %g, %g] m, SNR %g dB, Q = %d\n", point.x(), point.y(), point.z(), config.snr_db,
                    config.num_bases);
        std::printf("%-16s %14s %14s %14s\n", "method", "peb_m", "peb_trace_m2", "worst_peb_m");
        for (const auto &name : methods)
        {
            const nfra::Method method = nfra::parse_method(name);
            const nfra::CodebookDesign design = nfra::design_codebook(
                method, config.array_model(config.num_bases), config.scenario, config.codebook_lattice, samples);
            const double distance = (point - design.model.layout.center()).norm();
            const nfra::PathGain los = nfra::path_gain_los(distance, design.model.wavelength, 0.0);
            const double power = nfra::power_for_snr(config.snr_db, los, noise);
            const nfra::StateParams state{point, los.magnitude, 0.0};
            const nfra::Peb bound = nfra::peb(nfra::fim(design.model, design.codebook.unit_matrix(),
                                                        design.codebook.weights(), state, power, noise));
            // The design objective is evaluated at unit transmit power
            const double worst = std::sqrt(design.max_peb_trace * config.scenario.tx_power_w / power);
            std::printf("%-16s %14.9g %14.9g %14.9g\n", name.c_str(), bound.rmse, bound.trace, worst);
        }
        return 0;
    }

    int export_codebook(const std::string &config_path, const std::string &path, const std::string &method_name,
                        bool with_dictionary)
    {
        const nfra::ExperimentConfig config = load(config_path);
        nfra::Method method;
        try
        {
            method = nfra::parse_method(method_name);
        }
        catch (const nfra::InvalidArgument &e)
        {
            throw UsageError(e.what());
        }

        const auto samples = nfra::inclusive_lattice(config.scenario.region, config.sample_lattice);
        const nfra::CodebookDesign design = nfra::design_codebook(
            method, config.array_model(config.num_bases), config.scenario, config.codebook_lattice, samples);

        nfra::CodebookExportOptions options;
        std::optional<nfra::DictionaryMatrix> dictionary;
        if (with_dictionary)
        {
            dictionary = nfra::build_dictionary(nfra::SignalModel(design.model, design.codebook),
                                                nfra::GridSpec{config.scenario.region, config.localization.coarse_step});
            options.dictionary = &*dictionary;
        }
        nfra::export_codebook(path, design.model, design.codebook, options);
        std::cerr << "wrote " << design.codebook.size() << " codewords (worst-case PEB trace "
                  << design.max_peb_trace << " m^2 at unit power) to " << path << '\n';
        return 0;
    }
}

int main(int argc, char **argv)
{
    CLI::App app{"Near-field localization with reconfigurable antenna arrays"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out;
    std::string format = "csv";
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;

    auto *sim = app.add_subcommand("simulate", "Run a Monte-Carlo sweep and write RMSE/PEB curves");
    sim->add_option("--config", config_path, "Experiment config file")->required();
    sim->add_option("--out", out, "Output path (stdout when omitted)");
    sim->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    sim->add_option("--seed", seed, "Override the config seed");
    sim->add_option("--threads", threads, "Worker threads (NF_RA_THREADS takes precedence)")
        ->check(CLI::PositiveNumber);

    std::string at;
    std::vector<std::string> peb_methods{"ra-optimal", "ra-directional", "conventional"};
    auto *peb = app.add_subcommand("peb", "Print the position error bound at a point");
    peb->add_option("--config", config_path, "Experiment config file")->required();
    peb->add_option("--at", at, "Point as x,y,z in meters")->required();
    peb->add_option("--method", peb_methods, "Methods to evaluate");

    std::string export_path;
    std::string codebook_method = "ra-optimal";
    bool with_dictionary = false;
    auto *cb = app.add_subcommand("codebook", "Design a codebook and export it as JSON");
    cb->add_option("--config", config_path, "Experiment config file")->required();
    cb->add_option("--export", export_path, "Output JSON path")->required();
    cb->add_option("--method", codebook_method, "ra-optimal, ra-directional or conventional");
    cb->add_flag("--with-dictionary", with_dictionary, "Also store the coarse localization dictionary");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::CallForHelp &e)
    {
        return app.exit(e);
    }
    catch (const CLI::CallForAllHelp &e)
    {
        return app.exit(e);
    }
    catch (const CLI::ParseError &e)
    {
        app.exit(e);
        return kConfigError;
    }

    try
    {
        if (*sim)
            return simulate(config_path, out, format, seed, threads);
        if (*peb)
            return peb_at(config_path, at, peb_methods);
        return export_codebook(config_path, export_path, codebook_method, with_dictionary);
    }
    catch (const nfra::ConfigError &e)
    {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    }
    catch (const UsageError &e)
    {
        std::cerr << "usage error: " << e.what() << '\n';
        return kConfigError;
    }
    catch (const std::exception &e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntimeError;
    }
}
