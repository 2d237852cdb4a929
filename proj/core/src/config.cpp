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

#include "nfra/config.hpp"
#include "nfra/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace nfra
{
    std::string_view to_string(SweepKind kind)
    {
        switch (kind)
        {
        case SweepKind::kSnr:
            return "snr";
        case SweepKind::kQ:
            return "q";
        case SweepKind::kLmr:
            return "lmr";
        }
        return "unknown";
    }

    std::string_view to_string(UeMode mode)
    {
        return mode == UeMode::kFixed ? "fixed" : "random";
    }

    ArrayModel ExperimentConfig::array_model(int basis_size) const
    {
        const double lambda = scenario.wavelength();
        return ArrayModel{
            ElementLayout::upa(scenario.bs_position, array_rows, array_cols, spacing()),
            BasisSet(basis_size), lambda};
    }

    namespace
    {
        std::string_view trim(std::string_view s)
        {
            const auto first = s.find_first_not_of(" \t\r");
            if (first == std::string_view::npos)
                return {};
            const auto last = s.find_last_not_of(" \t\r");
            return s.substr(first, last - first + 1);
        }

        std::vector<std::string_view> split(std::string_view s, char sep)
        {
            std::vector<std::string_view> out;
            std::size_t start = 0;
            while (true)
            {
                const auto pos = s.find(sep, start);
                out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
                if (pos == std::string_view::npos)
                    break;
                start = pos + 1;
            }
            return out;
        }

        [[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected)
        {
            throw ConfigError("config key '" + std::string(key) + "': cannot parse '" + std::string(value) + "' as " +
                              std::string(expected));
        }

        double parse_double(std::string_view key, std::string_view text)
        {
            std::string_view s = trim(text);
            if (!s.empty() && s.front() == '+')
                s.remove_prefix(1);
            double v = 0.0;
            const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
            if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
                bad_value(key, text, "a number");
            return v;
        }

        long long parse_integer(std::string_view key, std::string_view text)
        {
            const std::string_view s = trim(text);
            long long v = 0;
            const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
            if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
                bad_value(key, text, "an integer");
            return v;
        }

        int parse_int(std::string_view key, std::string_view text)
        {
            const long long v = parse_integer(key, text);
            if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
                bad_value(key, text, "a 32-bit integer");
            return static_cast<int>(v);
        }

        std::vector<double> parse_list(std::string_view key, std::string_view text)
        {
            std::vector<double> out;
            for (auto item : split(text, ','))
                out.push_back(parse_double(key, item));
            return out;
        }

        Vec3 parse_vec3(std::string_view key, std::string_view text)
        {
            const auto v = parse_list(key, text);
            if (v.size() != 3)
                bad_value(key, text, "three comma-separated numbers");
            return {v[0], v[1], v[2]};
        }

        Lattice parse_lattice(std::string_view key, std::string_view text)
        {
            const auto parts = split(text, 'x');
            if (parts.size() != 3)
                bad_value(key, text, "a lattice like 2x2x2");
            return {parse_int(key, parts[0]), parse_int(key, parts[1]), parse_int(key, parts[2])};
        }

        bool parse_bool(std::string_view key, std::string_view text)
        {
            const auto s = trim(text);
            if (s == "true" || s == "1" || s == "yes")
                return true;
            if (s == "false" || s == "0" || s == "no")
                return false;
            bad_value(key, text, "a boolean");
        }

        using Setter = std::function<void(ExperimentConfig &, std::string_view, std::string_view)>;

        const std::map<std::string, Setter, std::less<>> &setters()
        {
            static const std::map<std::string, Setter, std::less<>> table{
                {"carrier_hz", [](auto &c, auto k, auto v) { c.scenario.carrier_hz = parse_double(k, v); }},
                {"bandwidth_hz", [](auto &c, auto k, auto v) { c.scenario.bandwidth_hz = parse_double(k, v); }},
                {"noise_psd_dbm_hz", [](auto &c, auto k, auto v) { c.scenario.noise_psd_dbm_hz = parse_double(k, v); }},
                {"bs_position", [](auto &c, auto k, auto v) { c.scenario.bs_position = parse_vec3(k, v); }},
                {"region_min", [](auto &c, auto k, auto v) { c.scenario.region.lower = parse_vec3(k, v); }},
                {"region_max", [](auto &c, auto k, auto v) { c.scenario.region.upper = parse_vec3(k, v); }},
                {"array_rows", [](auto &c, auto k, auto v) { c.array_rows = parse_int(k, v); }},
                {"array_cols", [](auto &c, auto k, auto v) { c.array_cols = parse_int(k, v); }},
                {"element_spacing_m", [](auto &c, auto k, auto v) { c.element_spacing_m = parse_double(k, v); }},
                {"num_bases", [](auto &c, auto k, auto v) { c.num_bases = parse_int(k, v); }},
                {"codebook_lattice", [](auto &c, auto k, auto v) { c.codebook_lattice = parse_lattice(k, v); }},
                {"sample_lattice", [](auto &c, auto k, auto v) { c.sample_lattice = parse_lattice(k, v); }},
                {"sweep",
                 [](auto &c, auto k, auto v) {
                     const auto s = trim(v);
                     if (s == "snr")
                         c.sweep = SweepKind::kSnr;
                     else if (s == "q")
                         c.sweep = SweepKind::kQ;
                     else if (s == "lmr")
                         c.sweep = SweepKind::kLmr;
                     else
                         bad_value(k, v, "one of snr, q, lmr");
                 }},
                {"sweep_values", [](auto &c, auto k, auto v) { c.sweep_values = parse_list(k, v); }},
                {"snr_db", [](auto &c, auto k, auto v) { c.snr_db = parse_double(k, v); }},
                {"lmr_db", [](auto &c, auto k, auto v) { c.lmr_db = parse_double(k, v); }},
                {"num_scatterers", [](auto &c, auto k, auto v) { c.num_scatterers = parse_int(k, v); }},
                {"scatterer_rcs_m2", [](auto &c, auto k, auto v) { c.scatterer_rcs_m2 = parse_double(k, v); }},
                {"trials", [](auto &c, auto k, auto v) { c.trials = parse_int(k, v); }},
                {"seed",
                 [](auto &c, auto k, auto v) {
                     const auto s = trim(v);
                     std::uint64_t seed = 0;
                     const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), seed);
                     if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
                         bad_value(k, v, "an unsigned 64-bit integer");
                     c.seed = seed;
                 }},
                {"methods",
                 [](auto &c, auto k, auto v) {
                     c.methods.clear();
                     for (auto name : split(v, ','))
                     {
                         try
                         {
                             c.methods.push_back(parse_method(name));
                         }
                         catch (const InvalidArgument &)
                         {
                             bad_value(k, name, "one of ra-optimal, ra-directional, conventional");
                         }
                     }
                 }},
                {"ue_mode",
                 [](auto &c, auto k, auto v) {
                     const auto s = trim(v);
                     if (s == "fixed")
                         c.ue_mode = UeMode::kFixed;
                     else if (s == "random")
                         c.ue_mode = UeMode::kRandom;
                     else
                         bad_value(k, v, "fixed or random");
                 }},
                {"ue_position", [](auto &c, auto k, auto v) { c.ue_position = parse_vec3(k, v); }},
                {"coarse_step_m", [](auto &c, auto k, auto v) { c.localization.coarse_step = parse_vec3(k, v); }},
                {"mid_step_m", [](auto &c, auto k, auto v) { c.localization.mid_step = parse_vec3(k, v); }},
                {"mid_extent_m", [](auto &c, auto k, auto v) { c.localization.mid_extent = parse_vec3(k, v); }},
                {"coarse_starts",
                 [](auto &c, auto k, auto v) {
                     const int n = parse_int(k, v);
                     if (n < 1)
                         bad_value(k, v, "an integer >= 1");
                     c.localization.coarse_starts = static_cast<std::size_t>(n);
                 }},
                {"report_stages", [](auto &c, auto k, auto v) { c.report_stages = parse_bool(k, v); }},
                {"threads", [](auto &c, auto k, auto v) { c.threads = parse_int(k, v); }},
            };
            return table;
        }

        void require(bool ok, std::string_view key, std::string_view what)
        {
            if (!ok)
                throw ConfigError("config key '" + std::string(key) + "': " + std::string(what));
        }

        bool positive_lattice(const Lattice &l) { return l.nx >= 1 && l.ny >= 1 && l.nz >= 1; }
    }

    void ExperimentConfig::validate() const
    {
        require(std::isfinite(scenario.carrier_hz) && scenario.carrier_hz > 0.0, "carrier_hz", "must be positive");
        require(std::isfinite(scenario.bandwidth_hz) && scenario.bandwidth_hz > 0.0, "bandwidth_hz", "must be positive");
        require(std::isfinite(scenario.noise_psd_dbm_hz), "noise_psd_dbm_hz", "must be finite");
        require(!scenario.region.empty(), "region_max", "must be >= region_min on every axis");
        require(array_rows >= 1, "array_rows", "must be >= 1");
        require(array_cols >= 1, "array_cols", "must be >= 1");
        require(element_spacing_m >= 0.0 && std::isfinite(element_spacing_m), "element_spacing_m",
                "must be non-negative (0 selects half a wavelength)");
        require(num_bases >= 1 && num_bases <= kMaxBasisSize, "num_bases", "out of range");
        require(positive_lattice(codebook_lattice), "codebook_lattice", "every axis needs at least one point");
        require(positive_lattice(sample_lattice), "sample_lattice", "every axis needs at least one point");
        require(!sweep_values.empty(), "sweep_values", "must not be empty");
        for (double v : sweep_values)
        {
            switch (sweep)
            {
            case SweepKind::kSnr:
                require(!std::isnan(v) && v != -std::numeric_limits<double>::infinity(), "sweep_values",
                        "SNR values must be numbers or inf");
                break;
            case SweepKind::kQ:
                require(v >= 1.0 && v <= kMaxBasisSize && v == std::floor(v), "sweep_values",
                        "basis sizes must be integers in range");
                break;
            case SweepKind::kLmr:
                require(!std::isnan(v), "sweep_values", "LMR values must be numbers or inf");
                break;
            }
        }
        require(!std::isnan(snr_db) && snr_db != -std::numeric_limits<double>::infinity(), "snr_db",
                "must be a number or inf");
        require(!std::isnan(lmr_db), "lmr_db", "must be a number or inf");
        require(num_scatterers >= 0, "num_scatterers", "must be non-negative");
        require(scatterer_rcs_m2 >= 0.0 && std::isfinite(scatterer_rcs_m2), "scatterer_rcs_m2",
                "must be non-negative");
        require(trials >= 1, "trials", "must be >= 1");
        require(!methods.empty(), "methods", "must not be empty");
        require(ue_position.allFinite(), "ue_position", "must be finite");
        require((localization.coarse_step.array() > 0.0).all(), "coarse_step_m", "steps must be positive");
        require((localization.mid_step.array() > 0.0).all(), "mid_step_m", "steps must be positive");
        require((localization.mid_extent.array() >= 0.0).all(), "mid_extent_m", "must be non-negative");
        require(localization.coarse_starts >= 1, "coarse_starts", "must be >= 1");
        require(threads >= 1, "threads", "must be >= 1");

        const bool lmr_finite = sweep == SweepKind::kLmr
                                    ? std::any_of(sweep_values.begin(), sweep_values.end(),
                                                  [](double v) { return std::isfinite(v); })
                                    : std::isfinite(lmr_db);
        if (lmr_finite)
            require(num_scatterers >= 1 && scatterer_rcs_m2 > 0.0, "num_scatterers",
                    "a finite LMR needs at least one scatterer with positive RCS");
    }

    ExperimentConfig parse_config(std::string_view text)
    {
        ExperimentConfig config;
        std::map<std::string, int, std::less<>> seen;
        int line_no = 0;
        for (auto raw : split(text, '\n'))
        {
            ++line_no;
            std::string_view line = raw;
            if (const auto hash = line.find('#'); hash != std::string_view::npos)
                line = line.substr(0, hash);
            line = trim(line);
            if (line.empty())
                continue;

            const auto eq = line.find('=');
            if (eq == std::string_view::npos)
                throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
            const std::string key(trim(line.substr(0, eq)));
            const std::string_view value = trim(line.substr(eq + 1));

            const auto &table = setters();
            const auto it = table.find(key);
            if (it == table.end())
                throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
            if (auto [pos, inserted] = seen.emplace(key, line_no); !inserted)
                throw ConfigError("config line " + std::to_string(line_no) + ": key '" + key +
                                  "' already set on line " + std::to_string(pos->second));
            it->second(config, key, value);
        }
        config.validate();
        return config;
    }

    ExperimentConfig load_config(const std::filesystem::path &path)
    {
        std::ifstream in(path);
        if (!in)
            throw IoError("cannot open config file '" + path.string() + "'");
        std::ostringstream buffer;
        buffer << in.rdbuf();
        if (in.bad())
            throw IoError("error reading config file '" + path.string() + "'");
        return parse_config(buffer.str());
    }

    namespace
    {
        std::string number(double v)
        {
            if (std::isinf(v))
                return v > 0 ? "inf" : "-inf";
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.17g", v);
            return buf;
        }

        std::string vec3(const Vec3 &v) { return number(v.x()) + ", " + number(v.y()) + ", " + number(v.z()); }

        std::string lattice(const Lattice &l)
        {
            return std::to_string(l.nx) + "x" + std::to_string(l.ny) + "x" + std::to_string(l.nz);
        }
    }

    std::string format_config(const ExperimentConfig &c)
    {
        std::ostringstream out;
        out << "carrier_hz = " << number(c.scenario.carrier_hz) << '\n'
            << "bandwidth_hz = " << number(c.scenario.bandwidth_hz) << '\n'
            << "noise_psd_dbm_hz = " << number(c.scenario.noise_psd_dbm_hz) << '\n'
            << "bs_position = " << vec3(c.scenario.bs_position) << '\n'
            << "region_min = " << vec3(c.scenario.region.lower) << '\n'
            << "region_max = " << vec3(c.scenario.region.upper) << '\n'
            << "array_rows = " << c.array_rows << '\n'
            << "array_cols = " << c.array_cols << '\n'
            << "element_spacing_m = " << number(c.element_spacing_m) << '\n'
            << "num_bases = " << c.num_bases << '\n'
            << "codebook_lattice = " << lattice(c.codebook_lattice) << '\n'
            << "sample_lattice = " << lattice(c.sample_lattice) << '\n'
            << "sweep = " << to_string(c.sweep) << '\n'
            << "sweep_values = ";
        for (std::size_t i = 0; i < c.sweep_values.size(); ++i)
            out << (i ? ", " : "") << number(c.sweep_values[i]);
        out << '\n'
            << "snr_db = " << number(c.snr_db) << '\n'
            << "lmr_db = " << number(c.lmr_db) << '\n'
            << "num_scatterers = " << c.num_scatterers << '\n'
            << "scatterer_rcs_m2 = " << number(c.scatterer_rcs_m2) << '\n'
            << "trials = " << c.trials << '\n'
            << "seed = " << c.seed << '\n'
            << "methods = ";
        for (std::size_t i = 0; i < c.methods.size(); ++i)
            out << (i ? ", " : "") << to_string(c.methods[i]);
        out << '\n'
            << "ue_mode = " << to_string(c.ue_mode) << '\n'
            << "ue_position = " << vec3(c.ue_position) << '\n'
            << "coarse_step_m = " << vec3(c.localization.coarse_step) << '\n'
            << "mid_step_m = " << vec3(c.localization.mid_step) << '\n'
            << "mid_extent_m = " << vec3(c.localization.mid_extent) << '\n'
            << "coarse_starts = " << c.localization.coarse_starts << '\n'
            << "report_stages = " << (c.report_stages ? "true" : "false") << '\n'
            << "threads = " << c.threads << '\n';
        return out.str();
    }
}
