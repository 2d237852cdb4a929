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

#include "nfra/results_io.hpp"
#include "nfra/errors.hpp"

#include <nlohmann/json.hpp>

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace nfra
{
    namespace
    {
        constexpr std::string_view kHeader = "method,sweep_name,sweep_value,rmse_m,peb_m,peb_trace_m2,trials,failures";

        std::string real(double v)
        {
            if (std::isinf(v))
                return v > 0 ? "inf" : "-inf";
            if (std::isnan(v))
                return "nan";
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.9g", v);
            return buf;
        }

        // JSON has no infinity; inf sweep values become the string "inf"
        nlohmann::json json_real(double v)
        {
            if (!std::isfinite(v))
                return real(v);
            return std::strtod(real(v).c_str(), nullptr);
        }

        std::vector<std::string> split_csv(const std::string &line)
        {
            std::vector<std::string> out;
            std::stringstream ss(line);
            std::string cell;
            while (std::getline(ss, cell, ','))
                out.push_back(cell);
            if (!line.empty() && line.back() == ',')
                out.emplace_back();
            return out;
        }
    }

    ResultFormat parse_result_format(std::string_view name)
    {
        if (name == "csv")
            return ResultFormat::kCsv;
        if (name == "json")
            return ResultFormat::kJson;
        throw InvalidArgument("unknown result format '" + std::string(name) + "' (expected csv or json)");
    }

    void write_csv(std::ostream &out, std::span<const CurvePoint> points)
    {
        out << kHeader << '\n';
        for (const auto &p : points)
            out << p.method << ',' << p.sweep_name << ',' << real(p.sweep_value) << ',' << real(p.rmse_m) << ','
                << real(p.peb_m) << ',' << real(p.peb_trace_m2) << ',' << p.trials << ',' << p.failures << '\n';
    }

    void write_json(std::ostream &out, std::span<const CurvePoint> points)
    {
        nlohmann::json rows = nlohmann::json::array();
        for (const auto &p : points)
            rows.push_back({{"method", p.method},
                            {"sweep_name", p.sweep_name},
                            {"sweep_value", json_real(p.sweep_value)},
                            {"rmse_m", json_real(p.rmse_m)},
                            {"peb_m", json_real(p.peb_m)},
                            {"peb_trace_m2", json_real(p.peb_trace_m2)},
                            {"trials", p.trials},
                            {"failures", p.failures}});
        out << nlohmann::json{{"points", rows}}.dump(2) << '\n';
    }

    std::string format_results(std::span<const CurvePoint> points, ResultFormat format)
    {
        std::ostringstream out;
        if (format == ResultFormat::kCsv)
            write_csv(out, points);
        else
            write_json(out, points);
        return out.str();
    }

    void emit_results(std::span<const CurvePoint> points, const std::filesystem::path &path, ResultFormat format)
    {
        const std::string text = format_results(points, format);
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out)
            throw IoError("cannot open '" + path.string() + "' for writing: " + std::strerror(errno));
        out << text;
        out.flush();
        if (!out)
            throw IoError("error writing '" + path.string() + "'");
    }

    std::vector<CurvePoint> read_csv(std::istream &in)
    {
        std::string line;
        if (!std::getline(in, line) || line != kHeader)
            throw InvalidArgument("read_csv: missing or unexpected header");

        std::vector<CurvePoint> points;
        while (std::getline(in, line))
        {
            if (line.empty())
                continue;
            const auto cells = split_csv(line);
            if (cells.size() != 8)
                throw InvalidArgument("read_csv: expected 8 columns in '" + line + "'");
            CurvePoint p;
            p.method = cells[0];
            p.sweep_name = cells[1];
            p.sweep_value = std::strtod(cells[2].c_str(), nullptr);
            p.rmse_m = std::strtod(cells[3].c_str(), nullptr);
            p.peb_m = std::strtod(cells[4].c_str(), nullptr);
            p.peb_trace_m2 = std::strtod(cells[5].c_str(), nullptr);
            p.trials = std::stoi(cells[6]);
            p.failures = std::stoi(cells[7]);
            points.push_back(std::move(p));
        }
        return points;
    }
}
