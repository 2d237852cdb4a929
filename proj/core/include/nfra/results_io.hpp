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

#ifndef NFRA_RESULTS_IO_HPP
#define NFRA_RESULTS_IO_HPP

#include "nfra/simulation.hpp"

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>

namespace nfra
{
    enum class ResultFormat
    {
        kCsv,
        kJson,
    };

    ResultFormat parse_result_format(std::string_view name);

    // Header: method,sweep_name,sweep_value,rmse_m,peb_m,peb_trace_m2,trials,failures
    // Reals are printed with 9 significant digits ("%.9g"); JSON carries the
    // same rounded values so both encodings agree.
    void write_csv(std::ostream &out, std::span<const CurvePoint> points);
    void write_json(std::ostream &out, std::span<const CurvePoint> points);
    std::string format_results(std::span<const CurvePoint> points, ResultFormat format);

    // Writes to `path`; IoError carries the path on failure
    void emit_results(std::span<const CurvePoint> points, const std::filesystem::path &path, ResultFormat format);

    // Reads a CSV produced by write_csv
    std::vector<CurvePoint> read_csv(std::istream &in);
}

#endif
