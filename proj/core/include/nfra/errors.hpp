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

#ifndef NFRA_ERRORS_HPP
#define NFRA_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace nfra
{
    // Bad sizes, out-of-range parameters, inconsistent dimensions
    class InvalidArgument : public std::invalid_argument
    {
    public:
        using std::invalid_argument::invalid_argument;
    };

    // A position coincides with an array element or the array center
    class DegenerateGeometry : public std::domain_error
    {
    public:
        using std::domain_error::domain_error;
    };

    // The Fisher information is singular or too ill-conditioned to invert.
    // Carries the smallest eigenvalue of the offending matrix.
    class Unidentifiable : public std::runtime_error
    {
    public:
        Unidentifiable(const std::string &what, double smallest_eigenvalue)
            : std::runtime_error(what), smallest_eigenvalue_(smallest_eigenvalue) {}

        double smallest_eigenvalue() const noexcept { return smallest_eigenvalue_; }

    private:
        double smallest_eigenvalue_;
    };

    // Malformed or inconsistent experiment configuration
    class ConfigError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    // File read/write failures (message includes the path)
    class IoError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };
}

#endif
