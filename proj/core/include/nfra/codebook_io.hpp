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

#ifndef NFRA_CODEBOOK_IO_HPP
#define NFRA_CODEBOOK_IO_HPP

#include "nfra/channel.hpp"
#include "nfra/localizer.hpp"
#include "nfra/precoder.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace nfra
{
    // JSON container for a designed codebook. Complex numbers are [re, im].
    //
    //   {
    //     "format": "nfra-codebook", "version": 1,
    //     "wavelength_m": 0.01, "basis_size": 9,
    //     "array": {"rows": 16, "cols": 16, "spacing_m": 0.005, "center": [x, y, z]},
    //     "candidate_points": [[x, y, z], ...],
    //     "codewords": [{"source_point": [x, y, z], "derivative_order": 0..3,
    //                    "weight": rho, "w": [[re, im], ...]}, ...],
    //     "precoders": [{"digital": [[re, im], ...],            (optional, one per codeword)
    //                    "em": [[[re, im], ...], ...]}, ...],    M blocks of Q values
    //     "dictionary": {"points": [[x, y, z], ...],            (optional coarse cache)
    //                    "columns": [[[re, im], ...], ...], "dropped": 0}
    //   }
    struct CodebookFile
    {
        ArrayModel model;
        Codebook codebook;
        std::optional<DictionaryMatrix> dictionary;
    };

    struct CodebookExportOptions
    {
        bool include_precoders = true;
        const DictionaryMatrix *dictionary = nullptr;
    };

    std::string codebook_to_json(const ArrayModel &model, const Codebook &codebook,
                                 const CodebookExportOptions &options = {});
    CodebookFile codebook_from_json(std::string_view text);

    void export_codebook(const std::filesystem::path &path, const ArrayModel &model, const Codebook &codebook,
                         const CodebookExportOptions &options = {});
    CodebookFile import_codebook(const std::filesystem::path &path);
}

#endif
