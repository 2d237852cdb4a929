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

#include "nfra/codebook_io.hpp"
#include "nfra/errors.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>

namespace nfra
{
    namespace
    {
        using nlohmann::json;

        json vec3(const Vec3 &v) { return json::array({v.x(), v.y(), v.z()}); }

        json complex_vector(const CVector &v)
        {
            json out = json::array();
            for (Eigen::Index i = 0; i < v.size(); ++i)
                out.push_back(json::array({v[i].real(), v[i].imag()}));
            return out;
        }

        Vec3 read_vec3(const json &j)
        {
            if (!j.is_array() || j.size() != 3)
                throw InvalidArgument("codebook JSON: expected [x, y, z]");
            return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
        }

        CVector read_complex_vector(const json &j)
        {
            if (!j.is_array())
                throw InvalidArgument("codebook JSON: expected an array of [re, im] pairs");
            CVector out(static_cast<Eigen::Index>(j.size()));
            for (std::size_t i = 0; i < j.size(); ++i)
            {
                const json &c = j[i];
                if (!c.is_array() || c.size() != 2)
                    throw InvalidArgument("codebook JSON: complex values must be [re, im]");
                out[static_cast<Eigen::Index>(i)] = {c[0].get<double>(), c[1].get<double>()};
            }
            return out;
        }
    }

    std::string codebook_to_json(const ArrayModel &model, const Codebook &codebook,
                                 const CodebookExportOptions &options)
    {
        json doc;
        doc["format"] = "nfra-codebook";
        doc["version"] = 1;
        doc["wavelength_m"] = model.wavelength;
        doc["basis_size"] = codebook.basis_size();
        doc["array"] = {{"rows", model.layout.rows()},
                        {"cols", model.layout.cols()},
                        {"spacing_m", model.layout.spacing()},
                        {"center", vec3(model.layout.center())}};

        json candidates = json::array();
        for (const auto &p : codebook.candidates())
            candidates.push_back(vec3(p));
        doc["candidate_points"] = std::move(candidates);

        json codewords = json::array();
        json precoders = json::array();
        for (std::size_t t = 0; t < codebook.size(); ++t)
        {
            const Codeword &c = codebook.codewords()[t];
            codewords.push_back({{"source_point", vec3(c.source_point)},
                                 {"derivative_order", c.derivative_order},
                                 {"weight", codebook.weights()[t]},
                                 {"w", complex_vector(c.w)}});
            if (options.include_precoders)
            {
                const PrecoderFactorization f = factorize(c, codebook.basis_size(), codebook.weights()[t]);
                json em = json::array();
                for (std::size_t m = 0; m < f.em.elements(); ++m)
                    em.push_back(complex_vector(f.em.element(m)));
                precoders.push_back({{"digital", complex_vector(f.digital)}, {"em", std::move(em)}});
            }
        }
        doc["codewords"] = std::move(codewords);
        if (options.include_precoders)
            doc["precoders"] = std::move(precoders);

        if (options.dictionary)
        {
            const DictionaryMatrix &d = *options.dictionary;
            json points = json::array();
            json columns = json::array();
            for (std::size_t g = 0; g < d.points.size(); ++g)
            {
                points.push_back(vec3(d.points[g]));
                columns.push_back(complex_vector(d.columns.col(static_cast<Eigen::Index>(g))));
            }
            doc["dictionary"] = {{"points", std::move(points)}, {"columns", std::move(columns)}, {"dropped", d.dropped}};
        }
        return doc.dump();
    }

    CodebookFile codebook_from_json(std::string_view text)
    {
        json doc;
        try
        {
            doc = json::parse(text);
        }
        catch (const json::parse_error &e)
        {
            throw InvalidArgument(std::string("codebook JSON: ") + e.what());
        }

        try
        {
            if (doc.value("format", std::string()) != "nfra-codebook")
                throw InvalidArgument("codebook JSON: not an nfra codebook");
            if (doc.at("version").get<int>() != 1)
                throw InvalidArgument("codebook JSON: unsupported version");

            const int q = doc.at("basis_size").get<int>();
            const json &array = doc.at("array");
            ArrayModel model{ElementLayout::upa(read_vec3(array.at("center")), array.at("rows").get<int>(),
                                                array.at("cols").get<int>(), array.at("spacing_m").get<double>()),
                             BasisSet(q), doc.at("wavelength_m").get<double>()};

            std::vector<Vec3> candidates;
            for (const auto &p : doc.at("candidate_points"))
                candidates.push_back(read_vec3(p));

            std::vector<Codeword> codewords;
            std::vector<double> weights;
            for (const auto &c : doc.at("codewords"))
            {
                codewords.push_back(Codeword{read_complex_vector(c.at("w")), read_vec3(c.at("source_point")),
                                             c.at("derivative_order").get<int>()});
                weights.push_back(c.at("weight").get<double>());
            }
            Codebook codebook(q, std::move(candidates), std::move(codewords), std::move(weights));
            if (codebook.codewords().front().w.size() != model.dimension())
                throw InvalidArgument("codebook JSON: codeword length does not match the array");

            std::optional<DictionaryMatrix> dictionary;
            if (doc.contains("dictionary"))
            {
                const json &d = doc["dictionary"];
                DictionaryMatrix dict;
                const json &cols = d.at("columns");
                dict.columns.resize(static_cast<Eigen::Index>(codebook.size()), static_cast<Eigen::Index>(cols.size()));
                for (std::size_t g = 0; g < cols.size(); ++g)
                {
                    const CVector col = read_complex_vector(cols[g]);
                    if (col.size() != dict.columns.rows())
                        throw InvalidArgument("codebook JSON: dictionary column length mismatch");
                    dict.columns.col(static_cast<Eigen::Index>(g)) = col;
                }
                for (const auto &p : d.at("points"))
                    dict.points.push_back(read_vec3(p));
                if (dict.points.size() != cols.size())
                    throw InvalidArgument("codebook JSON: dictionary points and columns differ in count");
                dict.dropped = d.value("dropped", std::size_t{0});
                dictionary = std::move(dict);
            }
            return {std::move(model), std::move(codebook), std::move(dictionary)};
        }
        catch (const json::exception &e)
        {
            throw InvalidArgument(std::string("codebook JSON: ") + e.what());
        }
    }

    void export_codebook(const std::filesystem::path &path, const ArrayModel &model, const Codebook &codebook,
                         const CodebookExportOptions &options)
    {
        const std::string text = codebook_to_json(model, codebook, options);
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out)
            throw IoError("cannot open '" + path.string() + "' for writing");
        out << text << '\n';
        out.flush();
        if (!out)
            throw IoError("error writing '" + path.string() + "'");
    }

    CodebookFile import_codebook(const std::filesystem::path &path)
    {
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw IoError("cannot open codebook '" + path.string() + "'");
        std::ostringstream buffer;
        buffer << in.rdbuf();
        return codebook_from_json(buffer.str());
    }
}
