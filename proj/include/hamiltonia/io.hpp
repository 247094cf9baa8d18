#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "hamiltonia/ensemble.hpp"
#include "hamiltonia/survey.hpp"
#include "hamiltonia/tori.hpp"

namespace hamiltonia {

using Json = nlohmann::json;

// ---------------------------------------------------------------------------
// Deterministic number formatting: shortest round-trip representation via
// %.17g keeps CSV/JSON output byte-identical across runs.
// ---------------------------------------------------------------------------

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// Minimal CSV writer; fields are joined with commas, rows with newlines.
class CsvWriter {
public:
    explicit CsvWriter(const std::string& path) : out_(path) {
        if (!out_) throw std::runtime_error("CsvWriter: cannot open " + path);
    }
    void header(const std::vector<std::string>& names) { row_strings(names); }
    void row_strings(const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) out_ << ',';
            out_ << fields[i];
        }
        out_ << '\n';
    }
    void row(const std::vector<double>& values) {
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (i) out_ << ',';
            out_ << format_double(values[i]);
        }
        out_ << '\n';
    }

private:
    std::ofstream out_;
};

// ---------------------------------------------------------------------------
// Coefficient-set JSON schema (documented in the README):
//   torus potential: {"kind": "torus_potential", "dim", "degree",
//                     "norm_const", "coeffs": [{"n": [...], "re", "im"}, ...]}
//   field:           {"kind": "band_limited_field", "dim", "cutoff",
//                     "truncation", "coeffs": [{"n": [...], "b"}, ...]}
// Coefficients are listed in lexicographic n order (zero mode omitted for
// the torus potential).
// ---------------------------------------------------------------------------

inline Json to_json(const TorusPotential& pot) {
    Json j;
    j["kind"] = "torus_potential";
    j["dim"] = pot.dim();
    j["degree"] = pot.degree();
    j["norm_const"] = pot.norm_const();
    Json coeffs = Json::array();
    pot.for_each_mode([&](const MultiIndex& n, Complex a) {
        Json entry;
        Json nv = Json::array();
        for (int k = 0; k < pot.dim(); ++k) nv.push_back(n[k]);
        entry["n"] = nv;
        entry["re"] = a.real();
        entry["im"] = a.imag();
        coeffs.push_back(entry);
    });
    j["coeffs"] = coeffs;
    return j;
}

inline TorusPotential torus_potential_from_json(const Json& j) {
    if (j.at("kind") != "torus_potential")
        throw std::runtime_error("torus_potential_from_json: wrong kind");
    TorusPotential pot(j.at("dim").get<int>(), j.at("degree").get<int>());
    for (const auto& entry : j.at("coeffs")) {
        MultiIndex n{};
        const auto& nv = entry.at("n");
        for (int k = 0; k < pot.dim(); ++k) n[k] = nv.at(k).get<int>();
        pot.set_coeff(n, Complex(entry.at("re").get<double>(), entry.at("im").get<double>()));
    }
    return pot;
}

inline Json to_json(const BandLimitedField& field) {
    Json j;
    j["kind"] = "band_limited_field";
    j["dim"] = field.dim();
    j["cutoff"] = field.cutoff();
    j["truncation"] = field.truncation();
    Json coeffs = Json::array();
    field.for_each_mode([&](const MultiIndex& n, double b) {
        Json entry;
        Json nv = Json::array();
        for (int k = 0; k < field.dim(); ++k) nv.push_back(n[k]);
        entry["n"] = nv;
        entry["b"] = b;
        coeffs.push_back(entry);
    });
    j["coeffs"] = coeffs;
    return j;
}

inline BandLimitedField field_from_json(const Json& j) {
    if (j.at("kind") != "band_limited_field") throw std::runtime_error("field_from_json: wrong kind");
    BandLimitedField field(j.at("dim").get<int>(), j.at("cutoff").get<double>(),
                           j.at("truncation").get<int>());
    for (const auto& entry : j.at("coeffs")) {
        MultiIndex n{};
        const auto& nv = entry.at("n");
        for (int k = 0; k < field.dim(); ++k) n[k] = nv.at(k).get<int>();
        field.set_coeff(n, entry.at("b").get<double>());
    }
    return field;
}

// ---------------------------------------------------------------------------
// key = value config files (survey and general run configuration).
// Lines starting with '#' are comments; whitespace around keys/values is
// trimmed.
// ---------------------------------------------------------------------------

using ConfigMap = std::map<std::string, std::string>;

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline ConfigMap parse_config_text(std::istream& in) {
    ConfigMap cfg;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!key.empty()) cfg[key] = value;
    }
    return cfg;
}

inline ConfigMap load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config file not found: " + path);
    // a manifest JSON doubles as a config source (its "config" object)
    if (path.size() > 5 && path.substr(path.size() - 5) == ".json") {
        Json j;
        in >> j;
        const Json& c = j.contains("config") ? j.at("config") : j;
        ConfigMap cfg;
        for (auto it = c.begin(); it != c.end(); ++it) {
            if (it.value().is_string()) cfg[it.key()] = it.value().get<std::string>();
            else cfg[it.key()] = it.value().dump();
        }
        return cfg;
    }
    return parse_config_text(in);
}

inline std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok = trim(tok);
        if (!tok.empty()) out.push_back(std::stoi(tok));
    }
    return out;
}

inline std::vector<double> parse_double_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok = trim(tok);
        if (!tok.empty()) out.push_back(std::stod(tok));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Run manifests: full resolved config + seed + outputs, written next to the
// results.  Re-running a subcommand with --config <manifest.json> reproduces
// the outputs byte-for-byte (given the same build).
// ---------------------------------------------------------------------------

struct RunManifest {
    std::string subcommand;
    ConfigMap config;
    std::uint64_t master_seed = 0;
    std::string code_version;
    std::string started_at;
    std::string finished_at;
    std::vector<std::string> outputs;

    Json to_json() const {
        Json j;
        j["subcommand"] = subcommand;
        Json c;
        for (const auto& [k, v] : config) c[k] = v;
        j["config"] = c;
        j["master_seed"] = master_seed;
        j["code_version"] = code_version;
        j["started_at"] = started_at;
        j["finished_at"] = finished_at;
        j["outputs"] = outputs;
        return j;
    }
};

inline void write_json_file(const std::string& path, const Json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Survey result serialization.
// ---------------------------------------------------------------------------

inline Json to_json(const CubeOutcome& c, int d) {
    Json j;
    Json kv = Json::array();
    for (int i = 0; i < d; ++i) kv.push_back(c.k[i]);
    j["k"] = kv;
    j["chaos_found"] = c.chaos_found;
    j["tori_found"] = c.tori_found;
    j["n_samples"] = c.n_samples;
    j["n_chaotic"] = c.n_chaotic;
    j["n_regular"] = c.n_regular;
    j["chaos_count"] = c.chaos_count;
    j["tori_volume"] = c.tori_volume;
    j["band_volume"] = c.band_volume;
    j["budget_exhausted"] = c.budget_exhausted;
    return j;
}

inline Json to_json(const TrialOutcome& t, int d) {
    Json j;
    j["L"] = t.L;
    j["trial"] = t.trial;
    j["all_cubes_both"] = t.all_cubes_both;
    j["total_chaos_count"] = t.total_chaos_count;
    j["total_tori_volume"] = t.total_tori_volume;
    Json cubes = Json::array();
    for (const auto& c : t.cubes) cubes.push_back(to_json(c, d));
    j["cubes"] = cubes;
    return j;
}

inline void write_survey_summary_csv(const std::string& path, const SurveyResult& result) {
    CsvWriter csv(path);
    csv.header({"L", "trials", "success_freq", "ci_lo", "ci_hi", "mean_chaos_count",
                "mean_tori_volume"});
    for (const auto& s : result.summary)
        csv.row({static_cast<double>(s.L), static_cast<double>(s.trials), s.success_freq, s.ci_lo,
                 s.ci_hi, s.mean_chaos_count, s.mean_tori_volume});
}

}  // namespace hamiltonia
