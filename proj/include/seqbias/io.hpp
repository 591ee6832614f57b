#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "seqbias/decay_fit.hpp"
#include "seqbias/predict_human.hpp"

namespace seqbias::io {

// Decay CSV: header with at least position,bias; optional se,group,n_obs.
// Throws ParseError carrying the 1-based line number.
DecayDataset parse_decay_csv(std::istream& in);
DecayDataset read_decay_csv(const std::string& path);
std::string decay_csv(const DecayDataset& dataset);

struct RowDiagnostic {
    std::size_t line = 0;
    std::string message;
};

struct TrialParseResult {
    std::vector<TrialRecord> records;
    std::vector<RowDiagnostic> diagnostics;  // one per rejected row
    std::size_t data_rows = 0;

    double invalid_fraction() const {
        return data_rows ? double(diagnostics.size()) / double(data_rows) : 0.0;
    }
};

inline constexpr double kMaxInvalidTrialFraction = 0.05;

// Trial CSV with columns source,item,condition,load,anchor,estimate,true_value,
// position,covariate (any order). condition, anchor, estimate and true_value
// are required; the others may be absent or empty. Malformed rows and rows
// with true_value == anchor are reported, not thrown. A missing header or a
// missing required column throws ParseError.
TrialParseResult parse_trial_csv(std::istream& in);
TrialParseResult read_trial_csv(const std::string& path);
std::string trial_csv(const std::vector<TrialRecord>& records);

// Integers without a fraction, otherwise the shortest round-trip form.
std::string format_double(double v);

// JSON text with every floating value printed to 17 significant digits and
// non-finite values as null. Two-space indent, LF line endings, trailing LF.
std::string dump_json(const nlohmann::json& value);

struct TsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void add_row(std::vector<std::string> row) { rows.push_back(std::move(row)); }
    std::string str() const;
};

void write_file(const std::string& path, std::string_view contents);
std::string read_file(const std::string& path);

}  // namespace seqbias::io
