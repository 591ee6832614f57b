#include "seqbias/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "seqbias/error.hpp"

namespace seqbias::io {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(trim(std::string_view(line).substr(start, comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

std::optional<double> to_double(const std::string& s) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (first != last && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last || first == last || !std::isfinite(v)) return std::nullopt;
    return v;
}

std::optional<long> to_long(const std::string& s) {
    long v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
    return v;
}

// Reads logical lines, skipping blank lines and '#' comments; strips CR.
class LineReader {
public:
    explicit LineReader(std::istream& in) : in_(in) {}
    bool next(std::string& line) {
        while (std::getline(in_, line)) {
            ++number_;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            const std::string t = trim(line);
            if (t.empty() || t.front() == '#') continue;
            return true;
        }
        return false;
    }
    std::size_t number() const { return number_; }

private:
    std::istream& in_;
    std::size_t number_ = 0;
};

using ColumnMap = std::map<std::string, std::size_t>;

ColumnMap read_header(LineReader& reader, const std::vector<std::string>& required) {
    std::string line;
    if (!reader.next(line)) throw ParseError("missing header row", reader.number() + 1);
    ColumnMap cols;
    const auto names = split_csv(line);
    for (std::size_t i = 0; i < names.size(); ++i) cols[names[i]] = i;
    for (const auto& r : required)
        if (!cols.count(r)) throw ParseError("header lacks required column '" + r + "'", reader.number());
    return cols;
}

std::string field(const std::vector<std::string>& cells, const ColumnMap& cols, const std::string& name) {
    const auto it = cols.find(name);
    if (it == cols.end() || it->second >= cells.size()) return {};
    return cells[it->second];
}

double required_double(const std::vector<std::string>& cells, const ColumnMap& cols,
                       const std::string& name, std::size_t line) {
    const std::string s = field(cells, cols, name);
    const auto v = to_double(s);
    if (!v) throw ParseError("column '" + name + "': cannot parse '" + s + "' as a number", line);
    return *v;
}

template <typename T, typename Parse>
std::optional<T> optional_field(const std::vector<std::string>& cells, const ColumnMap& cols,
                                const std::string& name, std::size_t line, Parse parse) {
    const std::string s = field(cells, cols, name);
    if (s.empty()) return std::nullopt;
    const auto v = parse(s);
    if (!v) throw ParseError("column '" + name + "': cannot parse '" + s + "'", line);
    return *v;
}

}  // namespace

DecayDataset parse_decay_csv(std::istream& in) {
    LineReader reader(in);
    const ColumnMap cols = read_header(reader, {"position", "bias"});
    DecayDataset ds;
    std::string line;
    while (reader.next(line)) {
        const auto cells = split_csv(line);
        const std::size_t n = reader.number();
        if (cells.size() > cols.size())
            throw ParseError("row has " + std::to_string(cells.size()) + " fields, header has " +
                                 std::to_string(cols.size()),
                             n);
        DecayRow row;
        row.position = required_double(cells, cols, "position", n);
        row.bias = required_double(cells, cols, "bias", n);
        row.se = optional_field<double>(cells, cols, "se", n, to_double);
        if (const std::string g = field(cells, cols, "group"); !g.empty()) row.group = g;
        row.n_obs = optional_field<long>(cells, cols, "n_obs", n, to_long);
        if (row.position < 1.0) throw ParseError("position must be >= 1", n);
        if (row.se && *row.se <= 0.0) throw ParseError("se must be positive", n);
        ds.rows.push_back(std::move(row));
    }
    return ds;
}

DecayDataset read_decay_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    return parse_decay_csv(in);
}

std::string decay_csv(const DecayDataset& dataset) {
    std::ostringstream out;
    out << "position,bias,se,group,n_obs\n";
    for (const auto& r : dataset.rows) {
        out << format_double(r.position) << ',' << format_double(r.bias) << ','
            << (r.se ? format_double(*r.se) : "") << ',' << r.group.value_or("") << ','
            << (r.n_obs ? std::to_string(*r.n_obs) : "") << '\n';
    }
    return out.str();
}

TrialParseResult parse_trial_csv(std::istream& in) {
    LineReader reader(in);
    const ColumnMap cols = read_header(reader, {"condition", "anchor", "estimate", "true_value"});
    TrialParseResult result;
    std::string line;
    while (reader.next(line)) {
        ++result.data_rows;
        const std::size_t n = reader.number();
        try {
            const auto cells = split_csv(line);
            if (cells.size() > cols.size()) throw ParseError("too many fields", n);
            TrialRecord r;
            r.source = field(cells, cols, "source");
            r.item = field(cells, cols, "item");
            try {
                r.condition = parse_condition(field(cells, cols, "condition"));
                if (const std::string l = field(cells, cols, "load"); !l.empty()) r.load = parse_load(l);
            } catch (const InputError& e) {
                throw ParseError(e.what(), n);
            }
            r.anchor = required_double(cells, cols, "anchor", n);
            r.estimate = required_double(cells, cols, "estimate", n);
            r.true_value = required_double(cells, cols, "true_value", n);
            r.position = optional_field<long>(cells, cols, "position", n, to_long);
            r.covariate = optional_field<double>(cells, cols, "covariate", n, to_double);
            if (r.true_value == r.anchor)
                throw ParseError("true_value equals anchor (anchoring index undefined)", n);
            result.records.push_back(std::move(r));
        } catch (const ParseError& e) {
            result.diagnostics.push_back({n, e.what()});
        }
    }
    return result;
}

TrialParseResult read_trial_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    return parse_trial_csv(in);
}

std::string trial_csv(const std::vector<TrialRecord>& records) {
    std::ostringstream out;
    out << "source,item,condition,load,anchor,estimate,true_value,position,covariate\n";
    for (const auto& r : records) {
        out << r.source << ',' << r.item << ',' << condition_name(r.condition) << ','
            << (r.load ? load_name(*r.load) : "") << ',' << format_double(r.anchor) << ','
            << format_double(r.estimate) << ',' << format_double(r.true_value) << ','
            << (r.position ? std::to_string(*r.position) : "") << ','
            << (r.covariate ? format_double(*r.covariate) : "") << '\n';
    }
    return out.str();
}

std::string format_double(double v) {
    if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
    if (v == std::floor(v) && std::abs(v) < 1e15) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.0f", v);
        return std::string(buf) == "-0" ? "0" : buf;
    }
    // shortest text that parses back to the same double
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace {

void dump(const nlohmann::json& v, std::string& out, int depth) {
    const std::string pad(2 * (depth + 1), ' ');
    const std::string close_pad(2 * depth, ' ');
    switch (v.type()) {
        case nlohmann::json::value_t::object: {
            if (v.empty()) {
                out += "{}";
                return;
            }
            out += "{\n";
            bool first = true;
            for (auto it = v.begin(); it != v.end(); ++it) {
                if (!first) out += ",\n";
                first = false;
                out += pad + nlohmann::json(it.key()).dump() + ": ";
                dump(it.value(), out, depth + 1);
            }
            out += "\n" + close_pad + "}";
            return;
        }
        case nlohmann::json::value_t::array: {
            if (v.empty()) {
                out += "[]";
                return;
            }
            out += "[\n";
            for (std::size_t i = 0; i < v.size(); ++i) {
                if (i) out += ",\n";
                out += pad;
                dump(v[i], out, depth + 1);
            }
            out += "\n" + close_pad + "]";
            return;
        }
        case nlohmann::json::value_t::number_float: {
            const double d = v.get<double>();
            if (!std::isfinite(d)) {
                out += "null";
                return;
            }
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.17g", d);
            std::string s = buf;
            // Keep floats recognisable as floats on re-read.
            if (s.find_first_of(".eE") == std::string::npos) s += ".0";
            out += s;
            return;
        }
        default: out += v.dump();
    }
}

}  // namespace

std::string dump_json(const nlohmann::json& value) {
    std::string out;
    dump(value, out, 0);
    out += '\n';
    return out;
}

std::string TsvTable::str() const {
    std::string out;
    for (std::size_t i = 0; i < header.size(); ++i) out += (i ? "\t" : "") + header[i];
    out += '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "\t" : "") + row[i];
        out += '\n';
    }
    return out;
}

void write_file(const std::string& path, std::string_view contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << contents;
    if (!out) throw IoError("write failed for '" + path + "'");
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace seqbias::io
