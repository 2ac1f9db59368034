#include "segfair/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "segfair/error.hpp"

namespace segfair {

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open CSV: " + path);
    std::string content((std::istreambuf_iterator<char>(in)),
                        std::istreambuf_iterator<char>());

    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false;
    bool row_started = false;

    auto end_field = [&] {
        row.push_back(std::move(field));
        field.clear();
    };
    auto end_row = [&] {
        end_field();
        const bool comment = row.size() >= 1 && !row[0].empty() && row[0][0] == '#';
        if (!comment) rows.push_back(std::move(row));
        row.clear();
        row_started = false;
    };

    for (std::size_t i = 0; i < content.size(); ++i) {
        const char c = content[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < content.size() && content[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
        case '"': in_quotes = true; row_started = true; break;
        case ',': end_field(); row_started = true; break;
        case '\r': break;
        case '\n':
            if (row_started || !field.empty() || !row.empty()) end_row();
            break;
        default: field.push_back(c); row_started = true; break;
        }
    }
    if (in_quotes) throw FormatError(path + ": unterminated quoted field");
    if (row_started || !field.empty() || !row.empty()) end_row();
    return rows;
}

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string fmt_double(double v, int significant_digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", significant_digits, v);
    return buf;
}

std::vector<MetadataRow> read_metadata_csv(const std::string& path) {
    const auto rows = read_csv(path);
    if (rows.empty()) throw FormatError(path + ": empty metadata CSV");
    const std::vector<std::string> expected = {"case_id", "age",       "expert1",
                                               "expert2", "gold_path", "silver_path",
                                               "pred_path"};
    if (rows[0] != expected) {
        std::ostringstream os;
        os << path << ": bad metadata header, expected ";
        for (std::size_t i = 0; i < expected.size(); ++i)
            os << (i ? "," : "") << expected[i];
        throw FormatError(os.str());
    }

    std::vector<MetadataRow> out;
    out.reserve(rows.size() - 1);
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() != expected.size())
            throw FormatError(path + ": row " + std::to_string(r + 1) + " has " +
                              std::to_string(row.size()) + " fields, expected 7");
        MetadataRow m;
        m.case_id = row[0];
        if (m.case_id.empty())
            throw FormatError(path + ": row " + std::to_string(r + 1) + ": empty case_id");
        try {
            std::size_t pos = 0;
            m.age = std::stoi(row[1], &pos);
            if (pos != row[1].size()) throw std::invalid_argument("");
        } catch (const std::exception&) {
            throw FormatError(path + ": row " + std::to_string(r + 1) +
                              ": bad age '" + row[1] + "'");
        }
        if (m.age < 0)
            throw FormatError(path + ": row " + std::to_string(r + 1) + ": negative age");
        m.expert1 = row[2];
        m.expert2 = row[3];
        m.gold_path = row[4];
        m.silver_path = row[5];
        m.pred_path = row[6];
        out.push_back(std::move(m));
    }
    return out;
}

std::vector<FeatureRow> read_features_csv(const std::string& path) {
    const auto rows = read_csv(path);
    if (rows.empty()) throw FormatError(path + ": empty features CSV");
    const auto& header = rows[0];
    if (header.empty() || header[0] != "case_id")
        throw FormatError(path + ": features header must start with case_id");
    const std::size_t d = header.size() - 1;
    if (d == 0) throw FormatError(path + ": features CSV has no feature columns");

    std::vector<FeatureRow> out;
    out.reserve(rows.size() - 1);
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() != header.size())
            throw FormatError(path + ": row " + std::to_string(r + 1) +
                              " has wrong field count");
        FeatureRow f;
        f.case_id = row[0];
        f.features.reserve(d);
        for (std::size_t i = 1; i < row.size(); ++i) {
            try {
                std::size_t pos = 0;
                f.features.push_back(std::stod(row[i], &pos));
                if (pos != row[i].size()) throw std::invalid_argument("");
            } catch (const std::exception&) {
                throw FormatError(path + ": row " + std::to_string(r + 1) +
                                  ": bad numeric value '" + row[i] + "'");
            }
        }
        out.push_back(std::move(f));
    }
    return out;
}

} // namespace segfair
