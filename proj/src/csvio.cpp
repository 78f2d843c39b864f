#include "spikelds/csvio.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace spikelds::csv {

std::string escape(const std::string& field)
{
    if (field.find_first_of(",\"\n\r") == std::string::npos)
        return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"')
            out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string format_double(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void write_row(std::ostream& os, const std::vector<std::string>& fields)
{
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i)
            os << ',';
        os << escape(fields[i]);
    }
    os << '\n';
}

void write_matrix(std::ostream& os, const std::vector<std::string>& header,
                  const Eigen::MatrixXd& m)
{
    if (static_cast<Eigen::Index>(header.size()) != m.rows())
        throw std::invalid_argument("header width must match matrix rows");
    write_row(os, header);
    std::vector<std::string> row(header.size());
    for (Eigen::Index t = 0; t < m.cols(); ++t) {
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            row[static_cast<std::size_t>(i)] = format_double(m(i, t));
        write_row(os, row);
    }
}

std::vector<std::vector<std::string>> read(std::istream& is)
{
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false, in_field = false;

    auto end_field = [&] {
        row.push_back(std::move(field));
        field.clear();
        in_field = false;
    };
    auto end_row = [&] {
        if (in_field || !row.empty()) {
            end_field();
            rows.push_back(std::move(row));
            row.clear();
        }
    };

    char c;
    while (is.get(c)) {
        if (quoted) {
            if (c == '"') {
                if (is.peek() == '"') {
                    is.get(c);
                    field += '"';
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        switch (c) {
        case '"':
            if (!field.empty())
                throw std::runtime_error("quote inside unquoted field");
            quoted = true;
            in_field = true;
            break;
        case ',':
            end_field();
            in_field = true; // next field begins even if empty
            break;
        case '\r':
            break;
        case '\n':
            end_row();
            break;
        default:
            field += c;
            in_field = true;
            break;
        }
    }
    if (quoted)
        throw std::runtime_error("unterminated quoted field");
    end_row();
    return rows;
}

} // namespace spikelds::csv
