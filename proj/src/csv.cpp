#include "fusekit/csv.hpp"

#include <fstream>
#include <sstream>

namespace fusekit {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cell.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cell.push_back(ch);
            }
        } else if (ch == '"' && cell.empty()) {
            quoted = true;
        } else if (ch == ',') {
            cells.push_back(std::move(cell));
            cell.clear();
        } else {
            cell.push_back(ch);
        }
    }
    cells.push_back(std::move(cell));
    return cells;
}

std::string csv_escape(const std::string& cell) {
    if (cell.find_first_of(",\"\n") == std::string::npos) return cell;
    std::string out = "\"";
    for (char ch : cell) {
        if (ch == '"') out += "\"\"";
        else out.push_back(ch);
    }
    out.push_back('"');
    return out;
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open file: " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write file: " + path);
    out << content;
    if (!out) throw io_error("write failed: " + path);
}

Matrix read_csv_matrix(const std::string& path) {
    const auto lines = read_lines(path);
    std::vector<std::vector<double>> rows;
    for (std::size_t r = 0; r < lines.size(); ++r) {
        if (lines[r].empty()) continue;
        const auto cells = split_csv_line(lines[r]);
        std::vector<double> row(cells.size());
        for (std::size_t c = 0; c < cells.size(); ++c)
            row[c] = parse_double(cells[c], path + " row " + std::to_string(r));
        if (!rows.empty() && row.size() != rows.front().size())
            throw validation_error(path + " row " + std::to_string(r) + ": inconsistent column count");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw validation_error(path + ": empty table");
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r) m.set_row(r, rows[r]);
    return m;
}

void write_csv_matrix(const std::string& path, const Matrix& m) {
    std::ostringstream out;
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < m.cols(); ++c) {
            if (c) out << ',';
            out << format_double(m.at(r, c));
        }
        out << '\n';
    }
    write_text_file(path, out.str());
}

PosteriorFile read_posterior_csv(const std::string& path) {
    const auto lines = read_lines(path);
    if (lines.empty()) throw validation_error(path + ": empty posterior file");
    PosteriorFile out;
    out.class_names = split_csv_line(lines[0]);
    std::vector<std::vector<double>> rows;
    for (std::size_t r = 1; r < lines.size(); ++r) {
        if (lines[r].empty()) continue;
        const auto cells = split_csv_line(lines[r]);
        if (cells.size() != out.class_names.size())
            throw validation_error(path + " row " + std::to_string(r) + ": column count differs from header");
        std::vector<double> row(cells.size());
        for (std::size_t c = 0; c < cells.size(); ++c)
            row[c] = parse_double(cells[c], path + " row " + std::to_string(r));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw validation_error(path + ": posterior file has no rows");
    out.values = Matrix(rows.size(), out.class_names.size());
    for (std::size_t r = 0; r < rows.size(); ++r) out.values.set_row(r, rows[r]);
    return out;
}

void write_posterior_csv(const std::string& path, const Matrix& m,
                         const std::vector<std::string>& class_names) {
    if (class_names.size() != m.cols())
        throw validation_error("posterior header width differs from matrix");
    std::ostringstream out;
    for (std::size_t c = 0; c < class_names.size(); ++c) {
        if (c) out << ',';
        out << csv_escape(class_names[c]);
    }
    out << '\n';
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < m.cols(); ++c) {
            if (c) out << ',';
            out << format_double(m.at(r, c));
        }
        out << '\n';
    }
    write_text_file(path, out.str());
}

}  // namespace fusekit
