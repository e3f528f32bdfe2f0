// Minimal CSV reading/writing for numeric tables and posterior matrices.
#pragma once

#include <string>
#include <vector>

#include "fusekit/common.hpp"

namespace fusekit {

// Splits one CSV record; handles RFC-4180 quoting for text cells.
std::vector<std::string> split_csv_line(const std::string& line);
std::string csv_escape(const std::string& cell);

// Numeric table without header; every row must have the same width.
Matrix read_csv_matrix(const std::string& path);
void write_csv_matrix(const std::string& path, const Matrix& m);

// Posterior matrix: header row of class names, then probability rows.
struct PosteriorFile {
    Matrix values;
    std::vector<std::string> class_names;
};
PosteriorFile read_posterior_csv(const std::string& path);
void write_posterior_csv(const std::string& path, const Matrix& m,
                         const std::vector<std::string>& class_names);

std::vector<std::string> read_lines(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace fusekit
