#ifndef CAUSALADJ_IO_HPP
#define CAUSALADJ_IO_HPP

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

#include "causaladj/common.hpp"

namespace causaladj {

// Shortest round-trip decimal form (via std::to_chars), so CSV output is
// byte-stable and re-parses to the identical double.
std::string format_double(double v);

struct CsvTable {
    std::vector<std::string> header;          // first row
    std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(const std::filesystem::path& path);

double parse_cell(const std::string& cell, int row, int col);

// Labeled square/rectangular matrix CSV: header ",id1,...,idN", one label per row.
struct LabeledMatrix {
    std::vector<std::string> row_ids;
    std::vector<std::string> col_ids;
    Eigen::MatrixXd values;
};

LabeledMatrix read_labeled_matrix(const std::filesystem::path& path);
void write_labeled_matrix(const std::filesystem::path& path,
                          const std::vector<std::string>& row_ids,
                          const std::vector<std::string>& col_ids,
                          const Eigen::MatrixXd& values);

void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace causaladj

#endif
