#include "causaladj/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace causaladj {

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw Error("format_double failed", 1);
    return std::string(buf, ptr);
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw MissingFile(path.string());
    CsvTable table;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() && in.peek() == EOF) break;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        if (first) {
            table.header = std::move(cells);
            first = false;
        } else {
            table.rows.push_back(std::move(cells));
        }
    }
    return table;
}

double parse_cell(const std::string& cell, int row, int col) {
    double v = 0.0;
    auto begin = cell.data();
    auto end = cell.data() + cell.size();
    while (begin != end && (*begin == ' ' || *begin == '\t')) ++begin;
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc{} || ptr != end)
        throw NonNumericCell("row " + std::to_string(row) + ", col " + std::to_string(col) +
                             ": '" + cell + "'");
    return v;
}

LabeledMatrix read_labeled_matrix(const std::filesystem::path& path) {
    CsvTable table = read_csv(path);
    if (table.header.size() < 2) throw RaggedRow("matrix header too short in " + path.string());
    LabeledMatrix m;
    m.col_ids.assign(table.header.begin() + 1, table.header.end());
    const int n_cols = static_cast<int>(m.col_ids.size());
    m.values.resize(static_cast<int>(table.rows.size()), n_cols);
    for (int r = 0; r < static_cast<int>(table.rows.size()); ++r) {
        const auto& row = table.rows[r];
        if (static_cast<int>(row.size()) != n_cols + 1)
            throw RaggedRow("row " + std::to_string(r + 1) + " in " + path.string());
        m.row_ids.push_back(row[0]);
        for (int c = 0; c < n_cols; ++c) m.values(r, c) = parse_cell(row[c + 1], r + 1, c + 1);
    }
    return m;
}

void write_labeled_matrix(const std::filesystem::path& path,
                          const std::vector<std::string>& row_ids,
                          const std::vector<std::string>& col_ids,
                          const Eigen::MatrixXd& values) {
    std::ostringstream out;
    for (const auto& id : col_ids) out << ',' << id;
    out << '\n';
    for (int r = 0; r < values.rows(); ++r) {
        out << row_ids[r];
        for (int c = 0; c < values.cols(); ++c) out << ',' << format_double(values(r, c));
        out << '\n';
    }
    write_text_file(path, out.str());
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open for writing: " + path.string(), 1);
    out << content;
}

}  // namespace causaladj
