#include "podsim/csv.hpp"

#include <charconv>
#include <stdexcept>
#include <system_error>

namespace podsim {

CsvWriter::CsvWriter(const std::filesystem::path& path) : path_(path) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    out_.open(path, std::ios::out | std::ios::trunc);
    if (!out_) {
        throw std::runtime_error("cannot open csv file for writing: " + path.string());
    }
}

std::string CsvWriter::format(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    if (res.ec != std::errc{}) {
        throw std::runtime_error("failed to format double for csv output");
    }
    return std::string(buf, res.ptr);
}

void CsvWriter::header(const std::vector<std::string>& names) {
    if (names.empty()) {
        throw std::invalid_argument("csv header must name at least one column");
    }
    if (columns_ != 0) {
        throw std::invalid_argument("csv header already written");
    }
    columns_ = names.size();
    write_cells(names);
}

void CsvWriter::row(const std::vector<double>& values) {
    std::vector<std::string> cells;
    cells.reserve(values.size());
    for (double v : values) {
        cells.push_back(format(v));
    }
    raw_row(cells);
}

void CsvWriter::raw_row(const std::vector<std::string>& cells) {
    if (columns_ == 0) {
        throw std::invalid_argument("csv header must be written before rows");
    }
    if (cells.size() != columns_) {
        throw std::invalid_argument("csv row width does not match header of " + path_.string());
    }
    write_cells(cells);
}

void CsvWriter::write_cells(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i != 0) {
            out_ << ',';
        }
        out_ << cells[i];
    }
    out_ << '\n';
    if (!out_) {
        throw std::runtime_error("write failure on csv file: " + path_.string());
    }
}

}  // namespace podsim
