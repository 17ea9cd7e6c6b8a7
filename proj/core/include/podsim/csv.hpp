#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace podsim {

/// Minimal CSV writer shared by every module that exports run data.
///
/// Numbers are printed with std::to_chars (shortest representation that
/// round-trips), which is locale-independent, so identical runs produce
/// byte-identical files.  Separator is ',' and the decimal mark is always
/// '.'; the first row is a header.
class CsvWriter {
public:
    /// Opens (and truncates) the target file; throws std::runtime_error if
    /// the file cannot be created.
    explicit CsvWriter(const std::filesystem::path& path);

    /// Writes the header row and fixes the column count.
    void header(const std::vector<std::string>& names);

    /// Writes one all-numeric row; must match the header width.
    void row(const std::vector<double>& values);

    /// Writes one row of preformatted cells; must match the header width.
    void raw_row(const std::vector<std::string>& cells);

    const std::filesystem::path& path() const { return path_; }

    /// Shortest round-trip decimal rendering of a double ("5" not "5.000000").
    static std::string format(double value);

private:
    void write_cells(const std::vector<std::string>& cells);

    std::filesystem::path path_;
    std::ofstream out_;
    std::size_t columns_ = 0;
};

}  // namespace podsim
