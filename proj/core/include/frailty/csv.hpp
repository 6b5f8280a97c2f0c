#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace frailty {

/// Minimal RFC-4180-ish CSV reader: comma separated, double-quote quoting,
/// quotes escaped by doubling. No embedded newlines inside quoted fields
/// (administrative extracts in practice never carry them).
class CsvReader {
public:
    /// Opens the file and reads the header row. Throws DataError on I/O
    /// failure or an empty file.
    explicit CsvReader(const std::string& path);
    ~CsvReader();
    CsvReader(const CsvReader&) = delete;
    CsvReader& operator=(const CsvReader&) = delete;

    const std::vector<std::string>& header() const { return header_; }

    /// Column index, or -1 if the header lacks it.
    int column(const std::string& name) const;

    /// Column index; throws DataError naming the file if absent.
    int require_column(const std::string& name) const;

    /// Reads the next record. Returns false at EOF. `fields` is reused.
    bool next(std::vector<std::string>& fields);

    /// 1-based line number of the record most recently returned by next().
    std::size_t line_number() const { return line_; }

    const std::string& path() const { return path_; }

private:
    std::string path_;
    std::vector<std::string> header_;
    std::size_t line_ = 0;
    struct Impl;
    Impl* impl_;
};

void split_csv_line(const std::string& line, std::vector<std::string>& out);

/// Quotes a field only when it needs it.
std::string csv_escape(const std::string& field);

} // namespace frailty
