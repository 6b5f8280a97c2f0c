#include "frailty/csv.hpp"

#include "frailty/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <fstream>

namespace frailty {

struct CsvReader::Impl {
    std::ifstream in;
    std::string line;
};

CsvReader::CsvReader(const std::string& path) : path_(path), impl_(new Impl) {
    impl_->in.open(path);
    if (!impl_->in) {
        delete impl_;
        throw DataError(fmt::format("cannot open '{}'", path));
    }
    if (!std::getline(impl_->in, impl_->line)) {
        delete impl_;
        throw DataError(fmt::format("'{}' is empty (no header row)", path));
    }
    if (!impl_->line.empty() && impl_->line.back() == '\r') impl_->line.pop_back();
    split_csv_line(impl_->line, header_);
    line_ = 1;
}

CsvReader::~CsvReader() { delete impl_; }

int CsvReader::column(const std::string& name) const {
    const auto it = std::find(header_.begin(), header_.end(), name);
    return it == header_.end() ? -1 : static_cast<int>(it - header_.begin());
}

int CsvReader::require_column(const std::string& name) const {
    const int idx = column(name);
    if (idx < 0) throw DataError(fmt::format("'{}' lacks required column '{}'", path_, name));
    return idx;
}

bool CsvReader::next(std::vector<std::string>& fields) {
    while (std::getline(impl_->in, impl_->line)) {
        ++line_;
        if (!impl_->line.empty() && impl_->line.back() == '\r') impl_->line.pop_back();
        if (impl_->line.empty()) continue;
        split_csv_line(impl_->line, fields);
        return true;
    }
    return false;
}

void split_csv_line(const std::string& line, std::vector<std::string>& out) {
    out.clear();
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"' && field.empty()) {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(field));
            field.clear();
        } else {
            field += c;
        }
    }
    out.push_back(std::move(field));
}

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string quoted = "\"";
    for (const char c : field) {
        if (c == '"') quoted += "\"\"";
        else quoted += c;
    }
    quoted += '"';
    return quoted;
}

} // namespace frailty
