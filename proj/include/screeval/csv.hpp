#pragma once

// Minimal RFC-4180 delimited text: comma separated, double-quote quoting with
// "" escapes, CRLF or LF record terminators, embedded newlines inside quotes.

#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "screeval/common.hpp"

namespace screeval::csv {

struct Record {
  size_t line = 0;     // 1-based line where the record starts
  std::string raw;     // source text without the terminator
  std::vector<std::string> fields;
  bool malformed = false;  // unterminated quote or stray quote
};

class Reader {
 public:
  explicit Reader(std::string text) : text_(std::move(text)) {}

  static Reader from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::FileNotFound, "cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return Reader(buf.str());
  }

  // Returns false at end of input. Blank lines are skipped.
  bool next(Record& record) {
    while (pos_ < text_.size()) {
      record = Record{};
      record.line = line_;
      const size_t start = pos_;
      std::string field;
      bool in_quotes = false;
      bool field_was_quoted = false;
      bool done = false;
      while (pos_ < text_.size() && !done) {
        const char c = text_[pos_];
        if (in_quotes) {
          if (c == '"') {
            if (pos_ + 1 < text_.size() && text_[pos_ + 1] == '"') {
              field += '"';
              pos_ += 2;
              continue;
            }
            in_quotes = false;
            ++pos_;
            continue;
          }
          if (c == '\n') ++line_;
          field += c;
          ++pos_;
          continue;
        }
        switch (c) {
          case '"':
            if (field.empty() && !field_was_quoted) {
              in_quotes = true;
              field_was_quoted = true;
            } else {
              record.malformed = true;
              field += c;
            }
            ++pos_;
            break;
          case ',':
            record.fields.push_back(std::move(field));
            field.clear();
            field_was_quoted = false;
            ++pos_;
            break;
          case '\r':
            ++pos_;
            if (pos_ < text_.size() && text_[pos_] == '\n') break;
            done = true;
            ++line_;
            break;
          case '\n':
            ++pos_;
            ++line_;
            done = true;
            break;
          default:
            if (field_was_quoted) record.malformed = true;
            field += c;
            ++pos_;
        }
      }
      if (in_quotes) record.malformed = true;
      size_t end = pos_;
      while (end > start && (text_[end - 1] == '\n' || text_[end - 1] == '\r')) --end;
      record.raw = text_.substr(start, end - start);
      if (record.raw.empty() && record.fields.empty()) continue;
      record.fields.push_back(std::move(field));
      return true;
    }
    return false;
  }

 private:
  std::string text_;
  size_t pos_ = 0;
  size_t line_ = 1;
};

inline bool needs_quoting(std::string_view value) {
  return value.find_first_of(",\"\r\n") != std::string_view::npos;
}

inline std::string escape(std::string_view value) {
  if (!needs_quoting(value)) return std::string(value);
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline void write_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << escape(fields[i]);
  }
  out << '\n';
}

}  // namespace screeval::csv
