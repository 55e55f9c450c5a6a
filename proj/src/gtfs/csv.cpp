#include "atomic/gtfs/csv.hpp"

namespace atomic::gtfs {

std::vector<CsvRow> parse_csv(std::string_view text) {
  if (text.starts_with("\xEF\xBB\xBF")) {
    text.remove_prefix(3);
  }

  std::vector<CsvRow> rows;
  CsvRow row;
  std::string field;
  auto line = 1;
  auto end_record = [&] {
    row.push_back(std::move(field));
    field.clear();
    if (!(row.size() == 1 && row[0].empty())) {
      rows.push_back(std::move(row));
    }
    row.clear();
  };

  auto i = std::size_t{0};
  while (i < text.size()) {
    auto const c = text[i];
    if (c == '"' && field.empty()) {
      // Quoted field: runs to the next lone quote.
      auto const start_line = line;
      ++i;
      while (true) {
        if (i >= text.size()) {
          throw CsvError{"unterminated quote starting on line " + std::to_string(start_line)};
        }
        if (text[i] == '"') {
          if (i + 1 < text.size() && text[i + 1] == '"') {
            field.push_back('"');
            i += 2;
            continue;
          }
          ++i;
          break;
        }
        if (text[i] == '\n') {
          ++line;
        }
        field.push_back(text[i++]);
      }
      if (i < text.size() && text[i] != ',' && text[i] != '\n' && text[i] != '\r') {
        throw CsvError{"unexpected character after closing quote on line " + std::to_string(line)};
      }
      // An empty quoted field must still count as a field.
      if (field.empty() && (i >= text.size() || text[i] != ',')) {
        row.push_back({});
        if (i < text.size() && text[i] == '\r') {
          ++i;
        }
        if (i < text.size() && text[i] == '\n') {
          ++i;
          ++line;
        }
        rows.push_back(std::move(row));
        row.clear();
        continue;
      }
      continue;
    }
    if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      ++i;
    } else if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
      end_record();
      i += 2;
      ++line;
    } else if (c == '\n') {
      end_record();
      ++i;
      ++line;
    } else {
      field.push_back(c);
      ++i;
    }
  }
  if (!field.empty() || !row.empty()) {
    end_record();
  }
  return rows;
}

namespace {

void append_field(std::string& out, std::string const& f) {
  if (f.find_first_of(",\"\r\n") == std::string::npos) {
    out += f;
    return;
  }
  out.push_back('"');
  for (auto const c : f) {
    if (c == '"') {
      out.push_back('"');
    }
    out.push_back(c);
  }
  out.push_back('"');
}

}  // namespace

std::string write_csv(std::vector<CsvRow> const& rows) {
  std::string out;
  for (auto const& row : rows) {
    if (row.size() == 1 && row[0].empty()) {
      out += "\"\"\n";  // a bare newline would read back as a blank line
      continue;
    }
    for (auto i = 0U; i < row.size(); ++i) {
      if (i != 0) {
        out.push_back(',');
      }
      append_field(out, row[i]);
    }
    out.push_back('\n');
  }
  return out;
}

}  // namespace atomic::gtfs
