#include "text_util.hpp"

namespace cohortsurv::detail {

std::vector<std::string> split_csv_record(std::string_view text) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          current += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else if (c != '\r') {
      current += c;
    }
  }
  fields.push_back(std::move(current));
  return fields;
}

std::vector<std::pair<int, std::string>> csv_records(std::string_view text) {
  if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
  std::vector<std::pair<int, std::string>> records;
  std::string current;
  bool quoted = false;
  int line = 1;
  int start_line = 1;
  for (char c : text) {
    if (c == '"') quoted = !quoted;
    if (c == '\n' && !quoted) {
      records.emplace_back(start_line, std::move(current));
      current.clear();
      start_line = ++line;
      continue;
    }
    if (c == '\n') ++line;
    current += c;
  }
  if (!current.empty()) records.emplace_back(start_line, std::move(current));
  return records;
}

}  // namespace cohortsurv::detail
