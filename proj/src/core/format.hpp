#pragma once
#include <stdexcept>
#include <string>
#include <vector>

namespace radshoot {

// File-system failures (open/write/rename), kept apart from numeric and
// validation errors so callers can map them to their own exit paths.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Fixed 17-significant-digit rendering so output files are byte-stable and
// round-trip exactly through double.
std::string fmt17(double x);

// Minimal JSON emission helpers. Numbers go through fmt17; strings are escaped.
std::string json_escape(const std::string& s);

class JsonWriter {
public:
    JsonWriter& begin_object();
    JsonWriter& end_object();
    JsonWriter& begin_array();
    JsonWriter& end_array();
    JsonWriter& key(const std::string& k);
    JsonWriter& value(double v);
    JsonWriter& value(int v);
    JsonWriter& value(long long v);
    JsonWriter& value(const std::string& v);
    JsonWriter& value(const char* v);
    JsonWriter& value(bool v);
    JsonWriter& null();
    JsonWriter& raw(const std::string& text);
    std::string str() const { return out_; }

private:
    void comma();
    std::string out_;
    std::vector<bool> need_comma_;
    bool pending_key_ = false;
};

// Writes content to path atomically (temp file + rename); throws IoError on failure.
void atomic_write(const std::string& path, const std::string& content);

// Flat key-value config text: `key = value` lines, '#' comments, blank lines ignored.
std::vector<std::pair<std::string, std::string>> parse_key_values(const std::string& text);
std::string read_file(const std::string& path);

std::string trim(const std::string& s);
std::vector<std::string> split_ws(const std::string& s);

// Strict numeric parse; accepts "a/b" rational shorthand. Throws
// std::invalid_argument on trailing garbage or empty input.
double parse_number(const std::string& token);

}  // namespace radshoot
