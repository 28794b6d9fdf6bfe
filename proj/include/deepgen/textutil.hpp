#pragma once

#include <istream>
#include <string>
#include <vector>

namespace deepgen {

// Shortest decimal form that parses back to exactly the same double.
std::string format_full(double x);

// Full-string strict parse of decimal notation; rejects empty input, trailing
// junk, hexfloat, infinities, and NaN.
bool parse_double_strict(const std::string& text, double* out);

// Splits on a single delimiter, preserving empty fields.
std::vector<std::string> split(const std::string& line, char delim);

// Reads one line, treating \r\n and \n alike. Returns false at EOF.
bool next_line(std::istream& in, std::string* line);

// Removes one pair of surrounding double quotes, if present.
std::string strip_quotes(const std::string& cell);

std::string trim(const std::string& s);

}  // namespace deepgen
