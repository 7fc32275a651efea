#pragma once

#include <string>

namespace eesim {

// Formats a double with 17 significant digits ("%.17g"), enough for an exact
// text -> double round trip. NaN renders as "nan", the CSV undefined marker.
std::string format_g17(double v);

// Writes a file atomically: content goes to "<path>.tmp", then a rename.
void write_file_atomic(const std::string& path, const std::string& content);

// Reads a whole file; throws DataError when the file cannot be opened.
std::string read_file(const std::string& path);

}  // namespace eesim
