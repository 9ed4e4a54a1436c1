#pragma once

#include <string>

namespace stackelberg {

// Shortest exact decimal form would suffice for round-trips, but the file
// contract pins 17 significant digits.
std::string fmt17(double v);

// Writes content to a temporary file in the target directory, then renames it
// over `path`. No partial artifact survives a failure.
void atomic_write(const std::string& path, const std::string& content);

}  // namespace stackelberg
