#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "pdfabench/pdfa.hpp"

namespace pdfabench {

/// One machine as a single JSON object on one line. Probabilities are written
/// with 17 significant digits so that reading reproduces them bit for bit.
std::string machine_to_json_line(Pdfa const& pdfa);

/// Throws ParseError (with `line`) on malformed input and ValidationError when
/// the machine breaks normalization, has a dangling state or is disconnected.
Pdfa machine_from_json_line(std::string const& text, std::string const& source = "<string>",
                            std::size_t line = 1);

void write_library(std::ostream& out, std::vector<Pdfa> const& machines);
void write_library(std::filesystem::path const& path, std::vector<Pdfa> const& machines);

/// Blank lines are skipped.
std::vector<Pdfa> read_library(std::istream& in, std::string const& source = "<stream>");
std::vector<Pdfa> read_library(std::filesystem::path const& path);

/// printf("%.17g") for doubles that must round-trip exactly.
std::string format_double(double value);

}  // namespace pdfabench
