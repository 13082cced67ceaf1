#pragma once

#include <optional>
#include <stdexcept>
#include <string>

#include "branchcal/calibration.hpp"
#include "branchcal/currents.hpp"
#include "branchcal/solver.hpp"

namespace branchcal {

/// Malformed or inconsistent input file.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NetworkFile {
  PolyhedralCurrent current;
  std::optional<double> alpha;
};

struct CalibrationFile {
  ConstantForm form;
  std::optional<MultiplicityFamily> family;
};

/// { "dim", "coeff_dim", "alpha"?, "points": [[..]], "segments": [{"tail", "head", "theta"}] }
NetworkFile parse_network(const std::string& text);
std::string format_network(const PolyhedralCurrent& current, std::optional<double> alpha = {});

/// { "dim", "alpha", "sources": [[..]], "sink": [..] }
Instance parse_instance(const std::string& text);
std::string format_instance(const Instance& instance);

/// { "coeff_dim", "dim", "rows": [[..]], "family": [[ints]]? }
CalibrationFile parse_calibration(const std::string& text);

std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& text);

/// 64-bit FNV-1a, printed as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace branchcal
