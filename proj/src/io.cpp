#include "branchcal/io.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace branchcal {

namespace {

using nlohmann::json;

json parse(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
}

const json& field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ParseError(std::string("missing field \"") + key + "\"");
  return j.at(key);
}

double number(const json& j, const char* what) {
  if (!j.is_number()) throw ParseError(std::string(what) + ": expected a number");
  return j.get<double>();
}

Eigen::Index count(const json& j, const char* what) {
  if (!j.is_number_integer() || j.get<long long>() < 0) {
    throw ParseError(std::string(what) + ": expected a non-negative integer");
  }
  return static_cast<Eigen::Index>(j.get<long long>());
}

Eigen::VectorXd vector(const json& j, Eigen::Index size, const char* what) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != size) {
    throw ParseError(std::string(what) + ": expected an array of length " + std::to_string(size));
  }
  Eigen::VectorXd v(size);
  for (Eigen::Index i = 0; i < size; ++i) v[i] = number(j[i], what);
  return v;
}

Multiplicity int_vector(const json& j, Eigen::Index size, const char* what) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != size) {
    throw ParseError(std::string(what) + ": expected an integer array of length " + std::to_string(size));
  }
  Multiplicity v(size);
  for (Eigen::Index i = 0; i < size; ++i) {
    if (!j[i].is_number_integer()) throw ParseError(std::string(what) + ": expected integers");
    v[i] = j[i].get<int>();
  }
  return v;
}

Eigen::MatrixXd columns(const json& j, Eigen::Index rows, const char* what) {
  if (!j.is_array()) throw ParseError(std::string(what) + ": expected an array");
  Eigen::MatrixXd m(rows, static_cast<Eigen::Index>(j.size()));
  for (std::size_t c = 0; c < j.size(); ++c) m.col(static_cast<Eigen::Index>(c)) = vector(j[c], rows, what);
  return m;
}

template <typename Fn>
auto rethrow_as_parse_error(Fn&& fn) {
  try {
    return fn();
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what());
  }
}

}  // namespace

NetworkFile parse_network(const std::string& text) {
  const json j = parse(text);
  const Eigen::Index d = count(field(j, "dim"), "dim");
  const Eigen::Index n = count(field(j, "coeff_dim"), "coeff_dim");
  const Eigen::MatrixXd points = columns(field(j, "points"), d, "points");
  std::vector<Segment> segments;
  const json& segs = field(j, "segments");
  if (!segs.is_array()) throw ParseError("segments: expected an array");
  for (const auto& s : segs) {
    const Eigen::Index tail = count(field(s, "tail"), "tail");
    const Eigen::Index head = count(field(s, "head"), "head");
    if (tail >= points.cols() || head >= points.cols()) throw ParseError("segment refers to a missing point");
    segments.push_back({tail, head, int_vector(field(s, "theta"), n, "theta")});
  }
  std::optional<double> alpha;
  if (j.contains("alpha") && !j.at("alpha").is_null()) {
    alpha = number(j.at("alpha"), "alpha");
    if (!(*alpha >= 0.0 && *alpha <= 1.0)) throw ParseError("network: alpha must lie in [0, 1]");
  }
  return rethrow_as_parse_error([&] {
    return NetworkFile{PolyhedralCurrent(points, n, std::move(segments)), alpha};
  });
}

std::string format_network(const PolyhedralCurrent& current, std::optional<double> alpha) {
  json j;
  j["dim"] = current.dim();
  j["coeff_dim"] = current.coeff_dim();
  if (alpha) j["alpha"] = *alpha;
  j["points"] = json::array();
  for (Eigen::Index c = 0; c < current.node_count(); ++c) {
    const Eigen::VectorXd p = current.point(c);
    j["points"].push_back(std::vector<double>(p.data(), p.data() + p.size()));
  }
  j["segments"] = json::array();
  for (const auto& s : current.segments()) {
    j["segments"].push_back({{"tail", s.tail},
                             {"head", s.head},
                             {"theta", std::vector<int>(s.theta.data(), s.theta.data() + s.theta.size())}});
  }
  return j.dump(2) + "\n";
}

Instance parse_instance(const std::string& text) {
  const json j = parse(text);
  Instance inst;
  const Eigen::Index d = count(field(j, "dim"), "dim");
  inst.alpha = number(field(j, "alpha"), "alpha");
  inst.sources = columns(field(j, "sources"), d, "sources");
  inst.sink = vector(field(j, "sink"), d, "sink");
  rethrow_as_parse_error([&] {
    inst.validate();
    return 0;
  });
  return inst;
}

std::string format_instance(const Instance& instance) {
  json j;
  j["dim"] = instance.dim();
  j["alpha"] = instance.alpha;
  j["sources"] = json::array();
  for (Eigen::Index c = 0; c < instance.sources.cols(); ++c) {
    const Eigen::VectorXd p = instance.sources.col(c);
    j["sources"].push_back(std::vector<double>(p.data(), p.data() + p.size()));
  }
  j["sink"] = std::vector<double>(instance.sink.data(), instance.sink.data() + instance.sink.size());
  return j.dump(2) + "\n";
}

CalibrationFile parse_calibration(const std::string& text) {
  const json j = parse(text);
  const Eigen::Index n = count(field(j, "coeff_dim"), "coeff_dim");
  const Eigen::Index d = count(field(j, "dim"), "dim");
  const Eigen::MatrixXd cols = columns(field(j, "rows"), d, "rows");
  if (cols.cols() != n) throw ParseError("rows: expected coeff_dim rows");
  std::optional<MultiplicityFamily> family;
  if (j.contains("family")) {
    std::vector<Multiplicity> members;
    const json& fam = j.at("family");
    if (!fam.is_array()) throw ParseError("family: expected an array");
    for (const auto& h : fam) members.push_back(int_vector(h, n, "family"));
    family = rethrow_as_parse_error([&] { return MultiplicityFamily(std::move(members)); });
  }
  return rethrow_as_parse_error(
      [&] { return CalibrationFile{ConstantForm(cols.transpose()), std::move(family)}; });
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path);
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char out[17];
  std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
  return out;
}

}  // namespace branchcal
