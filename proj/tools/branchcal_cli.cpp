// branchcal: command-line front end for the irrigation/calibration toolkit.

#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <locale>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "branchcal/alpha_norm.hpp"
#include "branchcal/calibration.hpp"
#include "branchcal/currents.hpp"
#include "branchcal/dipole.hpp"
#include "branchcal/io.hpp"
#include "branchcal/oracle.hpp"
#include "branchcal/solver.hpp"

namespace bc = branchcal;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitFailed = 3;

std::string num(double v) {
  std::ostringstream out;
  out.imbue(std::locale::classic());
  out.precision(12);
  out << v;
  return out.str();
}

template <typename Derived>
std::string vec(const Eigen::MatrixBase<Derived>& v) {
  std::string s = "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    if constexpr (std::is_integral_v<typename Derived::Scalar>) {
      s += std::to_string(v[i]);
    } else {
      s += num(v[i]);
    }
  }
  return s + ")";
}

struct Report {
  std::string command;
  std::string digest_input;
  std::uint64_t seed = 0;
  json outputs = json::object();
};

struct Context {
  std::string report_path;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
};

void emit_report(const Context& ctx, const Report& r) {
  if (ctx.report_path.empty()) return;
  json j;
  j["command"] = r.command;
  j["inputs_digest"] = bc::fnv1a_hex(r.digest_input);
  j["seed"] = r.seed;
  j["outputs"] = r.outputs;
  j["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - ctx.start).count();
  bc::write_text(ctx.report_path, j.dump(2) + "\n");
}

double resolve_alpha(const std::optional<double>& flag, const std::optional<double>& file) {
  if (flag) return *flag;
  if (file) return *file;
  throw bc::ParseError("alpha not given: pass --alpha or set \"alpha\" in the network file");
}

void print_boundary(const bc::BoundaryMeasure& m) {
  std::cout << "boundary (" << m.atoms.size() << " atoms)\n";
  for (const auto& atom : m.atoms) {
    std::cout << "  " << vec(atom.point) << "  " << vec(atom.weight) << "\n";
  }
}

void print_angles(const bc::PolyhedralCurrent& current) {
  for (const auto& node : bc::branch_angles(current)) {
    std::cout << "angles at " << vec(current.point(node.node)) << ":";
    for (double a : node.angles_deg) std::cout << " " << num(a);
    std::cout << "\n";
  }
}

int cmd_mass(const Context& ctx, const std::string& path, const std::optional<double>& alpha_flag) {
  const std::string text = bc::read_text(path);
  const bc::NetworkFile net = bc::parse_network(text);
  const bc::AlphaNorm norm(resolve_alpha(alpha_flag, net.alpha), net.current.coeff_dim());
  const double m = bc::mass(net.current, norm);
  const bc::BoundaryMeasure b = bc::boundary(net.current);
  const double bm = bc::boundary_mass(b, norm);
  std::cout << "mass " << num(m) << "\n";
  print_boundary(b);
  std::cout << "boundary_mass " << num(bm) << "\n";
  Report r{"mass", text};
  r.outputs = {{"mass", m}, {"boundary_mass", bm}, {"alpha", norm.alpha()}};
  emit_report(ctx, r);
  return kExitOk;
}

int cmd_check(const Context& ctx, const std::string& net_path, const std::string& cal_path,
              const std::optional<double>& alpha_flag, double tol) {
  const std::string net_text = bc::read_text(net_path);
  const std::string cal_text = bc::read_text(cal_path);
  const bc::NetworkFile net = bc::parse_network(net_text);
  const bc::CalibrationFile cal = bc::parse_calibration(cal_text);
  const auto& current = net.current;
  if (cal.form.dim() != current.dim() || cal.form.coeff_dim() != current.coeff_dim()) {
    throw bc::ParseError("calibration dimensions do not match the network");
  }
  const bc::AlphaNorm norm(resolve_alpha(alpha_flag, net.alpha), current.coeff_dim());

  std::optional<bc::MultiplicityFamily> family = cal.family;
  if (!family) {
    std::vector<bc::Multiplicity> members;
    for (const auto& s : current.segments()) members.push_back(s.theta);
    if (members.empty()) members.push_back(bc::Multiplicity::Unit(current.coeff_dim(), 0));
    family.emplace(std::move(members));
  }
  const bc::Certificate cert = bc::certify(cal.form, current, norm, *family, tol);

  std::cout << "condition (i): <omega; tau, theta> = psi(theta)\n";
  std::cout << "  segment  tail -> head  theta  pairing  psi  result\n";
  for (const auto& c : cert.condition_i) {
    const auto& s = current.segments()[c.segment];
    std::cout << "  " << c.segment << "  " << vec(current.point(s.tail)) << " -> "
              << vec(current.point(s.head)) << "  " << vec(s.theta) << "  " << num(c.pairing) << "  "
              << num(c.psi) << "  " << (c.pass ? "ok" : "FAIL") << "\n";
  }
  std::cout << "condition (iii): |W^T h| <= psi(h)\n";
  std::cout << "  h  sup_pairing  psi  result\n";
  for (const auto& c : cert.condition_iii) {
    std::cout << "  " << vec(c.h) << "  " << num(c.sup_pairing) << "  " << num(c.psi) << "  "
              << (c.pass ? "ok" : "FAIL") << "\n";
  }
  std::cout << "comass " << num(cert.comass.value) << (cert.comass.exact ? " (exact)" : " (lower estimate)")
            << "\n";
  std::cout << "mass " << num(cert.mass) << "\n";
  std::cout << "lower_bound " << num(cert.lower_bound) << "\n";
  for (const auto& note : cert.notes) std::cout << "note: " << note << "\n";
  std::cout << "status " << bc::to_string(cert.status) << "\n";

  Report r{"check", net_text + cal_text};
  r.outputs = {{"mass", cert.mass},
               {"lower_bound", cert.lower_bound},
               {"comass", cert.comass.value},
               {"status", bc::to_string(cert.status)}};
  emit_report(ctx, r);
  return cert.status == bc::CertificateStatus::kFailed ? kExitFailed : kExitOk;
}

int cmd_solve(const Context& ctx, const std::string& path, std::uint64_t seed, bool heuristic,
              int restarts, const std::string& output) {
  const std::string text = bc::read_text(path);
  const bc::Instance inst = bc::parse_instance(text);
  bc::SolveOptions opts;
  opts.seed = seed;
  opts.exact = !heuristic;
  opts.restarts = restarts;
  const bc::Solution sol = bc::solve(inst, opts);

  std::cout << "cost " << num(sol.cost) << "\n";
  std::cout << "topology " << sol.topology.key() << "\n";
  std::cout << "iterations " << sol.iterations << "\n";
  std::cout << "converged " << (sol.converged ? "true" : "false") << "\n";
  std::cout << "mode " << (sol.exhaustive ? "exact" : "heuristic (not certified)") << "\n";
  std::cout << "topologies_evaluated " << sol.topologies_evaluated << "\n";
  std::cout << "star_cost " << num(bc::star_cost(inst)) << "\n";
  print_angles(sol.current);

  const std::string network = bc::format_network(sol.current, inst.alpha);
  if (!output.empty()) {
    bc::write_text(output, network);
    std::cout << "network written to " << output << "\n";
  }

  Report r{"solve", text, seed};
  r.outputs = {{"cost", sol.cost},
               {"topology", sol.topology.key()},
               {"iterations", sol.iterations},
               {"converged", sol.converged},
               {"exhaustive", sol.exhaustive}};
  emit_report(ctx, r);
  return kExitOk;
}

int cmd_oracle(const Context& ctx, const std::string& path, double grid_step, int restarts,
               std::uint64_t seed, int max_sweeps) {
  const std::string text = bc::read_text(path);
  const bc::Instance inst = bc::parse_instance(text);
  bc::OracleOptions opts;
  opts.grid_step = grid_step;
  opts.restarts = restarts;
  opts.seed = seed;
  opts.max_sweeps = max_sweeps;
  const bc::OracleResult res = bc::oracle_solve(inst, opts);
  std::cout << "cost " << num(res.cost) << "\n";
  std::cout << "topology " << res.topology_key << "\n";
  std::cout << "evaluations " << res.evaluations << "\n";
  print_angles(res.network);
  Report r{"oracle", text, seed};
  r.outputs = {{"cost", res.cost}, {"topology", res.topology_key}, {"evaluations", res.evaluations}};
  emit_report(ctx, r);
  return kExitOk;
}

std::vector<double> parse_list(const std::string& s, char sep) {
  std::vector<double> out;
  std::istringstream in(s);
  in.imbue(std::locale::classic());
  std::string item;
  while (std::getline(in, item, sep)) {
    std::istringstream is(item);
    is.imbue(std::locale::classic());
    double v = 0.0;
    if (!(is >> v) || !(is >> std::ws).eof()) throw bc::ParseError("cannot parse number \"" + item + "\"");
    out.push_back(v);
  }
  return out;
}

// "scale:h,scale:h,..."; h may be written as 1/N.
std::vector<bc::ScheduleEntry> parse_schedule(const std::string& s) {
  std::vector<bc::ScheduleEntry> out;
  std::istringstream in(s);
  std::string item;
  auto value = [](const std::string& t) {
    const auto slash = t.find('/');
    if (slash == std::string::npos) return parse_list(t, ';').at(0);
    return parse_list(t.substr(0, slash), ';').at(0) / parse_list(t.substr(slash + 1), ';').at(0);
  };
  while (std::getline(in, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw bc::ParseError("schedule entries look like scale:h");
    out.push_back({value(item.substr(0, colon)), value(item.substr(colon + 1))});
  }
  if (out.empty()) throw bc::ParseError("empty schedule");
  return out;
}

int cmd_dipole(const Context& ctx, int d, const std::string& a, const std::string& b, double beta,
               double gamma, const std::string& schedule, const std::string& dump) {
  if (d != 3) throw bc::ParseError("dipole: only --d 3 is supported");
  const std::vector<double> av = parse_list(a, ',');
  const std::vector<double> bv = parse_list(b, ',');
  if (static_cast<int>(av.size()) != d || static_cast<int>(bv.size()) != d) {
    throw bc::ParseError("dipole: --A and --B need " + std::to_string(d) + " coordinates");
  }
  bc::PencilRegion region{Eigen::Map<const Eigen::VectorXd>(av.data(), d),
                          Eigen::Map<const Eigen::VectorXd>(bv.data(), d), beta, gamma};
  const auto entries = parse_schedule(schedule);
  const bc::DipoleReport rep = bc::dipole_energy_check(region, entries);

  std::cout << "scale  h  normalized_energy  gap  seconds\n";
  for (const auto& row : rep.rows) {
    std::cout << num(row.scale) << "  " << num(row.h) << "  " << num(row.normalized) << "  "
              << num(row.gap) << "  " << num(row.seconds) << "\n";
  }
  std::cout << "length " << num(rep.length) << "\n";
  std::cout << "best " << num(rep.best) << "\n";
  std::cout << "bound " << (rep.bound_met ? "met" : "NOT met") << "\n";

  if (!dump.empty()) {
    const auto& last = entries.back();
    std::ofstream out(dump, std::ios::binary);
    bc::write_field(out, bc::build_dipole(region, last.scale, last.h));
    if (!out) throw std::runtime_error("cannot write " + dump);
  }

  Report r{"dipole", a + "|" + b + "|" + num(beta) + "|" + num(gamma) + "|" + schedule};
  json rows = json::array();
  for (const auto& row : rep.rows) {
    rows.push_back({{"scale", row.scale}, {"h", row.h}, {"normalized", row.normalized}});
  }
  r.outputs = {{"rows", rows}, {"best", rep.best}, {"bound_met", rep.bound_met}};
  emit_report(ctx, r);
  return rep.bound_met ? kExitOk : kExitFailed;
}

int cmd_export(const Context& ctx, const std::string& path, const std::string& format) {
  const std::string text = bc::read_text(path);
  const bc::NetworkFile net = bc::parse_network(text);
  const auto& c = net.current;
  auto coords = [&](Eigen::Index node) {
    std::string s;
    for (Eigen::Index a = 0; a < c.dim(); ++a) s += (a ? " " : "") + num(c.point(node)[a]);
    return s;
  };
  auto label = [](const bc::Multiplicity& t) {
    std::string s;
    for (Eigen::Index i = 0; i < t.size(); ++i) s += (i ? "," : "") + std::to_string(t[i]);
    return s;
  };
  for (const auto& s : c.segments()) {
    if (format == "edges") {
      std::cout << coords(s.tail) << " " << coords(s.head) << " " << label(s.theta) << "\n";
    } else {
      std::cout << "# theta " << label(s.theta) << "\n" << coords(s.tail) << "\n" << coords(s.head) << "\n\n";
    }
  }
  Report r{"export", text};
  r.outputs = {{"polylines", c.segments().size()}, {"format", format}};
  emit_report(ctx, r);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"branchcal: irrigation networks, calibrations and dipole energies"};
  app.require_subcommand(1);
  Context ctx;
  app.add_option("--report", ctx.report_path, "Write a JSON run report to this path");

  std::string network, calibration, instance;
  std::optional<double> alpha;
  double tol = 1e-9;
  std::uint64_t seed = 0;

  auto* mass = app.add_subcommand("mass", "Mass, boundary and boundary mass of a network");
  mass->add_option("network", network, "Network file")->required();
  mass->add_option("--alpha", alpha, "Exponent (overrides the file)")->check(CLI::Range(0.0, 1.0));

  auto* check = app.add_subcommand("check", "Check a constant calibration against a network");
  check->add_option("network", network, "Network file")->required();
  check->add_option("calibration", calibration, "Calibration file")->required();
  check->add_option("--alpha", alpha, "Exponent (overrides the file)")->check(CLI::Range(0.0, 1.0));
  check->add_option("--tol", tol, "Tolerance of the pointwise checks");

  bool heuristic = false;
  int restarts = 64;
  std::string output;
  auto* solve = app.add_subcommand("solve", "Optimal single-sink network");
  solve->add_option("instance", instance, "Instance file")->required();
  solve->add_option("--seed", seed, "Random seed");
  auto* exact_flag = solve->add_flag("--exact", "Enumerate every topology (default)");
  auto* heur_flag = solve->add_flag("--heuristic", heuristic, "Best of random topologies");
  exact_flag->excludes(heur_flag);
  solve->add_option("--restarts", restarts, "Random topologies in heuristic mode");
  solve->add_option("-o,--output", output, "Write the network here");

  double grid_step = 0.1;
  int oracle_restarts = 4;
  int max_sweeps = 4;
  auto* oracle = app.add_subcommand("oracle", "Brute-force reference solution");
  oracle->add_option("instance", instance, "Instance file")->required();
  oracle->add_option("--grid-step", grid_step, "Grid spacing");
  oracle->add_option("--restarts", oracle_restarts, "Random Nelder-Mead starts per topology");
  oracle->add_option("--seed", seed, "Random seed");
  oracle->add_option("--max-sweeps", max_sweeps, "Block-coordinate grid sweeps");

  int dim = 3;
  std::string a_point = "0,0,0", b_point = "1,0,0", schedule = "0.3:1/128,0.25:1/160,0.2:1/192";
  std::string dump;
  double beta = 0.25, gamma = 1.0;
  auto* dipole = app.add_subcommand("dipole", "Dipole energy table");
  dipole->add_option("--d", dim, "Ambient dimension");
  dipole->add_option("--A", a_point, "Endpoint A, comma separated");
  dipole->add_option("--B", b_point, "Endpoint B, comma separated");
  dipole->add_option("--beta", beta, "Pencil core radius");
  dipole->add_option("--gamma", gamma, "Pencil opening");
  dipole->add_option("--schedule", schedule, "scale:h pairs, comma separated");
  dipole->add_option("--dump", dump, "Write the last field of the schedule here");

  std::string format = "edges";
  auto* exporter = app.add_subcommand("export", "Polyline dump for plotting");
  exporter->add_option("network", network, "Network file")->required();
  exporter->add_option("--format", format, "edges or plot")->check(CLI::IsMember({"edges", "plot"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (*mass) return cmd_mass(ctx, network, alpha);
    if (*check) return cmd_check(ctx, network, calibration, alpha, tol);
    if (*solve) return cmd_solve(ctx, instance, seed, heuristic, restarts, output);
    if (*oracle) return cmd_oracle(ctx, instance, grid_step, oracle_restarts, seed, max_sweeps);
    if (*dipole) return cmd_dipole(ctx, dim, a_point, b_point, beta, gamma, schedule, dump);
    if (*exporter) return cmd_export(ctx, network, format);
  } catch (const bc::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitInput;
}
