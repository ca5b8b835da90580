#include "stmg/config.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <set>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace stmg {

double BenchConfig::characteristic_length() const {
  return geometry.cylinder ? geometry.cylinder->diameter : geometry.height;
}

int BenchConfig::num_steps() const {
  const double n = t_end / tau;
  const auto steps = static_cast<int>(std::llround(n));
  if (std::abs(n - steps) > 1e-9 * std::max(1.0, n)) {
    throw Error("config: t_end = " + std::to_string(t_end) + " is not a multiple of tau = " +
                std::to_string(tau));
  }
  return steps;
}

void BenchConfig::validate() const {
  geometry.validate();
  if (n0 < 1) throw Error("config: mesh.n0 must be >= 1");
  if (levels < 1) throw Error("config: mesh.levels must be >= 1");
  if (r < 1 || r > 6) throw Error("config: problem.r must lie in [1,6]");
  if (k < 0 || k > 3) throw Error("config: problem.k must lie in [0,3]");
  if (!(nu > 0.0)) throw Error("config: problem.nu must be positive");
  if (!(gamma1 > 0.0) || !(gamma2 > 0.0)) throw Error("config: Nitsche penalties must be positive");
  if (!(tau > 0.0) || !(t_end > 0.0)) throw Error("config: time.tau and time.t_end must be positive");
  if (ranks < 1) throw Error("config: parallel.ranks must be >= 1");
  if (gmg.coarse_level >= levels) throw Error("config: mg.coarse_level must be below mesh.levels");
  if (output.vtk_stride < 0) throw Error("config: output.vtk_stride must be >= 0");
  gmg.validate();
  krylov.validate();
  newton.validate();
  num_steps();
}

namespace {

using boost::property_tree::ptree;

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"geometry", {"length", "height", "cylinder", "cx", "cy", "diameter"}},
      {"mesh", {"n0", "levels"}},
      {"problem", {"r", "k", "nu", "u_max", "gamma1", "gamma2"}},
      {"time", {"t_end", "tau"}},
      {"mg", {"pre_smooth", "post_smooth", "damping", "coarse_level", "diagnostics"}},
      {"vanka", {"damping", "mode", "zero_pressure_rhs"}},
      {"krylov", {"rel_tol", "max_iter", "restart"}},
      {"newton", {"abs_tol", "rel_reduction", "max_iter", "backtrack", "max_trials"}},
      {"parallel", {"ranks"}},
      {"output", {"dir", "wall_time", "vtk_stride", "window_start", "trace"}},
  };
  return keys;
}

template <class T>
void read(const ptree& tree, const std::string& key, T& target) {
  if (const auto v = tree.get_optional<std::string>(key)) {
    try {
      target = tree.get<T>(key);
    } catch (const boost::property_tree::ptree_error&) {
      throw Error("config: cannot parse " + key + " = '" + *v + "'");
    }
  }
}

void read_bool(const ptree& tree, const std::string& key, bool& target) {
  if (const auto v = tree.get_optional<std::string>(key)) {
    if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") {
      target = true;
    } else if (*v == "false" || *v == "0" || *v == "no" || *v == "off") {
      target = false;
    } else {
      throw Error("config: cannot parse " + key + " = '" + *v + "' as a boolean");
    }
  }
}

}  // namespace

BenchConfig parse_config(std::istream& in) {
  ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw Error(std::string("config: ") + e.what());
  }
  for (const auto& [section, body] : tree) {
    const auto it = known_keys().find(section);
    if (it == known_keys().end()) throw Error("config: unknown section [" + section + "]");
    if (body.empty() && !body.data().empty()) {
      throw Error("config: key '" + section + "' outside of any section");
    }
    for (const auto& [key, value] : body) {
      if (!it->second.contains(key)) throw Error("config: unknown key " + section + "." + key);
    }
  }

  BenchConfig cfg;
  bool cylinder = cfg.geometry.cylinder.has_value();
  read_bool(tree, "geometry.cylinder", cylinder);
  read(tree, "geometry.length", cfg.geometry.length);
  read(tree, "geometry.height", cfg.geometry.height);
  Cylinder cyl = cfg.geometry.cylinder.value_or(Cylinder{});
  read(tree, "geometry.cx", cyl.center[0]);
  read(tree, "geometry.cy", cyl.center[1]);
  read(tree, "geometry.diameter", cyl.diameter);
  cfg.geometry.cylinder = cylinder ? std::optional<Cylinder>(cyl) : std::nullopt;

  read(tree, "mesh.n0", cfg.n0);
  read(tree, "mesh.levels", cfg.levels);
  read(tree, "problem.r", cfg.r);
  read(tree, "problem.k", cfg.k);
  read(tree, "problem.nu", cfg.nu);
  read(tree, "problem.u_max", cfg.u_max);
  read(tree, "problem.gamma1", cfg.gamma1);
  read(tree, "problem.gamma2", cfg.gamma2);
  read(tree, "time.t_end", cfg.t_end);
  read(tree, "time.tau", cfg.tau);

  read(tree, "mg.pre_smooth", cfg.gmg.pre_smooth);
  read(tree, "mg.post_smooth", cfg.gmg.post_smooth);
  read(tree, "mg.coarse_level", cfg.gmg.coarse_level);
  read_bool(tree, "mg.diagnostics", cfg.gmg.diagnostics);
  const auto mg_damping = tree.get_optional<std::string>("mg.damping");
  const auto vanka_damping = tree.get_optional<std::string>("vanka.damping");
  read(tree, "mg.damping", cfg.gmg.vanka.damping);
  if (vanka_damping) {
    const double before = cfg.gmg.vanka.damping;
    read(tree, "vanka.damping", cfg.gmg.vanka.damping);
    if (mg_damping && before != cfg.gmg.vanka.damping) {
      throw Error("config: mg.damping and vanka.damping disagree");
    }
  }
  if (const auto mode = tree.get_optional<std::string>("vanka.mode")) {
    if (*mode == "deterministic") {
      cfg.gmg.vanka.mode = VankaMode::kDeterministic;
    } else if (*mode == "racy") {
      cfg.gmg.vanka.mode = VankaMode::kRacy;
    } else {
      throw Error("config: vanka.mode must be deterministic or racy, got '" + *mode + "'");
    }
  }
  read_bool(tree, "vanka.zero_pressure_rhs", cfg.gmg.vanka.zero_pressure_rhs);

  read(tree, "krylov.rel_tol", cfg.krylov.rel_tol);
  read(tree, "krylov.max_iter", cfg.krylov.max_iter);
  read(tree, "krylov.restart", cfg.krylov.restart);
  read(tree, "newton.abs_tol", cfg.newton.abs_tol);
  read(tree, "newton.rel_reduction", cfg.newton.rel_reduction);
  read(tree, "newton.max_iter", cfg.newton.max_iter);
  read(tree, "newton.backtrack", cfg.newton.backtrack);
  read(tree, "newton.max_trials", cfg.newton.max_trials);
  read(tree, "parallel.ranks", cfg.ranks);
  read(tree, "output.dir", cfg.output.dir);
  read_bool(tree, "output.wall_time", cfg.output.wall_time);
  read(tree, "output.vtk_stride", cfg.output.vtk_stride);
  read(tree, "output.window_start", cfg.output.window_start);
  read_bool(tree, "output.trace", cfg.output.trace);

  cfg.validate();
  return cfg;
}

BenchConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("config: cannot open " + path);
  return parse_config(in);
}

void write_config(std::ostream& out, const BenchConfig& cfg) {
  const auto old = out.precision(17);
  const auto b = [](bool v) { return v ? "true" : "false"; };
  const Cylinder cyl = cfg.geometry.cylinder.value_or(Cylinder{});
  out << "[geometry]\nlength = " << cfg.geometry.length << "\nheight = " << cfg.geometry.height
      << "\ncylinder = " << b(cfg.geometry.cylinder.has_value()) << "\ncx = " << cyl.center[0]
      << "\ncy = " << cyl.center[1] << "\ndiameter = " << cyl.diameter << "\n\n";
  out << "[mesh]\nn0 = " << cfg.n0 << "\nlevels = " << cfg.levels << "\n\n";
  out << "[problem]\nr = " << cfg.r << "\nk = " << cfg.k << "\nnu = " << cfg.nu
      << "\nu_max = " << cfg.u_max << "\ngamma1 = " << cfg.gamma1 << "\ngamma2 = " << cfg.gamma2
      << "\n\n";
  out << "[time]\nt_end = " << cfg.t_end << "\ntau = " << cfg.tau << "\n\n";
  out << "[mg]\npre_smooth = " << cfg.gmg.pre_smooth << "\npost_smooth = " << cfg.gmg.post_smooth
      << "\ncoarse_level = " << cfg.gmg.coarse_level << "\ndiagnostics = " << b(cfg.gmg.diagnostics)
      << "\n\n";
  out << "[vanka]\ndamping = " << cfg.gmg.vanka.damping << "\nmode = "
      << (cfg.gmg.vanka.mode == VankaMode::kRacy ? "racy" : "deterministic")
      << "\nzero_pressure_rhs = " << b(cfg.gmg.vanka.zero_pressure_rhs) << "\n\n";
  out << "[krylov]\nrel_tol = " << cfg.krylov.rel_tol << "\nmax_iter = " << cfg.krylov.max_iter
      << "\nrestart = " << cfg.krylov.restart << "\n\n";
  out << "[newton]\nabs_tol = " << cfg.newton.abs_tol << "\nrel_reduction = " << cfg.newton.rel_reduction
      << "\nmax_iter = " << cfg.newton.max_iter << "\nbacktrack = " << cfg.newton.backtrack
      << "\nmax_trials = " << cfg.newton.max_trials << "\n\n";
  out << "[parallel]\nranks = " << cfg.ranks << "\n\n";
  out << "[output]\ndir = " << cfg.output.dir << "\nwall_time = " << b(cfg.output.wall_time)
      << "\nvtk_stride = " << cfg.output.vtk_stride << "\nwindow_start = " << cfg.output.window_start
      << "\ntrace = " << b(cfg.output.trace) << '\n';
  out.precision(old);
}

}  // namespace stmg
