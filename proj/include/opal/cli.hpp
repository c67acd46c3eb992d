#pragma once
// Command-line driver: verification suites, integration runs, elimination
// reports, lattice classification, and table printing.  Exit codes are a
// stable contract: 0 success, 1 failed checks or a failed integration,
// 2 usage, load, or parse errors.
#include <opal/atlas.hpp>
#include <opal/hamiltonian.hpp>
#include <opal/integrator.hpp>
#include <opal/kodaira_spencer.hpp>
#include <opal/lattice.hpp>
#include <opal/painleve_db.hpp>
#include <opal/report.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace opal {
namespace cli {

inline constexpr int kOk = 0;
inline constexpr int kFail = 1;
inline constexpr int kUsage = 2;

// ----------------------------------------------------------------- helpers

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw error("cannot read file '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw error("cannot write file '" + path + "'");
  out << text;
}

// Accepts "re" or "re,im".
inline Complex parse_complex(const std::string& text) {
  const auto comma = text.find(',');
  auto number = [&](const std::string& part) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(part, &used);
    } catch (const std::exception&) {
      throw error("malformed number '" + part + "'");
    }
    while (used < part.size() &&
           std::isspace(static_cast<unsigned char>(part[used])))
      ++used;
    if (used != part.size())
      throw error("malformed number '" + part + "'");
    return v;
  };
  if (comma == std::string::npos) return Complex{number(text), 0.0};
  return Complex{number(text.substr(0, comma)),
                 number(text.substr(comma + 1))};
}

// Accepts "name=value" with a complex value.
inline std::pair<std::string, Complex> parse_param(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0)
    throw error("malformed parameter '" + text + "' (expected name=value)");
  return {text.substr(0, eq), parse_complex(text.substr(eq + 1))};
}

// Accepts "re,im;re,im;..." (the imaginary part may be omitted per point).
inline std::vector<Complex> parse_waypoints(const std::string& text) {
  std::vector<Complex> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto semi = text.find(';', start);
    const std::string part =
        text.substr(start, semi == std::string::npos ? std::string::npos
                                                     : semi - start);
    if (!part.empty()) out.push_back(parse_complex(part));
    if (semi == std::string::npos) break;
    start = semi + 1;
  }
  if (out.size() < 2)
    throw error("a path needs at least two waypoints");
  return out;
}

inline std::string fmt_complex(Complex z) {
  std::ostringstream os;
  os << std::setprecision(17) << z;
  return os.str();
}

inline nlohmann::json json_complex(Complex z) {
  return nlohmann::json::array({z.real(), z.imag()});
}

inline nlohmann::json report_json(const Report& rep) {
  nlohmann::json checks = nlohmann::json::array();
  for (const CheckItem& it : rep.items) {
    nlohmann::json row;
    row["name"] = it.name;
    row["pass"] = it.pass;
    if (!it.detail.empty()) row["detail"] = it.detail;
    checks.push_back(std::move(row));
  }
  nlohmann::json j;
  j["checks"] = std::move(checks);
  j["failures"] = rep.fail_count();
  j["pass"] = rep.all_pass();
  return j;
}

// Print to stdout and optionally mirror into --out.
inline void emit(const std::string& text, const std::string& out_path) {
  std::cout << text;
  if (!out_path.empty()) write_file(out_path, text);
}

struct AtlasSource {
  std::string name;  // builtin
  std::string file;  // DSL file
};

inline Atlas load_atlas(const AtlasSource& src) {
  if (src.name.empty() == src.file.empty())
    throw error("choose exactly one input: --atlas NAME or --file PATH");
  if (!src.name.empty()) return builtin_atlas(src.name);
  return parse_atlas(read_file(src.file));
}

// ------------------------------------------------------------------ verify

inline Report verification_suite(const Atlas& atlas) {
  Report rep = check_atlas(atlas);
  const CechCocycle c = ks_cocycle(atlas);
  rep.merge(verify_cocycle(c, atlas));
  rep.merge(verify_coboundary(c, atlas.coboundary, atlas));
  rep.merge(check_gluing(atlas, atlas.coboundary));
  for (std::size_t i = 0; i < atlas.charts.size(); ++i)
    fundamental_check(atlas, static_cast<int>(i),
                      atlas.coboundary.at(static_cast<int>(i)), rep);
  for (std::size_t i = 0; i < atlas.charts.size(); ++i) {
    const Chart& ch = atlas.charts[i];
    const VectorField& vf = atlas.coboundary.at(static_cast<int>(i));
    if (ch.pole_order != 0 || !vf.eta.is_polynomial() ||
        !vf.zeta.is_polynomial())
      continue;  // recovery is defined on density-one polynomial charts
    try {
      const RatFunc H =
          recover_hamiltonian(atlas, static_cast<int>(i), vf);
      verify_hamiltonian(atlas, static_cast<int>(i), H, vf, rep);
    } catch (const error& e) {
      rep.add("Hamiltonian recovery on chart " + ch.id, false, e.what());
    }
  }
  return rep;
}

inline int cmd_verify(const AtlasSource& src, bool json,
                      const std::string& out_path) {
  Atlas atlas;
  try {
    atlas = load_atlas(src);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  try {
    const Report rep = verification_suite(atlas);
    std::ostringstream os;
    if (json) {
      nlohmann::json j = report_json(rep);
      j["command"] = "verify";
      j["atlas"] = atlas.name;
      os << j.dump(2) << "\n";
    } else {
      os << rep.to_text();
      if (rep.all_pass())
        os << "RESULT: pass (" << rep.items.size() << " checks)\n";
      else
        os << "RESULT: fail (" << rep.fail_count() << " of "
           << rep.items.size() << " checks failed)\n";
    }
    emit(os.str(), out_path);
    return rep.all_pass() ? kOk : kFail;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFail;
  }
}

// --------------------------------------------------------------- integrate

struct IntegrateConfig {
  AtlasSource src;
  std::vector<std::string> params;
  std::string chart;
  std::string x0 = "0";
  std::string y0 = "0";
  std::optional<std::string> t0, t1, path_list;
  double rtol = 1e-9;
  double atol = 1e-12;
  double h_max = 0.0;
  std::size_t max_steps = 1000000;
  bool json = false;
  std::string out_path;
};

inline int cmd_integrate(const IntegrateConfig& cfg) {
  Atlas atlas;
  int chart = 0;
  PhaseState init;
  TPath path;
  bool single_point = false;
  Complex t_start;
  try {
    atlas = load_atlas(cfg.src);
    chart = cfg.chart.empty() ? 0 : atlas.chart_index(cfg.chart);
    init = PhaseState{chart, parse_complex(cfg.x0), parse_complex(cfg.y0),
                      Complex{}};
    for (const std::string& p : cfg.params) {
      auto [k, v] = parse_param(p);
      path.params[k] = v;
    }
    // Wrong or missing parameter names are usage errors, not run failures.
    for (const auto& [k, v] : path.params)
      if (std::find(atlas.params.begin(), atlas.params.end(), k) ==
          atlas.params.end())
        throw error("unknown parameter '" + k + "' for atlas '" + atlas.name +
                    "'");
    for (const std::string& name : atlas.params)
      if (!path.params.count(name))
        throw error("missing value for parameter '" + name + "' (use --param " +
                    name + "=VALUE)");
    if (cfg.path_list) {
      if (cfg.t0 || cfg.t1)
        throw error("--path excludes --t0/--t1");
      path.waypoints = parse_waypoints(*cfg.path_list);
      t_start = path.waypoints.front();
    } else {
      if (!cfg.t0 || !cfg.t1)
        throw error("supply --t0 and --t1, or --path");
      t_start = parse_complex(*cfg.t0);
      const Complex t_end = parse_complex(*cfg.t1);
      single_point = t_start == t_end;
      path.waypoints = {t_start, t_end};
    }
    if (cfg.rtol <= 0 || cfg.atol <= 0)
      throw error("tolerances must be positive");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    Trajectory traj;
    if (single_point) {
      // A degenerate time range is an empty integration: one sample.
      init.t = t_start;
      traj.samples.push_back(
          Sample{init.t, init.chart, init.x, init.y, 0.0, 0.0});
    } else {
      IntegrateOptions opt;
      opt.rtol = cfg.rtol;
      opt.atol = cfg.atol;
      opt.h_max = cfg.h_max;
      opt.max_steps = cfg.max_steps;
      traj = integrate(atlas, atlas.coboundary, path, init, opt);
    }
    const PhaseState end = traj.final_state();
    if (!cfg.out_path.empty()) {
      const bool csv = cfg.out_path.size() >= 4 &&
                       cfg.out_path.substr(cfg.out_path.size() - 4) == ".csv";
      write_file(cfg.out_path,
                 csv ? trajectory_to_csv(atlas, traj)
                     : trajectory_to_json(atlas, traj, path.params).dump(2) +
                           "\n");
    }
    std::ostringstream os;
    if (cfg.json) {
      nlohmann::json j;
      j["command"] = "integrate";
      j["atlas"] = atlas.name;
      j["accepted"] = traj.accepted;
      j["rejected"] = traj.rejected;
      j["switches"] = traj.switches.size();
      j["final"] = {
          {"chart", atlas.charts.at(static_cast<std::size_t>(end.chart)).id},
          {"x", json_complex(end.x)},
          {"y", json_complex(end.y)},
          {"t", json_complex(end.t)}};
      if (!cfg.out_path.empty()) j["out"] = cfg.out_path;
      j["trajectory"] = trajectory_to_json(atlas, traj, path.params);
      os << j.dump(2) << "\n";
    } else {
      os << "atlas " << atlas.name << ": " << traj.accepted
         << " accepted steps (" << traj.rejected << " rejected), "
         << traj.switches.size() << " switches\n"
         << "final: chart "
         << atlas.charts.at(static_cast<std::size_t>(end.chart)).id
         << ", x = " << fmt_complex(end.x) << ", y = " << fmt_complex(end.y)
         << ", t = " << fmt_complex(end.t) << "\n";
      if (!cfg.out_path.empty())
        os << "trajectory written to " << cfg.out_path << "\n";
    }
    std::cout << os.str();
    return kOk;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFail;
  }
}

// --------------------------------------------------------------- eliminate

inline int cmd_eliminate(const std::string& tag, bool json,
                         const std::string& out_path) {
  PainleveSystem sys;
  try {
    sys = builtin_system(tag);
    if (!sys.hamiltonian)
      throw error("system '" + sys.tag +
                  "' carries no quadratic Hamiltonian in the catalog; "
                  "nothing to eliminate");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  try {
    const ScalarODE mine = eliminate_y(*sys.hamiltonian);
    const CompareResult cr = compare(mine, sys.scalar, sys.params);
    std::ostringstream os;
    if (json) {
      nlohmann::json j;
      j["command"] = "eliminate";
      j["system"] = sys.tag;
      j["eliminated"] = to_string(mine.rhs);
      j["catalog"] = to_string(sys.scalar.rhs);
      j["match"] = cr.match;
      j["residual"] = to_string(cr.residual);
      os << j.dump(2) << "\n";
    } else {
      os << "system " << sys.tag << "\n"
         << "eliminated: x'' = " << to_string(mine.rhs) << "\n"
         << "catalog:    x'' = " << to_string(sys.scalar.rhs) << "\n";
      if (cr.match)
        os << "match: x'' = " << to_string(mine.rhs) << "\n";
      else
        os << "mismatch: residual = " << to_string(cr.residual) << "\n";
    }
    emit(os.str(), out_path);
    return kOk;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFail;
  }
}

// ---------------------------------------------------------------- classify

inline std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += " ";
    out += std::to_string(v[i]);
  }
  return out;
}

inline int cmd_classify(const std::string& file, const std::string& type,
                        bool json, const std::string& out_path) {
  IntersectionMatrix m;
  try {
    if (file.empty() == type.empty())
      throw error("choose exactly one input: --file PATH or --type LABEL");
    if (!file.empty())
      m = matrix_from_json_text(read_file(file));
    else
      m = builtin_matrix(type).second;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  try {
    const std::optional<RootType> t = classify(m);
    std::ostringstream os;
    if (!t) {
      if (json) {
        nlohmann::json j;
        j["command"] = "classify";
        j["match"] = nullptr;
        os << j.dump(2) << "\n";
      } else {
        os << "no match: the matrix is not a recognized affine root "
              "lattice\n";
      }
      emit(os.str(), out_path);
      return kFail;
    }
    const auto null_basis = kernel(m);
    std::string kernel_text;
    if (null_basis.size() == 1) {
      for (std::size_t i = 0; i < null_basis[0].size(); ++i) {
        if (i) kernel_text += " ";
        kernel_text += null_basis[0][i].get_str();
      }
    }
    if (json) {
      nlohmann::json j;
      j["command"] = "classify";
      j["match"] = t->label;
      j["kodaira"] = t->kodaira;
      j["r"] = t->r;
      j["dim"] = deformation_dim(*t);
      j["marks"] = t->marks;
      j["kernel"] = kernel_text;
      if (!t->painleve.empty()) j["painleve"] = t->painleve;
      os << j.dump(2) << "\n";
    } else {
      os << t->label << ", Kodaira " << t->kodaira << ", r=" << t->r
         << ", dim=" << deformation_dim(*t) << "\n"
         << "marks:  " << join_ints(t->marks) << "\n"
         << "kernel: " << kernel_text << "\n";
      if (!t->painleve.empty()) os << "painleve: " << t->painleve << "\n";
    }
    emit(os.str(), out_path);
    return kOk;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFail;
  }
}

// ------------------------------------------------------------------ tables

inline int cmd_tables(bool json, const std::string& out_path) {
  try {
    std::ostringstream os;
    if (json) {
      nlohmann::json types = nlohmann::json::array();
      for (const auto& [t, m] : builtin_catalog()) {
        (void)m;
        nlohmann::json row;
        row["label"] = t.label;
        row["kodaira"] = t.kodaira;
        row["r"] = t.r;
        row["dim"] = deformation_dim(t);
        row["marks"] = t.marks;
        row["painleve"] = t.painleve;
        types.push_back(std::move(row));
      }
      nlohmann::json systems = nlohmann::json::array();
      for (const std::string& tag : painleve_tags()) {
        const PainleveSystem sys = builtin_system(tag);
        nlohmann::json row;
        row["tag"] = sys.tag;
        row["scalar"] = to_string(sys.scalar.rhs);
        if (sys.hamiltonian) {
          row["A"] = to_string(sys.hamiltonian->A);
          row["B"] = to_string(sys.hamiltonian->B);
          row["C"] = to_string(sys.hamiltonian->C);
        }
        systems.push_back(std::move(row));
      }
      nlohmann::json j;
      j["command"] = "tables";
      j["types"] = std::move(types);
      j["systems"] = std::move(systems);
      os << j.dump(2) << "\n";
    } else {
      os << "affine root types\n"
         << "-----------------\n";
      for (const auto& [t, m] : builtin_catalog()) {
        (void)m;
        os << std::left << std::setw(6) << t.label << std::setw(8)
           << t.kodaira << "r=" << t.r << "  dim=" << deformation_dim(t)
           << "  marks " << std::setw(20) << join_ints(t.marks);
        os << (t.painleve.empty() ? std::string("-") : t.painleve) << "\n";
      }
      os << "\nPainleve systems\n"
         << "----------------\n";
      for (const std::string& tag : painleve_tags()) {
        const PainleveSystem sys = builtin_system(tag);
        os << std::left << std::setw(8) << sys.tag
           << "x'' = " << to_string(sys.scalar.rhs) << "\n";
        if (sys.hamiltonian)
          os << "        H = (" << to_string(sys.hamiltonian->A)
             << ")*y^2 + (" << to_string(sys.hamiltonian->B) << ")*y + ("
             << to_string(sys.hamiltonian->C) << ")\n";
      }
    }
    emit(os.str(), out_path);
    return kOk;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFail;
  }
}

// -------------------------------------------------------------------- main

inline int run(int argc, char** argv) {
  CLI::App app{
      "opal: exact verification and chart-switching integration of "
      "Painleve surface pairs"};
  app.require_subcommand(1);

  // verify
  AtlasSource v_src;
  bool v_json = false;
  std::string v_out;
  CLI::App* verify = app.add_subcommand(
      "verify", "run the symbolic identity suite on an atlas");
  verify->add_option("--atlas", v_src.name, "builtin atlas name (E7, D8)");
  verify->add_option("--file", v_src.file, "atlas DSL file");
  verify->add_flag("--json", v_json, "emit a JSON report");
  verify->add_option("--out", v_out, "also write the report to PATH");

  // integrate
  IntegrateConfig icfg;
  CLI::App* integ = app.add_subcommand(
      "integrate", "integrate the time flow along a path");
  integ->add_option("--atlas", icfg.src.name, "builtin atlas name (E7, D8)");
  integ->add_option("--file", icfg.src.file, "atlas DSL file");
  integ->add_option("--param", icfg.params,
                    "parameter assignment name=value (repeatable; value "
                    "is 're' or 're,im')");
  integ->add_option("--chart", icfg.chart,
                    "initial chart id (default: first chart)");
  integ->add_option("--x0", icfg.x0, "initial x ('re' or 're,im')");
  integ->add_option("--y0", icfg.y0, "initial y ('re' or 're,im')");
  auto* t0_opt = integ->add_option("--t0", icfg.t0, "path start time");
  auto* t1_opt = integ->add_option("--t1", icfg.t1, "path end time");
  integ
      ->add_option("--path", icfg.path_list,
                   "polyline waypoints 're,im;re,im;...'")
      ->excludes(t0_opt)
      ->excludes(t1_opt);
  integ->add_option("--rtol", icfg.rtol, "relative tolerance")
      ->default_val(1e-9);
  integ->add_option("--atol", icfg.atol, "absolute tolerance")
      ->default_val(1e-12);
  integ->add_option("--h-max", icfg.h_max,
                    "cap on the arclength step (0 = uncapped)");
  integ->add_option("--max-steps", icfg.max_steps,
                    "accepted-step budget before giving up");
  integ->add_flag("--json", icfg.json, "emit a JSON summary with the "
                                       "trajectory embedded");
  integ->add_option("--out", icfg.out_path,
                    "write the trajectory to PATH (.csv selects CSV, "
                    "anything else JSON)");

  // eliminate
  std::string e_tag;
  bool e_json = false;
  std::string e_out;
  CLI::App* elim = app.add_subcommand(
      "eliminate", "turn a catalog Hamiltonian into its scalar equation "
                   "and compare");
  elim->add_option("--system", e_tag, "catalog tag (I, II, ..., VI)")
      ->required();
  elim->add_flag("--json", e_json, "emit a JSON report");
  elim->add_option("--out", e_out, "also write the report to PATH");

  // classify
  std::string c_file, c_type;
  bool c_json = false;
  std::string c_out;
  CLI::App* cls = app.add_subcommand(
      "classify", "identify the affine root type of an intersection matrix");
  cls->add_option("--file", c_file,
                  "JSON file with {\"entries\": [[...], ...]}");
  cls->add_option("--type", c_type, "builtin catalog label (e.g. E7~)");
  cls->add_flag("--json", c_json, "emit a JSON report");
  cls->add_option("--out", c_out, "also write the report to PATH");

  // tables
  bool t_json = false;
  std::string t_out;
  CLI::App* tab = app.add_subcommand(
      "tables", "print the classification and Painleve catalogs");
  tab->add_flag("--json", t_json, "emit JSON tables");
  tab->add_option("--out", t_out, "also write the tables to PATH");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  if (verify->parsed()) return cmd_verify(v_src, v_json, v_out);
  if (integ->parsed()) return cmd_integrate(icfg);
  if (elim->parsed()) return cmd_eliminate(e_tag, e_json, e_out);
  if (cls->parsed()) return cmd_classify(c_file, c_type, c_json, c_out);
  if (tab->parsed()) return cmd_tables(t_json, t_out);
  return kUsage;
}

}  // namespace cli
}  // namespace opal
