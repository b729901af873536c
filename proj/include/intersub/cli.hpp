#pragma once

// Command-line front end. parse_config turns argv into a validated RunConfig
// before anything is computed; run() executes it and writes CSV or JSON.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "intersub/bounds.hpp"
#include "intersub/coarsegrain.hpp"
#include "intersub/core.hpp"
#include "intersub/fit.hpp"
#include "intersub/oracle.hpp"
#include "intersub/partition.hpp"
#include "intersub/spinstar.hpp"

namespace intersub::cli {

enum class Format { Csv, Json };

struct BoundsParams {
  std::vector<double> a;
  int n = 2;
  std::vector<double> p;
};

struct PartitionParams {
  std::vector<double> energies;
  double beta = 1.0;
  std::vector<int> dims;
  bool renormalize = false;
};

struct CoarsegrainParams {
  std::vector<double> a;
  std::vector<int> lcg;
  int n = 2;
  std::vector<double> p;
};

struct FitParams {
  std::string input;
  std::size_t skip_first = 0;
  std::string x_column;
  std::string y_column;
};

struct OracleParams {
  int d_s = 2;
  std::vector<double> energies;
  double beta = 1.0;
  int n = 2;
  std::vector<double> p;
};

struct SpinstarParams {
  int n_total = 1024;
  std::vector<int> lcg;  // one entry: time scan; several: sweep summary
  bool sweep = false;
  double beta = 1.0;
  double p0 = 0.2;
  double g = 1.0;
  double t_max = 6.0;
  int t_steps = 240;
  PointerHamiltonian pointer_h = PointerHamiltonian::Half;
};

// Default grid: odd l_cg 3…121 for d_S = 2 and every l_cg 2…60 above that.
// Odd/All use [l_min, l_max] for every d_S.
enum class Fig3Grid { Default, Odd, All };

struct Fig3Params {
  std::vector<int> d_list{2, 3, 4, 5};
  Fig3Grid grid = Fig3Grid::Default;
  int l_min = 2;
  int l_max = 121;
};

using Params = std::variant<BoundsParams, PartitionParams, CoarsegrainParams, FitParams,
                            OracleParams, SpinstarParams, Fig3Params>;

/// Thrown by parse_config for --help; carries the usage text.
struct HelpRequested {
  std::string text;
};

struct RunConfig {
  std::string command;
  Params params;
  std::string out = "-";
  Format format = Format::Csv;
};

// ---------------------------------------------------------------------------
// Tables and emission.

using Cell = std::variant<long long, double, std::string>;

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<Cell>> rows;
};

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string format_cell(const Cell& c) {
  if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
  if (const auto* d = std::get_if<double>(&c)) return format_double(*d);
  return std::get<std::string>(c);
}

inline std::string to_csv(const Table& t) {
  std::string s;
  for (std::size_t k = 0; k < t.header.size(); ++k) s += (k ? "," : "") + t.header[k];
  s += '\n';
  for (const auto& row : t.rows) {
    for (std::size_t k = 0; k < row.size(); ++k) s += (k ? "," : "") + format_cell(row[k]);
    s += '\n';
  }
  return s;
}

inline nlohmann::json to_json(const Table& t) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : t.rows) {
    nlohmann::json obj = nlohmann::json::object();
    for (std::size_t k = 0; k < row.size(); ++k) {
      std::visit([&](const auto& v) { obj[t.header[k]] = v; }, row[k]);
    }
    rows.push_back(std::move(obj));
  }
  return rows;
}

inline void write_text(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    out.flush();
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError(detail::concat("cannot open '", path, "' for writing"));
  f << text;
  if (!f) throw IoError(detail::concat("failed writing '", path, "'"));
}

inline void emit(const Table& t, const RunConfig& cfg, std::ostream& out = std::cout) {
  if (t.rows.empty()) throw ValidationError("emit: no records to write");
  write_text(cfg.format == Format::Csv ? to_csv(t) : to_json(t).dump(2) + "\n", cfg.out, out);
}

inline void emit(const nlohmann::json& j, const RunConfig& cfg, std::ostream& out = std::cout) {
  if (j.is_null() || j.empty()) throw ValidationError("emit: no records to write");
  write_text(j.dump(2) + "\n", cfg.out, out);
}

// ---------------------------------------------------------------------------
// Input helpers.

template <class T>
std::vector<T> parse_list(const std::string& text, const std::string& flag) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) throw ConfigError(detail::concat(flag, ": empty list entry"));
    item = item.substr(b, e - b + 1);
    char* end = nullptr;
    if constexpr (std::is_integral_v<T>) {
      const long v = std::strtol(item.c_str(), &end, 10);
      if (end == item.c_str() || *end != '\0') {
        throw ConfigError(detail::concat(flag, ": '", item, "' is not an integer"));
      }
      out.push_back(static_cast<T>(v));
    } else {
      const double v = std::strtod(item.c_str(), &end);
      if (end == item.c_str() || *end != '\0' || !std::isfinite(v)) {
        throw ConfigError(detail::concat(flag, ": '", item, "' is not a finite number"));
      }
      out.push_back(v);
    }
  }
  if (out.empty()) throw ConfigError(detail::concat(flag, ": empty list"));
  return out;
}

inline std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError(detail::concat("cannot open '", path, "'"));
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

/// One real per line; blank lines and '#' comments skipped.
inline std::vector<double> read_column(const std::string& path) {
  std::vector<double> out;
  std::stringstream ss(read_file(path));
  std::string line;
  while (std::getline(ss, line)) {
    if (line.empty() || line[0] == '#' || line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    char* end = nullptr;
    const double v = std::strtod(line.c_str(), &end);
    if (end == line.c_str()) throw ConfigError(detail::concat(path, ": bad number '", line, "'"));
    out.push_back(v);
  }
  return out;
}

struct XY {
  std::vector<double> x;
  std::vector<double> y;
};

/// Two columns from a CSV file. A non-numeric first row is a header, and
/// columns may then be chosen by name; otherwise by 0-based index.
inline XY read_xy_csv(const std::string& path, const std::string& x_col = "",
                      const std::string& y_col = "") {
  std::stringstream ss(read_file(path));
  std::string line;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(ss, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (rows.empty() && header.empty()) {
      char* end = nullptr;
      std::strtod(cells.front().c_str(), &end);
      if (end == cells.front().c_str()) {
        header = cells;
        continue;
      }
    }
    rows.push_back(std::move(cells));
  }
  auto resolve = [&](const std::string& col, std::size_t fallback) -> std::size_t {
    if (col.empty()) return fallback;
    for (std::size_t k = 0; k < header.size(); ++k) {
      if (header[k] == col) return k;
    }
    char* end = nullptr;
    const long v = std::strtol(col.c_str(), &end, 10);
    if (end == col.c_str() || *end != '\0' || v < 0) {
      throw ConfigError(detail::concat("column '", col, "' not found in ", path));
    }
    return static_cast<std::size_t>(v);
  };
  const std::size_t xi = resolve(x_col, 0);
  const std::size_t yi = resolve(y_col, 1);
  XY out;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() <= std::max(xi, yi)) {
      throw ConfigError(detail::concat(path, ": row ", r + 1, " has too few columns"));
    }
    auto number = [&](std::size_t idx) {
      char* end = nullptr;
      const double v = std::strtod(rows[r][idx].c_str(), &end);
      if (end == rows[r][idx].c_str()) {
        throw ConfigError(detail::concat(path, ": row ", r + 1, " has a non-numeric entry"));
      }
      return v;
    };
    out.x.push_back(number(xi));
    out.y.push_back(number(yi));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Parsing.

namespace checks {

inline void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

}  // namespace checks

inline RunConfig parse_config(const std::vector<std::string>& args) {
  CLI::App app{"Finite-resource intersubjectivity bounds and simulations", "intersub"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Print help for every subcommand");

  RunConfig cfg;
  std::string format = "";
  auto add_output = [&](CLI::App* sub, const char* default_format) {
    sub->add_option("--out", cfg.out, "Output path ('-' for stdout)");
    sub->add_option("--format", format, std::string("csv or json (default ") + default_format + ")")
        ->check(CLI::IsMember({"csv", "json"}));
  };

  std::string a_s, p_s, energies_s, energies_file, dims_s, lcg_s, lcg_list_s, d_list_s;
  BoundsParams bp;
  PartitionParams pp;
  CoarsegrainParams cp;
  FitParams fp;
  OracleParams op;
  SpinstarParams sp;
  Fig3Params f3;
  std::string pointer_h = "half";
  std::string grid = "default";
  int lcg_max = 0;

  auto* bounds = app.add_subcommand("bounds", "Agreement, noise distribution, bias, local probabilities");
  bounds->add_option("--a", a_s, "Subspace traces a_x, comma separated")->required();
  bounds->add_option("--n", bp.n, "Number of observers")->required();
  bounds->add_option("--p", p_s, "System distribution p_S, comma separated")->required();
  add_output(bounds, "json");

  auto* partition = app.add_subcommand("partition", "Greedy outcome subspaces of a thermal pointer");
  auto* e_opt = partition->add_option("--energies", energies_s, "Pointer energies, comma separated");
  partition->add_option("--energies-file", energies_file, "One energy per line")->excludes(e_opt);
  partition->add_option("--beta", pp.beta, "Inverse temperature");
  partition->add_option("--dims", dims_s, "Subspace dimensions, comma separated")->required();
  partition->add_flag("--renormalize", pp.renormalize, "Renormalize traces over covered levels");
  add_output(partition, "json");

  auto* coarse = app.add_subcommand("coarsegrain", "Coarse-grained traces and bounds versus l_cg");
  coarse->add_option("--a", a_s, "Subspace traces a_x (non-increasing)")->required();
  auto* lcg_opt = coarse->add_option("--lcg", lcg_s, "Group sizes, comma separated");
  coarse->add_option("--lcg-max", lcg_max, "Use every l_cg = 1 … max")->excludes(lcg_opt);
  coarse->add_option("--n", cp.n, "Observers after grouping");
  coarse->add_option("--p", p_s, "System distribution p_S");
  add_output(coarse, "csv");

  auto* fit = app.add_subcommand("fit", "Fit y = c0 exp(c1 x) to a two-column CSV");
  fit->add_option("--input", fp.input, "CSV file")->required();
  fit->add_option("--skip-first", fp.skip_first, "Rows to drop before fitting");
  fit->add_option("--x-column", fp.x_column, "x column name or index (default 0)");
  fit->add_option("--y-column", fp.y_column, "y column name or index (default 1)");
  add_output(fit, "json");

  auto* oracle = app.add_subcommand("oracle", "Dense optimal-broadcast check against closed forms");
  oracle->add_option("--d-s", op.d_s, "System dimension");
  oracle->add_option("--energies", energies_s, "Pointer energies, comma separated")->required();
  oracle->add_option("--beta", op.beta, "Inverse temperature");
  oracle->add_option("--n", op.n, "Number of pointers");
  oracle->add_option("--p", p_s, "System distribution p_S")->required();
  add_output(oracle, "json");

  auto* spin = app.add_subcommand("spinstar", "Central-spin time scan or l_cg sweep");
  spin->add_option("--n-total", sp.n_total, "Total number of pointers");
  auto* one = spin->add_option("--lcg", lcg_s, "Macrofraction size (time scan)");
  spin->add_option("--lcg-list", lcg_list_s, "Macrofraction sizes (sweep summary)")->excludes(one);
  spin->add_option("--beta", sp.beta, "Inverse temperature");
  spin->add_option("--p0", sp.p0, "Prior of the central spin being 0");
  spin->add_option("--g", sp.g, "Coupling");
  spin->add_option("--t-max", sp.t_max, "Scan times k*t_max/t_steps, k = 1 … t_steps");
  spin->add_option("--t-steps", sp.t_steps, "Number of time points");
  spin->add_option("--pointer-h", pointer_h, "Pointer Hamiltonian sigma_x/2 (half) or sigma_x (unit)")
      ->check(CLI::IsMember({"half", "unit"}));
  add_output(spin, "csv");

  auto* fig3 = app.add_subcommand("repro-fig3", "Exponential fits of 1 - a_0^(l) for several d_S");
  fig3->add_option("--d-list", d_list_s, "System dimensions, comma separated");
  auto* lmin = fig3->add_option("--l-min", f3.l_min, "Smallest l_cg (with --grid odd|all)");
  auto* lmax = fig3->add_option("--l-max", f3.l_max, "Largest l_cg (with --grid odd|all)");
  fig3->add_option("--grid", grid, "default, odd or all")
      ->check(CLI::IsMember({"default", "odd", "all"}));
  add_output(fig3, "csv");

  auto* fig4 = app.add_subcommand("repro-fig4", "Spin-star sweep against coarse-grained bounds");
  fig4->add_option("--n-total", sp.n_total, "Total number of pointers");
  fig4->add_option("--lcg-list", lcg_list_s, "Macrofraction sizes");
  fig4->add_option("--beta", sp.beta, "Inverse temperature");
  fig4->add_option("--p0", sp.p0, "Prior of the central spin being 0");
  fig4->add_option("--g", sp.g, "Coupling");
  fig4->add_option("--t-max", sp.t_max, "Largest time");
  fig4->add_option("--t-steps", sp.t_steps, "Number of time points");
  fig4->add_option("--pointer-h", pointer_h, "half or unit")->check(CLI::IsMember({"half", "unit"}));
  add_output(fig4, "csv");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    const auto subs = app.get_subcommands();
    throw HelpRequested{subs.empty() ? app.help() : subs.front()->help()};
  } catch (const CLI::CallForAllHelp&) {
    throw HelpRequested{app.help("", CLI::AppFormatMode::All)};
  } catch (const CLI::ParseError& e) {
    throw ConfigError(e.what());
  }

  using checks::require;
  const auto* chosen = app.get_subcommands().front();
  cfg.command = chosen->get_name();
  const bool json_default =
      cfg.command == "bounds" || cfg.command == "partition" || cfg.command == "fit" ||
      cfg.command == "oracle";
  cfg.format = format.empty() ? (json_default ? Format::Json : Format::Csv)
                              : (format == "json" ? Format::Json : Format::Csv);

  if (cfg.command == "bounds") {
    bp.a = parse_list<double>(a_s, "--a");
    bp.p = parse_list<double>(p_s, "--p");
    require(bp.n >= 1, "--n: must be >= 1");
    require(bp.a.size() == bp.p.size(), "--a and --p must have the same length");
    AVector::validate(bp.a);
    ProbVector::validate(bp.p);
    cfg.params = bp;
  } else if (cfg.command == "partition") {
    require(!energies_s.empty() || !energies_file.empty(),
            "partition: one of --energies or --energies-file is required");
    pp.energies = energies_s.empty() ? read_column(energies_file)
                                     : parse_list<double>(energies_s, "--energies");
    pp.dims = parse_list<int>(dims_s, "--dims");
    require(pp.beta >= 0.0 && std::isfinite(pp.beta), "--beta: must be finite and >= 0");
    cfg.params = pp;
  } else if (cfg.command == "coarsegrain") {
    cp.a = parse_list<double>(a_s, "--a");
    if (lcg_max > 0) {
      for (int l = 1; l <= lcg_max; ++l) cp.lcg.push_back(l);
    } else {
      require(!lcg_s.empty(), "coarsegrain: one of --lcg or --lcg-max is required");
      cp.lcg = parse_list<int>(lcg_s, "--lcg");
    }
    for (int l : cp.lcg) require(l >= 1, "--lcg: every entry must be >= 1");
    if (p_s.empty()) {
      cp.p.assign(cp.a.size(), 1.0 / static_cast<double>(cp.a.size()));
    } else {
      cp.p = parse_list<double>(p_s, "--p");
    }
    require(cp.n >= 1, "--n: must be >= 1");
    require(cp.a.size() == cp.p.size(), "--a and --p must have the same length");
    AVector::validate(cp.a);
    ProbVector::validate(cp.p);
    cfg.params = cp;
  } else if (cfg.command == "fit") {
    cfg.params = fp;
  } else if (cfg.command == "oracle") {
    op.energies = parse_list<double>(energies_s, "--energies");
    op.p = parse_list<double>(p_s, "--p");
    require(op.d_s >= 1, "--d-s: must be >= 1");
    require(static_cast<int>(op.p.size()) == op.d_s, "--p must have d_s entries");
    require(op.n >= 1, "--n: must be >= 1");
    require(static_cast<int>(op.energies.size()) % op.d_s == 0,
            "--energies: count must be a multiple of d_s");
    ProbVector::validate(op.p);
    cfg.params = op;
  } else if (cfg.command == "spinstar" || cfg.command == "repro-fig4") {
    sp.pointer_h = pointer_h == "unit" ? PointerHamiltonian::Unit : PointerHamiltonian::Half;
    if (cfg.command == "repro-fig4") {
      sp.sweep = true;
      sp.lcg = lcg_list_s.empty() ? std::vector<int>{1, 2, 4, 8, 16, 32, 64}
                                  : parse_list<int>(lcg_list_s, "--lcg-list");
    } else if (!lcg_list_s.empty()) {
      sp.sweep = true;
      sp.lcg = parse_list<int>(lcg_list_s, "--lcg-list");
    } else {
      sp.lcg = lcg_s.empty() ? std::vector<int>{1} : parse_list<int>(lcg_s, "--lcg");
      require(sp.lcg.size() == 1, "--lcg takes one value; use --lcg-list for a sweep");
    }
    require(sp.n_total >= 1, "--n-total: must be >= 1");
    for (int l : sp.lcg) {
      require(l >= 1 && l <= kMaxMacrofraction,
              detail::concat("--lcg: ", l, " is outside 1 … ", kMaxMacrofraction));
      require(sp.n_total % l == 0,
              detail::concat("--lcg: ", l, " does not divide --n-total ", sp.n_total));
    }
    require(sp.beta >= 0.0 && std::isfinite(sp.beta), "--beta: must be finite and >= 0");
    require(sp.p0 >= 0.0 && sp.p0 <= 1.0, "--p0: must lie in [0, 1]");
    require(std::isfinite(sp.g), "--g: must be finite");
    require(sp.t_max > 0.0 && std::isfinite(sp.t_max), "--t-max: must be > 0");
    require(sp.t_steps >= 1, "--t-steps: must be >= 1");
    cfg.params = sp;
  } else if (cfg.command == "repro-fig3") {
    if (!d_list_s.empty()) f3.d_list = parse_list<int>(d_list_s, "--d-list");
    for (int d : f3.d_list) require(d >= 2 && d <= 6, "--d-list: entries must lie in 2 … 6");
    f3.grid = grid == "odd" ? Fig3Grid::Odd : grid == "all" ? Fig3Grid::All : Fig3Grid::Default;
    require(f3.grid != Fig3Grid::Default || (lmin->count() == 0 && lmax->count() == 0),
            "--l-min/--l-max: need --grid odd or --grid all");
    require(f3.l_min >= 1 && f3.l_max > f3.l_min, "--l-min/--l-max: need 1 <= l_min < l_max");
    require(f3.l_max <= 160, "--l-max: at most 160");
    cfg.params = f3;
  }
  return cfg;
}

inline RunConfig parse_config(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return parse_config(args);
}

// ---------------------------------------------------------------------------
// Commands.

inline nlohmann::json bounds_json(const BoundReport& r) {
  nlohmann::json j;
  j["gamma"] = r.gamma;
  j["delta"] = r.delta;
  j["mstar"] = r.mstar ? nlohmann::json(r.mstar->values()) : nlohmann::json(nullptr);
  j["bias"] = r.bias;
  j["local_probs"] = r.local_probs.values();
  return j;
}

/// a_d = {1/d + 0.1, rest uniform}.
inline AVector fig3_avector(int d) {
  std::vector<double> a(static_cast<std::size_t>(d), 1.0 / d - 0.1 / (d - 1));
  a[0] = 1.0 / d + 0.1;
  return AVector::validate(std::move(a));
}

inline std::vector<int> fig3_grid(const Fig3Params& p, int d) {
  int lo = p.l_min;
  int hi = p.l_max;
  bool odd = p.grid == Fig3Grid::Odd;
  if (p.grid == Fig3Grid::Default) {
    odd = d == 2;
    lo = odd ? 3 : 2;
    hi = odd ? 121 : 60;
  }
  std::vector<int> ls;
  for (int l = lo; l <= hi; ++l) {
    if (!odd || l % 2 == 1) ls.push_back(l);
  }
  return ls;
}

inline FitResult fig3_fit(int d, const std::vector<int>& ls) {
  const AVector a = fig3_avector(d);
  const ProbVector flat = ProbVector::from(AVector::validate(
      std::vector<double>(static_cast<std::size_t>(d), 1.0 / d)));
  const auto res = cg_sweep(a, ls, 1, flat);
  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto& r : res) {
    xs.push_back(r.l_cg);
    ys.push_back(r.one_minus_a0);
  }
  return fit_exponential(xs, ys);
}

inline Table sweep_table(const std::vector<SweepRow>& rows) {
  Table t{{"l_cg", "min_dis_model", "bound_dis", "min_bias_model", "bound_bias"}, {}};
  for (const auto& r : rows) {
    t.rows.push_back({static_cast<long long>(r.l_cg), r.model.min_disagreement, r.bound_dis,
                      r.model.min_bias, r.bound_bias});
  }
  return t;
}

inline void execute(const RunConfig& cfg, std::ostream& out = std::cout) {
  if (const auto* p = std::get_if<BoundsParams>(&cfg.params)) {
    const BoundReport r = bound_report(AVector::validate(p->a), p->n, ProbVector::validate(p->p));
    if (cfg.format == Format::Json) {
      emit(bounds_json(r), cfg, out);
    } else {
      Table t{{"gamma", "delta", "bias"}, {{r.gamma, r.delta, r.bias}}};
      for (std::size_t x = 0; x < r.local_probs.size(); ++x) {
        t.header.push_back("local_p" + std::to_string(x));
        t.rows[0].push_back(r.local_probs[x]);
      }
      if (r.mstar) {
        for (std::size_t x = 0; x < r.mstar->size(); ++x) {
          t.header.push_back("mstar" + std::to_string(x));
          t.rows[0].push_back((*r.mstar)[x]);
        }
      }
      emit(t, cfg, out);
    }
  } else if (const auto* p = std::get_if<PartitionParams>(&cfg.params)) {
    const Partition part = partition_pointer({p->energies, p->beta, p->dims}, p->renormalize);
    if (cfg.format == Format::Json) {
      nlohmann::json j;
      j["assignment"] = part.assignment;
      j["traces"] = part.traces;
      j["residual"] = part.residual;
      j["renormalized"] = part.renormalized;
      emit(j, cfg, out);
    } else {
      Table t{{"outcome", "dim", "trace"}, {}};
      for (std::size_t x = 0; x < part.outcomes(); ++x) {
        t.rows.push_back({static_cast<long long>(x), static_cast<long long>(part.assignment[x].size()),
                          part.traces[x]});
      }
      emit(t, cfg, out);
    }
  } else if (const auto* p = std::get_if<CoarsegrainParams>(&cfg.params)) {
    const auto res = cg_sweep(AVector::validate(p->a), p->lcg, p->n, ProbVector::validate(p->p));
    Table t{{"l_cg", "a0_cg", "gamma_cg", "one_minus_a0", "bias_cg"}, {}};
    for (const auto& r : res) {
      t.rows.push_back({static_cast<long long>(r.l_cg), r.avector_cg[0], r.gamma_cg,
                        r.one_minus_a0, r.bias_cg});
    }
    emit(t, cfg, out);
  } else if (const auto* p = std::get_if<FitParams>(&cfg.params)) {
    const XY xy = read_xy_csv(p->input, p->x_column, p->y_column);
    const FitResult f = fit_exponential(xy.x, xy.y, p->skip_first);
    if (cfg.format == Format::Json) {
      emit(nlohmann::json{{"c0", f.c0}, {"c1", f.c1}, {"r_squared", f.r_squared},
                          {"n_points", f.n_points}},
           cfg, out);
    } else {
      emit(Table{{"c0", "c1", "r_squared", "n_points"},
                 {{f.c0, f.c1, f.r_squared, static_cast<long long>(f.n_points)}}},
           cfg, out);
    }
  } else if (const auto* p = std::get_if<OracleParams>(&cfg.params)) {
    const ProbVector w = boltzmann_weights(p->energies, p->beta);
    const std::vector<int> dims(static_cast<std::size_t>(p->d_s),
                                static_cast<int>(p->energies.size()) / p->d_s);
    const Partition part = greedy_partition(w, dims);
    const ProbVector ps = ProbVector::validate(p->p);
    const BroadcastStats st = broadcast_statistics(ps, w, part, p->n);
    const BoundReport br = bound_report(part.avector(), p->n, ps);
    double diff = std::max(std::abs(st.agreement - br.gamma), std::abs(st.bias - br.bias));
    for (const auto& lp : st.local_probs) {
      for (std::size_t x = 0; x < lp.size(); ++x) {
        diff = std::max(diff, std::abs(lp[x] - br.local_probs[x]));
      }
    }
    nlohmann::json j;
    j["gamma_dense"] = st.agreement;
    j["gamma_formula"] = br.gamma;
    j["local_probs"] = st.local_probs.front().values();
    j["bias_dense"] = st.bias;
    j["bias_formula"] = br.bias;
    j["max_abs_diff"] = diff;
    emit(j, cfg, out);
  } else if (const auto* p = std::get_if<SpinstarParams>(&cfg.params)) {
    const PointerThermal pt = thermal_pointer(p->beta, p->pointer_h);
    const auto grid = default_time_grid(p->t_max, p->t_steps);
    if (p->sweep) {
      emit(sweep_table(lcg_sweep(pt, p->n_total, p->p0, p->g, grid, p->lcg)), cfg, out);
    } else {
      const SpinStarModel model(pt, p->lcg.front(), p->g);
      const auto recs = time_scan(model, p->n_total, p->p0, grid);
      Table t{{"t", "l_cg", "p_correct_0", "p_correct_1", "p_out_0", "agreement", "bias"}, {}};
      for (const auto& r : recs) {
        t.rows.push_back({r.t, static_cast<long long>(r.l_cg), r.p_correct_0, r.p_correct_1,
                          r.p_out[0], r.agreement, r.bias});
      }
      if (model.underflow_count() > 0) {
        std::cerr << "note: " << model.underflow_count()
                  << " block entries below 1e-300 were flushed to zero\n";
      }
      emit(t, cfg, out);
    }
  } else if (const auto* p = std::get_if<Fig3Params>(&cfg.params)) {
    Table t{{"d_s", "c0", "c1", "r_squared", "n_points"}, {}};
    for (int d : p->d_list) {
      const FitResult f = fig3_fit(d, fig3_grid(*p, d));
      t.rows.push_back({static_cast<long long>(d), f.c0, f.c1, f.r_squared,
                        static_cast<long long>(f.n_points)});
    }
    emit(t, cfg, out);
  }
}

/// Full entry point: parse, run, map errors to exit codes.
inline int main(int argc, const char* const* argv, std::ostream& out = std::cout,
                std::ostream& err = std::cerr) {
  try {
    execute(parse_config(argc, argv), out);
    return 0;
  } catch (const HelpRequested& h) {
    out << h.text;
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace intersub::cli
