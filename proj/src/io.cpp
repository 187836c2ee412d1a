#include "pmsim/io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <fstream>
#include <limits>
#include <sstream>

#include "json_util.hpp"
#include "pmsim/errors.hpp"

#ifndef PMSIM_VERSION
#define PMSIM_VERSION "0.0.0"
#endif

namespace pmsim {

using detail::json;
using detail::ObjectReader;

namespace {

std::string g17(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string method_name(PropagationMethod m) {
  switch (m) {
    case PropagationMethod::dense: return "dense";
    case PropagationMethod::apparatus_blocks: return "apparatus_blocks";
    case PropagationMethod::split_operator: return "split_operator";
  }
  return "dense";
}

PropagationMethod method_from(const std::string& s, const std::string& where) {
  if (s == "dense") return PropagationMethod::dense;
  if (s == "apparatus_blocks") return PropagationMethod::apparatus_blocks;
  if (s == "split_operator") return PropagationMethod::split_operator;
  throw ParseError(where, "unknown propagation method '" + s + "'");
}

json matrix_json(const CMatrix& m) {
  json re = json::array(), im = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json rr = json::array(), ri = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      rr.push_back(m(i, j).real());
      ri.push_back(m(i, j).imag());
    }
    re.push_back(rr);
    im.push_back(ri);
  }
  return json{{"real", re}, {"imag", im}};
}

CMatrix matrix_from(const json& j, const std::string& where) {
  ObjectReader r(j, where, nullptr);
  const json& re = r.raw("real");
  const json& im = r.raw("imag");
  r.finish();
  if (!re.is_array() || !im.is_array() || re.size() != im.size() || re.empty()) {
    throw ParseError(where, "expected matching square real and imag arrays");
  }
  const auto n = static_cast<Eigen::Index>(re.size());
  CMatrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const json& a = re[static_cast<std::size_t>(i)];
    const json& b = im[static_cast<std::size_t>(i)];
    if (!a.is_array() || !b.is_array() || a.size() != re.size() || b.size() != re.size()) {
      throw ParseError(where, "expected matching square real and imag arrays");
    }
    for (Eigen::Index k = 0; k < n; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      if (!a[kk].is_number() || !b[kk].is_number()) throw ParseError(where, "expected numbers");
      m(i, k) = cplx(a[kk].get<double>(), b[kk].get<double>());
    }
  }
  return m;
}

json run_json(const RunResult& r) {
  json j;
  j["mode"] = to_string(r.mode);
  j["T"] = r.T;
  j["r0"] = r.r0;
  j["initial_centroid"] = r.initial_centroid;
  j["pointer_centroid"] = r.pointer_centroid;
  j["pointer_width"] = r.pointer_width;
  j["predicted_shift"] = r.predicted_shift;
  json rho = matrix_json(r.reduced_system_state.matrix());
  rho["dims"] = r.reduced_system_state.dims();
  j["reduced_system_state"] = rho;
  j["disturbance"] = r.disturbance;
  j["entanglement_entropy"] = r.entanglement_entropy;
  j["validity"] = r.validity;
  j["validity_flag"] = r.validity_flag;
  j["report"] = json{{"n_steps", r.report.n_steps},
                     {"step_size", r.report.step_size},
                     {"richardson_error_estimate", r.report.richardson_error_estimate},
                     {"norm_drift", r.report.norm_drift},
                     {"method", method_name(r.report.method)}};
  j["seed"] = r.seed;
  return j;
}

bool boolean(ObjectReader& r, const std::string& key) {
  const json& v = r.raw(key);
  if (!v.is_boolean()) throw ParseError(r.where(key), "expected a boolean");
  return v.get<bool>();
}

RunResult run_from(const json& j, const std::string& path) {
  ObjectReader r(j, path, nullptr);
  RunResult out;
  try {
    out.mode = mode_from_string(r.string("mode"));
  } catch (const ValidationError& e) {
    throw ParseError(r.where("mode"), e.what());
  }
  out.T = r.number("T");
  out.r0 = r.number("r0");
  out.initial_centroid = r.number("initial_centroid");
  out.pointer_centroid = r.number("pointer_centroid");
  out.pointer_width = r.number("pointer_width");
  out.predicted_shift = r.number("predicted_shift");
  {
    const std::string where = r.where("reduced_system_state");
    json rho = r.raw("reduced_system_state");
    if (!rho.is_object() || !rho.contains("dims")) throw ParseError(where, "missing dims");
    const std::vector<std::size_t> dims = rho.at("dims").get<std::vector<std::size_t>>();
    rho.erase("dims");
    out.reduced_system_state = DensityOperator(matrix_from(rho, where), dims);
  }
  out.disturbance = r.number("disturbance");
  out.entanglement_entropy = r.number("entanglement_entropy");
  out.validity = r.number("validity");
  out.validity_flag = boolean(r, "validity_flag");
  {
    ObjectReader rep(r.raw("report"), r.where("report"), nullptr);
    out.report.n_steps = static_cast<long>(rep.integer("n_steps"));
    out.report.step_size = rep.number("step_size");
    out.report.richardson_error_estimate = rep.number("richardson_error_estimate");
    out.report.norm_drift = rep.number("norm_drift");
    out.report.method = method_from(rep.string("method"), rep.where("method"));
    rep.finish();
  }
  out.seed = r.unsigned_integer("seed", 0);
  r.has("manifest");  // present in emitted result files
  r.finish();
  return out;
}

json manifest_json(const RunManifest& m) {
  json j;
  j["config"] = json::parse(config_to_json(m.config));
  j["code_version"] = m.code_version;
  j["seed"] = m.seed;
  j["started_utc"] = m.started_utc;
  j["finished_utc"] = m.finished_utc;
  j["outputs"] = m.outputs;
  return j;
}

json fit_json(const ScalingFit& f) {
  return json{{"slope", f.slope},
              {"intercept", f.intercept},
              {"r_squared", f.r_squared},
              {"window_begin", f.window_begin},
              {"window_end", f.window_end},
              {"max_residual", f.max_residual}};
}

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(what, std::string("malformed JSON: ") + e.what());
  }
}

std::string csv_row(double T, const RunResult& r) {
  const Discrepancy d = compare_to_prediction(r);
  std::string row = g17(T);
  for (double v : {r.pointer_centroid, r.predicted_shift, d.centroid_error, r.disturbance, r.entanglement_entropy,
                   r.validity}) {
    row += ',' + g17(v);
  }
  return row + ',' + std::to_string(r.report.n_steps) + '\n';
}

double parse_cell(const std::string& cell, std::size_t line) {
  if (cell == "nan") return std::numeric_limits<double>::quiet_NaN();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(cell.c_str(), &end);
  if (cell.empty() || end != cell.c_str() + cell.size() || (errno == ERANGE && std::isinf(v))) {
    throw ParseError("line " + std::to_string(line), "not a number: '" + cell + "'");
  }
  return v;
}

}  // namespace

std::string to_string(OutputFormat format) { return format == OutputFormat::csv ? "csv" : "json"; }

OutputFormat format_from_string(const std::string& name) {
  if (name == "csv") return OutputFormat::csv;
  if (name == "json") return OutputFormat::json;
  throw ValidationError("unknown output format '" + name + "' (expected csv or json)");
}

std::string code_version() { return PMSIM_VERSION; }

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string manifest_to_json(const RunManifest& manifest) { return manifest_json(manifest).dump(2) + "\n"; }

RunManifest manifest_from_json(const std::string& text) {
  const json j = parse_json(text, "manifest");
  ObjectReader r(j, "manifest", nullptr);
  RunManifest m;
  m.config = parse_config_text(r.raw("config").dump()).config;
  m.code_version = r.string("code_version");
  m.seed = r.unsigned_integer("seed", 0);
  m.started_utc = r.string("started_utc");
  m.finished_utc = r.string("finished_utc");
  const json& outputs = r.raw("outputs");
  if (!outputs.is_array()) throw ParseError(r.where("outputs"), "expected an array of strings");
  for (const auto& o : outputs) {
    if (!o.is_string()) throw ParseError(r.where("outputs"), "expected an array of strings");
    m.outputs.push_back(o.get<std::string>());
  }
  r.finish();
  return m;
}

std::string sweep_csv(const SweepResult& sweep) {
  std::string out = std::string(kCsvHeader) + '\n';
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    if (i < sweep.runs.size() && sweep.runs[i]) {
      out += csv_row(sweep.t_values[i], *sweep.runs[i]);
      continue;
    }
    std::string row = g17(sweep.t_values[i]);
    const bool have = i < sweep.disturbances.size();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (double v : {nan, nan, have ? sweep.centroid_errors[i] : nan, have ? sweep.disturbances[i] : nan,
                     have ? sweep.entropies[i] : nan, have ? sweep.validities[i] : nan}) {
      row += ',' + g17(v);
    }
    out += row + ',' + std::to_string(i < sweep.n_steps.size() ? sweep.n_steps[i] : 0) + '\n';
  }
  return out;
}

std::string run_csv(const RunResult& result) { return std::string(kCsvHeader) + '\n' + csv_row(result.T, result); }

SweepResult parse_sweep_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw ParseError("line 1", std::string("expected header '") + kCsvHeader + "'");
  }
  SweepResult s;
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() != 8) throw ParseError("line " + std::to_string(number), "expected 8 columns");
    s.t_values.push_back(parse_cell(cells[0], number));
    s.centroid_errors.push_back(parse_cell(cells[3], number));
    s.disturbances.push_back(parse_cell(cells[4], number));
    s.entropies.push_back(parse_cell(cells[5], number));
    s.validities.push_back(parse_cell(cells[6], number));
    s.n_steps.push_back(static_cast<long>(parse_cell(cells[7], number)));
    s.runs.emplace_back();
    s.errors.emplace_back(std::isnan(s.disturbances.back()) ? "failed" : "");
  }
  return s;
}

SweepResult read_sweep_csv(const std::filesystem::path& path) {
  try {
    return parse_sweep_csv(read_text_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.field(), e.what());
  }
}

std::string run_result_to_json(const RunResult& result) { return run_json(result).dump(2) + "\n"; }

RunResult run_result_from_json(const std::string& text) { return run_from(parse_json(text, "result"), ""); }

std::string cold_atom_result_to_json(const ColdAtomResult& r) {
  json j;
  j["level"] = to_string(r.level);
  j["b_gradient"] = r.b_gradient;
  j["momentum_shift"] = r.si.momentum_shift;
  j["momentum_spread"] = r.si.momentum_spread;
  j["shift_to_spread"] = r.si.shift_to_spread;
  j["final_width"] = r.si.final_width;
  j["drift_displacement"] = r.si.drift_displacement;
  j["visibility_warning"] = r.si.visibility_warning;
  j["grid_points"] = r.grid_points;
  j["warnings"] = r.warnings;
  j["run"] = r.run ? run_json(*r.run) : json(nullptr);
  return j.dump(2) + "\n";
}

std::string scaling_fit_to_json(const ScalingFit& fit) { return fit_json(fit).dump(2) + "\n"; }

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing: " + std::strerror(errno));
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.close();
  if (!out) throw IoError("error while writing " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string() + ": " + std::strerror(errno));
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("error while reading " + path.string());
  return buf.str();
}

namespace {

void prepare(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
}

RunManifest finish_manifest(const std::filesystem::path& dir, RunManifest manifest, const std::string& output) {
  manifest.outputs = {output, "manifest.json"};
  if (manifest.code_version.empty()) manifest.code_version = code_version();
  if (manifest.finished_utc.empty()) manifest.finished_utc = utc_timestamp();
  write_text_file(dir / "manifest.json", manifest_to_json(manifest));
  return manifest;
}

}  // namespace

RunManifest emit_results(const SweepResult& sweep, OutputFormat format, const std::filesystem::path& dir,
                         RunManifest manifest) {
  prepare(dir);
  if (format == OutputFormat::csv) {
    write_text_file(dir / "results.csv", sweep_csv(sweep));
    return finish_manifest(dir, std::move(manifest), "results.csv");
  }
  json points = json::array();
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    json p;
    p["T"] = sweep.t_values[i];
    p["result"] = (i < sweep.runs.size() && sweep.runs[i]) ? run_json(*sweep.runs[i]) : json(nullptr);
    p["error"] = i < sweep.errors.size() ? sweep.errors[i] : std::string();
    points.push_back(p);
  }
  json j;
  j["points"] = points;
  j["fit"] = sweep.fit ? fit_json(*sweep.fit) : json(nullptr);
  j["monotone_decreasing"] = sweep.monotone_decreasing;
  manifest.outputs = {"results.json", "manifest.json"};
  if (manifest.code_version.empty()) manifest.code_version = code_version();
  if (manifest.finished_utc.empty()) manifest.finished_utc = utc_timestamp();
  j["manifest"] = manifest_json(manifest);
  write_text_file(dir / "results.json", j.dump(2) + "\n");
  return finish_manifest(dir, std::move(manifest), "results.json");
}

RunManifest emit_results(const RunResult& result, OutputFormat format, const std::filesystem::path& dir,
                         RunManifest manifest) {
  prepare(dir);
  if (format == OutputFormat::csv) {
    write_text_file(dir / "results.csv", run_csv(result));
    return finish_manifest(dir, std::move(manifest), "results.csv");
  }
  manifest.outputs = {"results.json", "manifest.json"};
  if (manifest.code_version.empty()) manifest.code_version = code_version();
  if (manifest.finished_utc.empty()) manifest.finished_utc = utc_timestamp();
  json j = run_json(result);
  j["manifest"] = manifest_json(manifest);
  write_text_file(dir / "results.json", j.dump(2) + "\n");
  return finish_manifest(dir, std::move(manifest), "results.json");
}

RunManifest emit_results(const ColdAtomResult& result, const std::filesystem::path& dir, RunManifest manifest) {
  prepare(dir);
  write_text_file(dir / "coldatom.json", cold_atom_result_to_json(result));
  return finish_manifest(dir, std::move(manifest), "coldatom.json");
}

}  // namespace pmsim
