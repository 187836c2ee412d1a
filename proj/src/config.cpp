#include "pmsim/config.hpp"

#include <fstream>
#include <sstream>

#include "json_util.hpp"
#include "pmsim/errors.hpp"

namespace pmsim {

using detail::json;
using detail::ObjectReader;

namespace {

// ---------------------------------------------------------------------------
// Operators

std::vector<double> number_list(const json& v, const std::string& where) {
  if (!v.is_array()) throw ParseError(where, "expected an array of numbers");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) throw ParseError(where, "expected an array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

std::vector<std::vector<double>> number_rows(const json& v, const std::string& where) {
  if (!v.is_array()) throw ParseError(where, "expected an array of rows");
  std::vector<std::vector<double>> out;
  for (const auto& row : v) out.push_back(number_list(row, where));
  return out;
}

OperatorSpec parse_operator(const json& j, const std::string& path, std::vector<std::string>* defaults) {
  ObjectReader r(j, path, defaults);
  const std::string kind = r.string("kind");
  OperatorSpec spec;
  if (kind == "zero") {
    spec = op::Zero{};
  } else if (kind == "pauli") {
    const std::string axis = r.string("axis");
    if (axis.size() != 1 || std::string("ixyz").find(axis[0]) == std::string::npos) {
      throw ParseError(r.where("axis"), "expected one of i, x, y, z");
    }
    spec = op::Pauli{axis[0], r.number("scale", 1.0)};
  } else if (kind == "spin_axis") {
    const double theta = r.number("theta");
    const double phi = r.number("phi", 0.0);
    spec = op::SpinAxis{theta, phi, r.number("scale", 1.0)};
  } else if (kind == "diagonal") {
    spec = op::Diagonal{number_list(r.raw("values"), r.where("values"))};
  } else if (kind == "matrix") {
    op::Matrix m;
    m.real = number_rows(r.raw("real"), r.where("real"));
    if (r.has("imag")) m.imag = number_rows(r.raw("imag"), r.where("imag"));
    spec = m;
  } else if (kind == "grid_generator") {
    spec = op::GridGenerator{r.number("scale", 1.0)};
  } else if (kind == "free_particle") {
    const double mass = r.number("mass");
    if (!(mass > 0.0)) throw ParseError(r.where("mass"), "must be positive");
    spec = op::FreeParticle{mass};
  } else {
    throw ParseError(r.where("kind"), "unknown operator kind '" + kind + "'");
  }
  r.finish();
  return spec;
}

OperatorSpec operator_field(ObjectReader& r, const std::string& key, const OperatorSpec& fallback,
                            std::vector<std::string>* defaults) {
  if (!r.has(key)) {
    if (defaults) defaults->push_back(r.where(key) + " = " + "default operator");
    return fallback;
  }
  return parse_operator(r.raw(key), r.where(key), defaults);
}

struct OperatorWriter {
  json operator()(const op::Zero&) const { return json{{"kind", "zero"}}; }
  json operator()(const op::Pauli& p) const {
    return json{{"kind", "pauli"}, {"axis", std::string(1, p.axis)}, {"scale", p.scale}};
  }
  json operator()(const op::SpinAxis& s) const {
    return json{{"kind", "spin_axis"}, {"theta", s.theta}, {"phi", s.phi}, {"scale", s.scale}};
  }
  json operator()(const op::Diagonal& d) const { return json{{"kind", "diagonal"}, {"values", d.values}}; }
  json operator()(const op::Matrix& m) const {
    json j{{"kind", "matrix"}, {"real", m.real}};
    if (!m.imag.empty()) j["imag"] = m.imag;
    return j;
  }
  json operator()(const op::GridGenerator& g) const { return json{{"kind", "grid_generator"}, {"scale", g.scale}}; }
  json operator()(const op::FreeParticle& f) const { return json{{"kind", "free_particle"}, {"mass", f.mass}}; }
};

json write_operator(const OperatorSpec& spec) { return std::visit(OperatorWriter{}, spec); }

// ---------------------------------------------------------------------------
// Measurement configs

std::string shape_name(ProfileShape s) { return s == ProfileShape::rectangular ? "rectangular" : "sine_squared"; }

ProfileShape shape_from(const std::string& name, const std::string& where) {
  if (name == "rectangular") return ProfileShape::rectangular;
  if (name == "sine_squared") return ProfileShape::sine_squared_ramp;
  throw ParseError(where, "expected 'sine_squared' or 'rectangular'");
}

void check_packet(const MeasurementConfig& c) {
  if (c.mode == Mode::generalized) return;
  const PointerGrid grid(c.pointer.n_points, c.pointer.r_min, c.pointer.r_max);
  const double lo = 4.0 * grid.spacing();
  const double hi = grid.length() / 8.0;
  if (c.packet.sigma < lo || c.packet.sigma > hi) {
    std::ostringstream os;
    os << "packet.sigma = " << c.packet.sigma << " violates 4 * grid spacing <= sigma <= box length / 8, i.e. ["
       << lo << ", " << hi << "]";
    throw SizingError(os.str());
  }
}

MeasurementConfig parse_measurement(ObjectReader& root, std::vector<std::string>* d) {
  MeasurementConfig c;
  c.mode = [&] {
    const std::string m = root.string("mode", "protective");
    try {
      return mode_from_string(m);
    } catch (const ValidationError& e) {
      throw ParseError(root.where("mode"), e.what());
    }
  }();
  c.T = root.number("T", c.T);
  if (!(c.T > 0.0)) throw ParseError(root.where("T"), "must be positive");
  if (root.has("n_steps")) {
    const json& v = root.raw("n_steps");
    if (v.is_string() && v.get<std::string>() == "auto") {
      c.n_steps = 0;
    } else if (v.is_number_integer() && v.get<long long>() >= 16) {
      c.n_steps = v.get<long>();
    } else {
      throw ParseError(root.where("n_steps"), "expected \"auto\" or an integer >= 16");
    }
  } else if (d) {
    d->push_back("n_steps = \"auto\"");
  }
  c.tolerance = root.number("tolerance", c.tolerance);
  if (!(c.tolerance > 0.0)) throw ParseError(root.where("tolerance"), "must be positive");
  c.rng_seed = root.unsigned_integer("rng_seed", 0);

  if (root.has("profile")) {
    ObjectReader r(root.raw("profile"), "profile", d);
    c.profile.shape = shape_from(r.string("shape", "sine_squared"), r.where("shape"));
    c.profile.ramp_fraction = r.number("ramp_fraction", 0.1);
    r.finish();
    if (c.profile.shape == ProfileShape::sine_squared_ramp &&
        !(c.profile.ramp_fraction > 0.0 && c.profile.ramp_fraction < 0.5)) {
      throw ParseError("profile.ramp_fraction", "must lie in (0, 0.5)");
    }
  } else if (d) {
    d->push_back("profile = sine_squared, ramp_fraction 0.1");
  }

  if (root.has("pointer")) {
    ObjectReader r(root.raw("pointer"), "pointer", d);
    const long long n = r.integer("n_points", 256);
    if (n < 4 || (n & (n - 1)) != 0) throw ParseError(r.where("n_points"), "must be a power of two >= 4");
    c.pointer.n_points = static_cast<std::size_t>(n);
    c.pointer.r_min = r.number("r_min", -20.0);
    c.pointer.r_max = r.number("r_max", 20.0);
    r.finish();
    if (!(c.pointer.r_max > c.pointer.r_min)) throw ParseError("pointer.r_max", "must exceed pointer.r_min");
  } else if (d) {
    d->push_back("pointer = 256 points on [-20, 20)");
  }

  if (root.has("packet")) {
    ObjectReader r(root.raw("packet"), "packet", d);
    c.packet.r0 = r.number("r0", 0.0);
    c.packet.sigma = r.number("sigma", 1.0);
    r.finish();
  } else if (d) {
    d->push_back("packet = r0 0, sigma 1");
  }

  {
    ObjectReader r(root.raw("system"), "system", d);
    const long long dim = r.integer("dim", 2);
    if (dim < 2) throw ParseError(r.where("dim"), "must be at least 2");
    c.system_dim = static_cast<std::size_t>(dim);
    c.h_system = operator_field(r, "H", op::Zero{}, d);
    c.q_system = operator_field(r, "Q", op::Pauli{'z', 1.0}, d);
    const long long nu = r.integer("nu_index", 0);
    if (nu < 0 || nu >= dim) throw ParseError(r.where("nu_index"), "out of range");
    c.nu_index = static_cast<std::size_t>(nu);
    if (r.has("initial_state")) {
      const json& v = r.raw("initial_state");
      if (!v.is_array()) throw ParseError(r.where("initial_state"), "expected [[re, im], ...]");
      std::vector<cplx> amps;
      for (const auto& a : v) {
        if (!a.is_array() || a.size() != 2 || !a[0].is_number() || !a[1].is_number()) {
          throw ParseError(r.where("initial_state"), "expected [[re, im], ...]");
        }
        amps.emplace_back(a[0].get<double>(), a[1].get<double>());
      }
      c.initial_system = amps;
    }
    r.finish();
  }

  if (root.has("apparatus")) {
    ObjectReader r(root.raw("apparatus"), "apparatus", d);
    c.apparatus_dim = static_cast<std::size_t>(r.integer("dim", 0));
    c.h_apparatus = operator_field(r, "H", op::Zero{}, d);
    c.q_apparatus = operator_field(r, "Q", op::GridGenerator{}, d);
    r.finish();
  } else if (d) {
    d->push_back("apparatus = H zero, Q grid translation generator");
  }

  // Build every operator once so that shape errors name their field.
  try {
    if (c.mode == Mode::generalized) {
      const std::size_t da = c.apparatus_dim != 0 ? c.apparatus_dim : c.pointer.n_points;
      std::optional<PointerGrid> grid;
      if (c.pointer.n_points == da) grid.emplace(da, c.pointer.r_min, c.pointer.r_max);
      build_operator(c.h_apparatus, da, grid ? &*grid : nullptr, "apparatus.H");
      build_operator(c.q_apparatus, da, grid ? &*grid : nullptr, "apparatus.Q");
    } else {
      if (c.apparatus_dim != 0 && c.apparatus_dim != c.pointer.n_points) {
        throw ValidationError("apparatus.dim must equal pointer.n_points outside generalized mode");
      }
      const PointerGrid grid(c.pointer.n_points, c.pointer.r_min, c.pointer.r_max);
      build_operator(c.h_apparatus, grid.n_points(), &grid, "apparatus.H");
      build_operator(c.q_apparatus, grid.n_points(), &grid, "apparatus.Q");
    }
    build_operator(c.h_system, c.system_dim, nullptr, "system.H");
    build_operator(c.q_system, c.system_dim, nullptr, "system.Q");
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    const auto colon = msg.find(": ");
    if (colon != std::string::npos) throw ParseError(msg.substr(0, colon), msg.substr(colon + 2));
    throw ParseError("config", msg);
  }
  if (c.initial_system && c.initial_system->size() != c.system_dim) {
    throw ParseError("system.initial_state", "needs system.dim amplitudes");
  }
  check_packet(c);
  return c;
}

json write_measurement(const MeasurementConfig& c) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "measurement";
  j["mode"] = to_string(c.mode);
  j["T"] = c.T;
  if (c.n_steps == 0) {
    j["n_steps"] = "auto";
  } else {
    j["n_steps"] = c.n_steps;
  }
  j["tolerance"] = c.tolerance;
  j["rng_seed"] = c.rng_seed;
  j["profile"] = json{{"shape", shape_name(c.profile.shape)}, {"ramp_fraction", c.profile.ramp_fraction}};
  j["pointer"] = json{{"n_points", c.pointer.n_points}, {"r_min", c.pointer.r_min}, {"r_max", c.pointer.r_max}};
  j["packet"] = json{{"r0", c.packet.r0}, {"sigma", c.packet.sigma}};
  json sys{{"dim", c.system_dim}, {"H", write_operator(c.h_system)}, {"Q", write_operator(c.q_system)},
           {"nu_index", c.nu_index}};
  if (c.initial_system) {
    json amps = json::array();
    for (const cplx& a : *c.initial_system) amps.push_back(json::array({a.real(), a.imag()}));
    sys["initial_state"] = amps;
  }
  j["system"] = sys;
  j["apparatus"] = json{{"dim", c.apparatus_dim}, {"H", write_operator(c.h_apparatus)}, {"Q", write_operator(c.q_apparatus)}};
  return j;
}

// ---------------------------------------------------------------------------
// Cold-atom parameters

Vec3 vec3(ObjectReader& r, const std::string& key, const Vec3& fallback, std::vector<std::string>* d) {
  if (!r.has(key)) {
    if (d) d->push_back(r.where(key) + " = " + json(fallback).dump());
    return fallback;
  }
  const std::vector<double> v = number_list(r.raw(key), r.where(key));
  if (v.size() != 3) throw ParseError(r.where(key), "expected three components");
  return {v[0], v[1], v[2]};
}

ColdAtomParams parse_cold_atom(ObjectReader& r, std::vector<std::string>* d) {
  ColdAtomParams p;
  p.mass = r.number("mass", p.mass);
  p.magnetic_moment = r.number("magnetic_moment", p.magnetic_moment);
  p.b0 = r.number("b0", p.b0);
  if (r.has("b_gradient")) {
    p.b_gradient = r.number("b_gradient");
  }
  p.n0 = vec3(r, "n0", p.n0, d);
  p.n = vec3(r, "n", p.n, d);
  p.packet_width = r.number("packet_width", p.packet_width);
  p.interaction_length = r.number("interaction_length", p.interaction_length);
  p.velocity = r.number("velocity", p.velocity);
  p.drift_time = r.number("drift_time", p.drift_time);
  p.calibration_displacement = r.number("calibration_displacement", p.calibration_displacement);
  p.tolerance = r.number("tolerance", p.tolerance);
  try {
    validate(p);
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    throw ParseError(msg.substr(0, msg.find(' ')), msg);
  }
  if (!p.b_gradient && d) {
    std::ostringstream os;
    os.precision(17);
    os << "b_gradient = " << calibrated_gradient(p) << " (calibrated from calibration_displacement)";
    d->push_back(os.str());
  }
  cold_atom_grid(p);
  return p;
}

json write_cold_atom(const ColdAtomParams& p) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "cold_atom";
  j["mass"] = p.mass;
  j["magnetic_moment"] = p.magnetic_moment;
  j["b0"] = p.b0;
  if (p.b_gradient) j["b_gradient"] = *p.b_gradient;
  j["n0"] = p.n0;
  j["n"] = p.n;
  j["packet_width"] = p.packet_width;
  j["interaction_length"] = p.interaction_length;
  j["velocity"] = p.velocity;
  j["drift_time"] = p.drift_time;
  j["calibration_displacement"] = p.calibration_displacement;
  j["tolerance"] = p.tolerance;
  return j;
}

}  // namespace

ParsedConfig parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("<document>", std::string("malformed JSON: ") + e.what());
  }
  ParsedConfig out{MeasurementConfig{}, {}};
  ObjectReader root(j, "", &out.defaults);
  const long long version = root.integer("schema_version");
  if (version != kSchemaVersion) {
    throw ParseError("schema_version", "unsupported version " + std::to_string(version) + ", expected " +
                                           std::to_string(kSchemaVersion));
  }
  const std::string kind = root.string("kind");
  if (kind == "measurement") {
    out.config = parse_measurement(root, &out.defaults);
  } else if (kind == "cold_atom") {
    out.config = parse_cold_atom(root, &out.defaults);
  } else {
    throw ParseError("kind", "expected 'measurement' or 'cold_atom', got '" + kind + "'");
  }
  root.finish();
  return out;
}

ParsedConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("error while reading config file " + path.string());
  return parse_config_text(buf.str());
}

std::string config_to_json(const AnyConfig& config) {
  const json j = std::holds_alternative<MeasurementConfig>(config)
                     ? write_measurement(std::get<MeasurementConfig>(config))
                     : write_cold_atom(std::get<ColdAtomParams>(config));
  return j.dump(2) + "\n";
}

}  // namespace pmsim
