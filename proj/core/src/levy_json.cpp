#include "gfpeel/levy_json.hpp"

#include <cmath>

#include "gfpeel/errors.hpp"

namespace gfpeel {

namespace {

using json = nlohmann::json;

double number_field(const json& j, const std::string& key, const std::string& path) {
  if (!j.contains(key)) throw SchemaError(path + "." + key, "missing required field");
  const json& v = j.at(key);
  if (!v.is_number()) throw SchemaError(path + "." + key, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw SchemaError(path + "." + key, "must be finite");
  return x;
}

std::vector<Atom> atoms_from_json(const json& j, const std::string& path) {
  if (!j.is_array()) throw SchemaError(path, "expected an array of atoms");
  std::vector<Atom> atoms;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string p = path + "[" + std::to_string(i) + "]";
    if (!j[i].is_object()) throw SchemaError(p, "expected an object");
    Atom a{number_field(j[i], "position", p), number_field(j[i], "mass", p)};
    if (a.mass < 0.0) throw SchemaError(p + ".mass", "must be non-negative");
    if (a.position == 0.0) throw SchemaError(p + ".position", "atoms at 0 are not allowed");
    atoms.push_back(a);
  }
  return atoms;
}

}  // namespace

json measure_to_json(const LevyMeasure& m) {
  if (m.descriptor.empty())
    throw SchemaError("measure", "this measure has no serializable description");
  return json::parse(m.descriptor);
}

LevyMeasure measure_from_json(const json& j, const std::string& path) {
  if (!j.is_object()) throw SchemaError(path, "expected an object");
  if (!j.contains("kind") || !j["kind"].is_string())
    throw SchemaError(path + ".kind", "expected \"atoms\" or \"density\"");
  const std::string kind = j["kind"].get<std::string>();
  if (kind == "atoms") {
    if (!j.contains("atoms")) throw SchemaError(path + ".atoms", "missing required field");
    return atomic_measure(atoms_from_json(j["atoms"], path + ".atoms"));
  }
  if (kind != "density") throw SchemaError(path + ".kind", "unknown kind '" + kind + "'");
  if (!j.contains("family") || !j["family"].is_string())
    throw SchemaError(path + ".family", "expected \"stable_theta\" or \"shifted\"");
  const std::string family = j["family"].get<std::string>();
  if (family == "stable_theta") {
    const double theta = number_field(j, "theta", path);
    if (!(theta > 0.5 && theta <= 1.5)) throw SchemaError(path + ".theta", "must lie in (1/2, 3/2]");
    LevyMeasure m = stable_theta_measure(theta);
    if (j.contains("atoms")) {
      m.atoms = atoms_from_json(j["atoms"], path + ".atoms");
      m.descriptor = j.dump();
    }
    return m;
  }
  if (family == "shifted") {
    const double omega = number_field(j, "omega", path);
    if (!j.contains("base")) throw SchemaError(path + ".base", "missing required field");
    return shifted_measure(measure_from_json(j["base"], path + ".base"), omega);
  }
  throw SchemaError(path + ".family", "unknown family '" + family + "'");
}

json characteristics_to_json(const LevyCharacteristics& chars) {
  return json{{"sigma2", chars.sigma2},
              {"b", chars.b},
              {"killing", chars.killing},
              {"alpha", chars.alpha},
              {"compensation",
               chars.compensation == Compensation::exponential ? "exponential" : "truncated"},
              {"measure", measure_to_json(chars.measure)}};
}

LevyCharacteristics characteristics_from_json(const json& j) {
  if (!j.is_object()) throw SchemaError("characteristics", "expected an object");
  LevyCharacteristics c;
  c.sigma2 = number_field(j, "sigma2", "characteristics");
  c.b = number_field(j, "b", "characteristics");
  c.killing = number_field(j, "killing", "characteristics");
  c.alpha = number_field(j, "alpha", "characteristics");
  if (c.sigma2 < 0.0) throw SchemaError("characteristics.sigma2", "must be non-negative");
  if (c.killing < 0.0) throw SchemaError("characteristics.killing", "must be non-negative");
  if (j.contains("compensation")) {
    const json& comp = j["compensation"];
    if (comp == "exponential")
      c.compensation = Compensation::exponential;
    else if (comp == "truncated")
      c.compensation = Compensation::truncated;
    else
      throw SchemaError("characteristics.compensation", "expected \"exponential\" or \"truncated\"");
  }
  if (!j.contains("measure")) throw SchemaError("characteristics.measure", "missing required field");
  c.measure = measure_from_json(j["measure"], "characteristics.measure");
  try {
    validate(c);
  } catch (const DomainError& e) {
    throw SchemaError("characteristics", e.what());
  }
  return c;
}

}  // namespace gfpeel
