#include "iidetect/serialize.hpp"

#include <fstream>
#include <string>

#include "iidetect/error.hpp"

namespace iidetect {

namespace {

const json& field(const json& j, const char* name) {
  if (!j.is_object() || !j.contains(name)) {
    throw Error(ErrorCode::kParseError, std::string("missing field '") + name + "'");
  }
  return j.at(name);
}

double number(const json& j, const char* name) {
  const json& v = field(j, name);
  if (!v.is_number()) throw Error(ErrorCode::kParseError, std::string(name) + " must be a number");
  return v.get<double>();
}

}  // namespace

json matrix_to_json(const Mat& M) {
  json rows = json::array();
  for (Index i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Mat matrix_from_json(const json& j, std::string_view name) {
  const auto fail = [&](const std::string& what) {
    throw Error(ErrorCode::kParseError, std::string(name) + ": " + what);
  };
  if (!j.is_array()) fail("matrix must be an array of rows");
  const Index rows = static_cast<Index>(j.size());
  if (rows == 0) return Mat(0, 0);
  if (!j[0].is_array()) fail("matrix rows must be arrays");
  const Index cols = static_cast<Index>(j[0].size());
  Mat M(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols) fail("ragged matrix");
    for (Index c = 0; c < cols; ++c) {
      const json& v = row[static_cast<std::size_t>(c)];
      if (!v.is_number()) fail("non-numeric entry");
      M(i, c) = v.get<double>();
    }
  }
  return M;
}

json vector_to_json(const Vec& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Vec vector_from_json(const json& j, std::string_view name) {
  if (!j.is_array()) throw Error(ErrorCode::kParseError, std::string(name) + ": expected array");
  Vec v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) {
      throw Error(ErrorCode::kParseError, std::string(name) + ": non-numeric entry");
    }
    v(static_cast<Index>(i)) = j[i].get<double>();
  }
  return v;
}

json to_json(const SystemModel& m) {
  return {{"A", matrix_to_json(m.A)},         {"B", matrix_to_json(m.B)},
          {"C", matrix_to_json(m.C)},         {"D", matrix_to_json(m.D)},
          {"F", matrix_to_json(m.F)},         {"Sigma_t", matrix_to_json(m.sigma_t)},
          {"Sigma_w", matrix_to_json(m.sigma_w)}, {"mu1", vector_to_json(m.mu1)},
          {"Sigma1", matrix_to_json(m.sigma1)}};
}

SystemModel model_from_json(const json& j) {
  SystemModel m;
  m.A = matrix_from_json(field(j, "A"), "A");
  m.B = matrix_from_json(field(j, "B"), "B");
  m.C = matrix_from_json(field(j, "C"), "C");
  m.D = matrix_from_json(field(j, "D"), "D");
  m.F = matrix_from_json(field(j, "F"), "F");
  m.sigma_t = matrix_from_json(field(j, "Sigma_t"), "Sigma_t");
  m.sigma_w = matrix_from_json(field(j, "Sigma_w"), "Sigma_w");
  m.mu1 = vector_from_json(field(j, "mu1"), "mu1");
  m.sigma1 = matrix_from_json(field(j, "Sigma1"), "Sigma1");
  m.validate();
  return m;
}

json to_json(const DetectorDesign& d) {
  return {{"L", matrix_to_json(d.L)},
          {"P", matrix_to_json(d.P)},
          {"Sigma", matrix_to_json(d.sigma)},
          {"Sigma_inv", matrix_to_json(d.sigma_inv)},
          {"alpha", d.alpha},
          {"A_star", d.a_star},
          {"n_y", d.n_y},
          {"dare_iterations", d.dare_iterations},
          {"dare_residual", d.dare_residual}};
}

DetectorDesign design_from_json(const json& j) {
  DetectorDesign d;
  d.L = matrix_from_json(field(j, "L"), "L");
  d.P = matrix_from_json(field(j, "P"), "P");
  d.sigma = matrix_from_json(field(j, "Sigma"), "Sigma");
  d.sigma_inv = matrix_from_json(field(j, "Sigma_inv"), "Sigma_inv");
  d.alpha = number(j, "alpha");
  d.a_star = number(j, "A_star");
  d.n_y = static_cast<Index>(number(j, "n_y"));
  d.dare_iterations = j.value("dare_iterations", std::size_t{0});
  d.dare_residual = j.value("dare_residual", 0.0);
  require_dims(d.sigma, d.n_y, d.n_y, "Sigma");
  require_dims(d.sigma_inv, d.n_y, d.n_y, "Sigma_inv");
  return d;
}

json to_json(const KeySet& k) {
  const auto noise = [](const NoiseParams& n) { return json{{"mean", n.mean}, {"std", n.stddev}}; };
  return {{"seed", k.seed},
          {"dims",
           {{"nx", k.dims.nx}, {"ny", k.dims.ny}, {"nu", k.dims.nu},
            {"nr", k.dims.nr}, {"nz", k.dims.nz}, {"na", k.dims.na}}},
          {"plant", {{"n_x", k.plant.n_x}, {"n_y", k.plant.n_y}, {"n_u", k.plant.n_u}}},
          {"Pi1", matrix_to_json(k.pi1)},
          {"Pi2", matrix_to_json(k.pi2)},
          {"Pi3", matrix_to_json(k.pi3)},
          {"Pi4", matrix_to_json(k.pi4)},
          {"Pi6", matrix_to_json(k.pi6)},
          {"Pi7", matrix_to_json(k.pi7)},
          {"Pi8", matrix_to_json(k.pi8)},
          {"Pi9", matrix_to_json(k.pi9)},
          {"Pi1L", matrix_to_json(k.pi1_left)},
          {"Pi2L", matrix_to_json(k.pi2_left)},
          {"Pi3L", matrix_to_json(k.pi3_left)},
          {"Pi4L", matrix_to_json(k.pi4_left)},
          {"Pi6L", matrix_to_json(k.pi6_left)},
          {"Pi7L", matrix_to_json(k.pi7_left)},
          {"N1", matrix_to_json(k.n1)},
          {"N2", matrix_to_json(k.n2)},
          {"noise_y", noise(k.noise_y)},
          {"noise_u", noise(k.noise_u)}};
}

KeySet key_from_json(const json& j) {
  KeySet k;
  k.seed = field(j, "seed").get<std::uint64_t>();
  const json& d = field(j, "dims");
  k.dims = {static_cast<Index>(number(d, "nx")), static_cast<Index>(number(d, "ny")),
            static_cast<Index>(number(d, "nu")), static_cast<Index>(number(d, "nr")),
            static_cast<Index>(number(d, "nz")), static_cast<Index>(number(d, "na"))};
  const json& p = field(j, "plant");
  k.plant = {static_cast<Index>(number(p, "n_x")), static_cast<Index>(number(p, "n_y")),
             static_cast<Index>(number(p, "n_u"))};
  k.pi1 = matrix_from_json(field(j, "Pi1"), "Pi1");
  k.pi2 = matrix_from_json(field(j, "Pi2"), "Pi2");
  k.pi3 = matrix_from_json(field(j, "Pi3"), "Pi3");
  k.pi4 = matrix_from_json(field(j, "Pi4"), "Pi4");
  k.pi6 = matrix_from_json(field(j, "Pi6"), "Pi6");
  k.pi7 = matrix_from_json(field(j, "Pi7"), "Pi7");
  k.pi8 = matrix_from_json(field(j, "Pi8"), "Pi8");
  k.pi9 = matrix_from_json(field(j, "Pi9"), "Pi9");
  k.pi1_left = matrix_from_json(field(j, "Pi1L"), "Pi1L");
  k.pi2_left = matrix_from_json(field(j, "Pi2L"), "Pi2L");
  k.pi3_left = matrix_from_json(field(j, "Pi3L"), "Pi3L");
  k.pi4_left = matrix_from_json(field(j, "Pi4L"), "Pi4L");
  k.pi6_left = matrix_from_json(field(j, "Pi6L"), "Pi6L");
  k.pi7_left = matrix_from_json(field(j, "Pi7L"), "Pi7L");
  k.n1 = matrix_from_json(field(j, "N1"), "N1");
  k.n2 = matrix_from_json(field(j, "N2"), "N2");
  const json& ny = field(j, "noise_y");
  const json& nu = field(j, "noise_u");
  k.noise_y = {number(ny, "mean"), number(ny, "std")};
  k.noise_u = {number(nu, "mean"), number(nu, "std")};
  // Structured keys legitimately carry zero masks, so only the algebraic
  // invariants are enforced here.
  check_key(k, /*require_mask_rank=*/false);
  return k;
}

json to_json(const EncodedConfig& c) {
  return {{"F1", matrix_to_json(c.F1)},       {"F2", matrix_to_json(c.F2)},
          {"F3", matrix_to_json(c.F3)},       {"H1", matrix_to_json(c.H1)},
          {"H2", matrix_to_json(c.H2)},       {"W_root", matrix_to_json(c.W_root)},
          {"Pi6", vector_to_json(c.pi6)},     {"Pi6L", vector_to_json(c.pi6_left)},
          {"Pi8", matrix_to_json(c.pi8)},     {"Pi4", vector_to_json(c.pi4)},
          {"Pi9", matrix_to_json(c.pi9)},     {"alpha", c.alpha},
          {"xhat0", vector_to_json(c.xhat0)}};
}

EncodedConfig config_from_json(const json& j) {
  EncodedConfig c;
  c.F1 = matrix_from_json(field(j, "F1"), "F1");
  c.F2 = matrix_from_json(field(j, "F2"), "F2");
  c.F3 = matrix_from_json(field(j, "F3"), "F3");
  c.H1 = matrix_from_json(field(j, "H1"), "H1");
  c.H2 = matrix_from_json(field(j, "H2"), "H2");
  c.W_root = matrix_from_json(field(j, "W_root"), "W_root");
  c.pi6 = vector_from_json(field(j, "Pi6"), "Pi6");
  c.pi6_left = vector_from_json(field(j, "Pi6L"), "Pi6L");
  c.pi8 = matrix_from_json(field(j, "Pi8"), "Pi8");
  c.pi4 = vector_from_json(field(j, "Pi4"), "Pi4");
  c.pi9 = matrix_from_json(field(j, "Pi9"), "Pi9");
  c.alpha = number(j, "alpha");
  c.xhat0 = vector_from_json(field(j, "xhat0"), "xhat0");
  c.validate();
  return c;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kParseError, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParseError, path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kParseError, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace iidetect
